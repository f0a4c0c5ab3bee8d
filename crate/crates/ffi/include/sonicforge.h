#ifndef SONICFORGE_H
#define SONICFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_ARGUMENT,
  SF_STATUS_INVALID_UTF8,
  SF_STATUS_PARSE,
  SF_STATUS_FORMAT,
  SF_STATUS_VALIDATION,
  SF_STATUS_CONFIG,
  SF_STATUS_PLACEMENT,
  SF_STATUS_DOMAIN,
  SF_STATUS_UNREACHABLE,
  SF_STATUS_UNSUPPORTED,
  SF_STATUS_DATA,
  SF_STATUS_SIZE,
  SF_STATUS_DURATION,
  SF_STATUS_CANNOT_NORMALIZE,
  SF_STATUS_IO,
  SF_STATUS_PANIC,
} SfStatus;

typedef enum SfReceiver {
  SF_RECEIVER_MONO = 0,
  /**
   * First-order ambisonics, 4 channels in ACN order.
   */
  SF_RECEIVER_AMBISONICS,
} SfReceiver;

typedef enum SfSampleFormat {
  SF_SAMPLE_FORMAT_PCM16 = 0,
  SF_SAMPLE_FORMAT_FLOAT32,
} SfSampleFormat;

/**
 * Multichannel audio at a fixed sample rate.
 */
typedef struct SfBuffer SfBuffer;

/**
 * Loaded geometry and materials.
 */
typedef struct SfScene SfScene;

/**
 * Parameters for [`sf_trace_rir`]. Start from [`sf_rir_options_default`].
 */
typedef struct SfRirOptions {
  double source[3];
  double receiver[3];
  /**
   * An [`SfReceiver`] value.
   */
  uint32_t receiver_kind;
  uint32_t sample_rate;
  size_t n_rays;
  double max_ir_seconds;
  size_t max_bounces;
  uint64_t seed;
} SfRirOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sf_last_error(void);

/**
 * Loads an OBJ mesh and its JSON material table.
 *
 * # Safety
 * Paths must be nul-terminated strings; `out` must be writable.
 */
enum SfStatus sf_scene_load(const char *mesh_path,
                            const char *materials_path,
                            struct SfScene **out);

/**
 * Axis-aligned room `[0, dims]` with the same absorption on every wall and band.
 *
 * # Safety
 * `out` must be writable.
 */
enum SfStatus sf_scene_shoebox(double x,
                               double y,
                               double z,
                               double absorption,
                               struct SfScene **out);

/**
 * # Safety
 * `scene` must be null or a handle from this library not yet freed.
 */
void sf_scene_free(struct SfScene *scene);

/**
 * Number of triangles, or 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or a live handle.
 */
size_t sf_scene_surface_count(const struct SfScene *scene);

struct SfRirOptions sf_rir_options_default(void);

/**
 * Traces a room impulse response into a new buffer.
 *
 * # Safety
 * `scene` and `options` must be live; `out` must be writable.
 */
enum SfStatus sf_trace_rir(const struct SfScene *scene,
                           const struct SfRirOptions *options,
                           struct SfBuffer **out);

/**
 * Copies `len` samples into a new mono buffer.
 *
 * # Safety
 * `samples` must point to `len` readable values; `out` must be writable.
 */
enum SfStatus sf_buffer_from_mono(const double *samples,
                                  size_t len,
                                  uint32_t sample_rate,
                                  struct SfBuffer **out);

/**
 * # Safety
 * `buffer` must be null or a handle from this library not yet freed.
 */
void sf_buffer_free(struct SfBuffer *buffer);

/**
 * # Safety
 * `buffer` must be null or a live handle.
 */
size_t sf_buffer_channels(const struct SfBuffer *buffer);

/**
 * Samples per channel.
 *
 * # Safety
 * `buffer` must be null or a live handle.
 */
size_t sf_buffer_len(const struct SfBuffer *buffer);

/**
 * # Safety
 * `buffer` must be null or a live handle.
 */
uint32_t sf_buffer_sample_rate(const struct SfBuffer *buffer);

/**
 * Read-only view of one channel, valid while the buffer lives. Null when
 * the handle is null or `channel` is out of range.
 *
 * # Safety
 * `buffer` must be null or a live handle.
 */
const double *sf_buffer_channel(const struct SfBuffer *buffer, size_t channel);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum SfStatus sf_read_wav(const char *path, struct SfBuffer **out);

/**
 * Writes `buffer` as WAV. `format` is an [`SfSampleFormat`] value.
 *
 * # Safety
 * `path` must be a nul-terminated string; `buffer` must be live.
 */
enum SfStatus sf_write_wav(const char *path, const struct SfBuffer *buffer, uint32_t format);

/**
 * Convolves a mono `dry` signal with every channel of `ir`.
 *
 * # Safety
 * `dry` and `ir` must be live; `out` must be writable.
 */
enum SfStatus sf_convolve(const struct SfBuffer *dry,
                          const struct SfBuffer *ir,
                          struct SfBuffer **out);

/**
 * Integrated loudness in LUFS. Digital silence yields negative infinity.
 *
 * # Safety
 * `buffer` must be live; `lufs` must be writable.
 */
enum SfStatus sf_measure_lufs(const struct SfBuffer *buffer, double *lufs);

/**
 * Scales `buffer` to `target` LUFS into a new buffer. `gain` may be null.
 *
 * # Safety
 * `buffer` must be live; `out` must be writable; `gain` null or writable.
 */
enum SfStatus sf_normalize(const struct SfBuffer *buffer,
                           double target,
                           struct SfBuffer **out,
                           double *gain);

/**
 * Scale-invariant SNR in dB, clamped to ±60.
 *
 * # Safety
 * `reference` and `estimate` must point to `len` readable values; `db` must be writable.
 */
enum SfStatus sf_si_snr(const double *reference,
                        const double *estimate,
                        size_t len,
                        bool zero_mean,
                        double *db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SONICFORGE_H */
