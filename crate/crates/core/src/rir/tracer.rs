//! Forward stochastic ray tracer with a spherical receiver.
//!
//! Each ray carries one energy value per octave band, starting at `1/N` so a
//! source emits unit energy per band. Surfaces keep the reflected fraction
//! `1 - absorption - transmission`; the transmitted part only reaches the
//! receiver through the deterministic direct path. A ray bounces diffusely
//! with probability equal to the band-averaged scattering coefficient and
//! specularly otherwise. Every pass through the receiver sphere deposits the
//! ray's energy in the time bin of its closest approach. The first segment of
//! every ray is excluded, since the direct sound is added analytically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use rayon::prelude::*;

use super::{ImpulseResponse, ReceiverKind, RirRequest, DEFAULT_BIN_WIDTH, SPEED_OF_SOUND};
use crate::dsp::{add_fractional_tap, OctaveBank};
use crate::error::Result;
use crate::scene::{BandArray, Scene, Vec3, BANDS, RAY_EPSILON};

/// Rays per work item. Work items are reduced in index order, so the result
/// does not depend on how many threads ran them.
const RAYS_PER_CHUNK: usize = 512;

/// A ray is dropped once every band has decayed below this fraction (-60 dB).
const ENERGY_FLOOR: f64 = 1e-6;

/// Air attenuation at 20 °C, 50 % relative humidity, in dB per meter.
const AIR_DB_PER_M: BandArray = [0.00044, 0.00131, 0.00273, 0.00466, 0.00986, 0.0328];

/// Energy collected at one receiver position, per band and time bin.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyHistogram {
    /// `bins[channel][band][bin]`, fraction of emitted energy per band.
    pub bins: Vec<Vec<Vec<f64>>>,
    pub bin_width: f64,
}

impl EnergyHistogram {
    pub fn band_totals(&self, channel: usize) -> BandArray {
        let mut out = [0.0; BANDS];
        for (o, band) in out.iter_mut().zip(&self.bins[channel]) {
            *o = band.iter().sum();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectPath {
    pub distance: f64,
    pub delay_seconds: f64,
    /// Pressure amplitude per band, including occlusion and air loss.
    pub amplitude: BandArray,
    /// Unit vector pointing from the receiver toward the source.
    pub arrival: Vec3,
}

/// Tracing output for one receiver position.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTrace {
    pub position: Vec3,
    pub seed: u64,
    /// `energy[band][bin]`
    pub energy: Vec<Vec<f64>>,
    /// Ambisonics only: `directional[axis][band][bin]` holds energy weighted by
    /// the Y, Z, X first-order gains of each arrival.
    pub directional: Option<Vec<Vec<Vec<f64>>>>,
    pub direct: DirectPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub elements: Vec<ElementTrace>,
    pub bin_width: f64,
    pub n_bins: usize,
}

impl Trace {
    /// One histogram channel per traced position (the W channel for ambisonics).
    pub fn histogram(&self) -> EnergyHistogram {
        EnergyHistogram {
            bins: self.elements.iter().map(|e| e.energy.clone()).collect(),
            bin_width: self.bin_width,
        }
    }
}

/// First-order SN3D gains (Y, Z, X) for a world-space arrival direction.
/// The ambisonic frame has X forward (world -z), Y left (world -x), Z up (world +y).
fn foa_gains(arrival: Vec3) -> [f64; 3] {
    [-arrival.x, arrival.y, -arrival.z]
}

fn orthonormal_basis(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() > 0.9 {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let t = n.cross(helper).normalized().expect("non-parallel helper");
    let b = n.cross(t);
    (t, b)
}

fn cosine_hemisphere(rng: &mut ChaCha8Rng, n: Vec3) -> Vec3 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let r = u1.sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    let (t, b) = orthonormal_basis(n);
    let d = t * (r * phi.cos()) + b * (r * phi.sin()) + n * (1.0 - u1).max(0.0).sqrt();
    d.normalized().unwrap_or(n)
}

struct Accumulator {
    energy: Vec<Vec<f64>>,
    directional: Option<Vec<Vec<Vec<f64>>>>,
}

impl Accumulator {
    fn new(n_bins: usize, ambisonic: bool) -> Self {
        Accumulator {
            energy: vec![vec![0.0; n_bins]; BANDS],
            directional: ambisonic.then(|| vec![vec![vec![0.0; n_bins]; BANDS]; 3]),
        }
    }

    fn add(&mut self, other: &Accumulator) {
        for (a, b) in self.energy.iter_mut().zip(&other.energy) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        if let (Some(a), Some(b)) = (&mut self.directional, &other.directional) {
            for (aa, bb) in a.iter_mut().zip(b) {
                for (x, y) in aa.iter_mut().zip(bb) {
                    for (p, q) in x.iter_mut().zip(y) {
                        *p += q;
                    }
                }
            }
        }
    }
}

struct RayContext<'a> {
    scene: &'a Scene,
    source: Vec3,
    receiver: Vec3,
    radius: f64,
    max_distance: f64,
    max_bounces: usize,
    bin_width: f64,
    n_bins: usize,
    air: Option<BandArray>,
}

impl RayContext<'_> {
    /// Receiver test on the segment `origin + s·dir, s ∈ [0, len]`.
    fn detect(&self, origin: Vec3, dir: Vec3, len: f64) -> Option<f64> {
        let oc = self.receiver - origin;
        let s = oc.dot(dir);
        let d2 = oc.length_squared() - s * s;
        let r2 = self.radius * self.radius;
        if d2 > r2 {
            return None;
        }
        let half = (r2 - d2).sqrt();
        if s + half <= 0.0 || s - half >= len {
            return None;
        }
        Some(s.clamp(0.0, len))
    }

    fn trace_ray(&self, rng: &mut ChaCha8Rng, e0: f64, acc: &mut Accumulator) {
        let v: [f64; 3] = UnitSphere.sample(rng);
        let mut dir = Vec3::from(v);
        let mut pos = self.source;
        let mut energy = [e0; BANDS];
        let mut travelled = 0.0;

        for bounce in 0..=self.max_bounces {
            let remaining = self.max_distance - travelled;
            if remaining <= 0.0 {
                break;
            }
            let hit = self.scene.ray_intersect(pos, dir, f64::INFINITY);
            let seg_len = hit.map_or(remaining, |h| h.distance.min(remaining));

            if bounce > 0 {
                if let Some(s) = self.detect(pos, dir, seg_len) {
                    let path = travelled + s;
                    let bin = (path / SPEED_OF_SOUND / self.bin_width) as usize;
                    if bin < self.n_bins {
                        let mut deposit = energy;
                        if let Some(air) = &self.air {
                            for (e, a) in deposit.iter_mut().zip(air) {
                                *e *= 10f64.powf(-a * s / 10.0);
                            }
                        }
                        for (band, e) in deposit.iter().enumerate() {
                            acc.energy[band][bin] += e;
                        }
                        if let Some(dirs) = &mut acc.directional {
                            let gains = foa_gains(-dir);
                            for (axis, g) in gains.iter().enumerate() {
                                for (band, e) in deposit.iter().enumerate() {
                                    dirs[axis][band][bin] += e * g;
                                }
                            }
                        }
                    }
                }
            }

            let Some(hit) = hit else { break };
            if hit.distance >= remaining {
                break;
            }
            travelled += hit.distance;
            let coeffs = self.scene.surface_coefficients(hit.surface);
            for (band, e) in energy.iter_mut().enumerate() {
                *e *= coeffs.reflectance(band);
                if let Some(air) = &self.air {
                    *e *= 10f64.powf(-air[band] * hit.distance / 10.0);
                }
            }
            if energy.iter().all(|&e| e < ENERGY_FLOOR * e0) {
                break;
            }
            let point = pos + dir * hit.distance;
            let scatter: f64 = rng.random();
            dir = if scatter < coeffs.mean_scattering() {
                cosine_hemisphere(rng, hit.normal)
            } else {
                (dir - hit.normal * (2.0 * dir.dot(hit.normal)))
                    .normalized()
                    .unwrap_or(hit.normal)
            };
            pos = point + hit.normal * RAY_EPSILON;
        }
    }
}

fn element_seed(seed: u64, element: usize) -> u64 {
    seed ^ element as u64
}

fn trace_element(scene: &Scene, req: &RirRequest, position: Vec3, seed: u64) -> ElementTrace {
    let ambisonic = matches!(req.receiver.kind, ReceiverKind::AmbisonicsFo);
    let n_bins = (req.max_ir_seconds / DEFAULT_BIN_WIDTH).ceil() as usize;
    let air = req.air_absorption.then_some(AIR_DB_PER_M);
    let ctx = RayContext {
        scene,
        source: req.source,
        receiver: position,
        radius: req.receiver.capture_radius,
        max_distance: req.max_ir_seconds * SPEED_OF_SOUND,
        max_bounces: req.max_bounces,
        bin_width: DEFAULT_BIN_WIDTH,
        n_bins,
        air,
    };
    let e0 = 1.0 / req.n_rays as f64;
    let n_chunks = req.n_rays.div_ceil(RAYS_PER_CHUNK);
    let partials: Vec<Accumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = Accumulator::new(n_bins, ambisonic);
            let lo = chunk * RAYS_PER_CHUNK;
            let hi = (lo + RAYS_PER_CHUNK).min(req.n_rays);
            for ray in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(ray as u64);
                ctx.trace_ray(&mut rng, e0, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(n_bins, ambisonic);
    for p in &partials {
        total.add(p);
    }

    let distance = position.distance(req.source);
    let occlusion = scene.occlusion_factor(req.source, position);
    let mut amplitude = [0.0; BANDS];
    for (band, a) in amplitude.iter_mut().enumerate() {
        *a = occlusion[band].sqrt() / distance;
        if let Some(air) = &air {
            *a *= 10f64.powf(-air[band] * distance / 20.0);
        }
    }
    ElementTrace {
        position,
        seed,
        energy: total.energy,
        directional: total.directional,
        direct: DirectPath {
            distance,
            delay_seconds: distance / SPEED_OF_SOUND,
            amplitude,
            arrival: (req.source - position) / distance,
        },
    }
}

/// Runs the tracer without synthesizing pressure signals.
pub fn trace_energy(scene: &Scene, req: &RirRequest) -> Result<Trace> {
    req.validate(scene)?;
    let elements = req
        .receiver
        .element_positions()
        .into_iter()
        .enumerate()
        .map(|(i, p)| trace_element(scene, req, p, element_seed(req.seed, i)))
        .collect();
    Ok(Trace {
        elements,
        bin_width: DEFAULT_BIN_WIDTH,
        n_bins: (req.max_ir_seconds / DEFAULT_BIN_WIDTH).ceil() as usize,
    })
}

/// Turns band energies into pressure: per-band envelopes modulate one shared
/// Gaussian carrier, the octave bank recombines the bands, and the direct
/// tap is superposed.
fn synthesize(
    trace: &ElementTrace,
    req: &RirRequest,
    bank: &OctaveBank,
    bin_width: f64,
) -> Vec<Vec<f64>> {
    let len = req.ir_len();
    let fs = req.sample_rate as f64;
    // Intercepted energy fraction to squared pressure at 1 m reference.
    let r = req.receiver.capture_radius;
    let scale = 4.0 / (r * r);

    let mut rng = ChaCha8Rng::seed_from_u64(trace.seed);
    rng.set_stream(u64::MAX);
    let carrier: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();

    let bin_of = |t: usize| ((t as f64 / fs) / bin_width) as usize;
    let mut counts = vec![0usize; trace.energy[0].len()];
    for t in 0..len {
        if let Some(c) = counts.get_mut(bin_of(t)) {
            *c += 1;
        }
    }
    let envelope = |band: usize, t: usize| -> f64 {
        let bin = bin_of(t);
        match trace.energy[band].get(bin) {
            Some(&e) if e > 0.0 => (e * scale / counts[bin] as f64).sqrt(),
            _ => 0.0,
        }
    };

    let delay = trace.direct.delay_seconds * fs;
    let n_out = match trace.directional {
        Some(_) => 4,
        None => 1,
    };
    let arrival_gains = foa_gains(trace.direct.arrival);
    (0..n_out)
        .map(|ch| {
            let bands: Vec<Vec<f64>> = (0..BANDS)
                .map(|band| {
                    let mut sig: Vec<f64> = (0..len)
                        .map(|t| {
                            let env = envelope(band, t);
                            if env == 0.0 {
                                return 0.0;
                            }
                            let gain = match (&trace.directional, ch) {
                                (_, 0) | (None, _) => 1.0,
                                (Some(d), _) => {
                                    let bin = bin_of(t);
                                    d[ch - 1][band][bin] / trace.energy[band][bin]
                                }
                            };
                            env * gain * carrier[t]
                        })
                        .collect();
                    let tap_gain = if ch == 0 { 1.0 } else { arrival_gains[ch - 1] };
                    add_fractional_tap(&mut sig, delay, trace.direct.amplitude[band] * tap_gain);
                    sig
                })
                .collect();
            bank.recombine(&bands)
        })
        .collect()
}

/// Traces the request and synthesizes the multi-channel pressure response.
pub fn trace_rir(scene: &Scene, req: &RirRequest) -> Result<ImpulseResponse> {
    let trace = trace_energy(scene, req)?;
    Ok(rir_from_trace(&trace, req))
}

/// Pressure response for a trace produced by [`trace_energy`] with `req`.
pub fn rir_from_trace(trace: &Trace, req: &RirRequest) -> ImpulseResponse {
    let bank = OctaveBank::new(req.sample_rate);
    let channels = trace
        .elements
        .iter()
        .flat_map(|e| synthesize(e, req, &bank, trace.bin_width))
        .collect();
    ImpulseResponse {
        channels,
        sample_rate: req.sample_rate,
        source_position: req.source,
        receiver_center: req.receiver.center,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rir::ReceiverConfig;
    use crate::scene::{shoebox, BandCoefficients, MaterialTable, MeshBuilder};

    fn request(source: Vec3, receiver: ReceiverConfig) -> RirRequest {
        let mut req = RirRequest::new(source, receiver, 16_000, 7);
        req.n_rays = 2000;
        req.max_ir_seconds = 0.5;
        req
    }

    #[test]
    fn foa_frame_mapping() {
        // Forward (world -z) is ambisonic +X.
        assert_eq!(foa_gains(Vec3::new(0.0, 0.0, -1.0)), [0.0, 0.0, 1.0]);
        // Left (world -x) is +Y, up is +Z.
        assert_eq!(foa_gains(Vec3::new(-1.0, 0.0, 0.0)), [1.0, 0.0, -0.0]);
        assert_eq!(foa_gains(Vec3::new(0.0, 1.0, 0.0)), [-0.0, 1.0, -0.0]);
    }

    #[test]
    fn cosine_samples_stay_in_hemisphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Vec3::new(0.0, 0.0, 1.0);
        let mut mean_cos = 0.0;
        for _ in 0..20_000 {
            let d = cosine_hemisphere(&mut rng, n);
            assert!(d.dot(n) >= 0.0);
            assert!((d.length() - 1.0).abs() < 1e-12);
            mean_cos += d.dot(n);
        }
        // E[cos θ] under a cosine-weighted hemisphere is 2/3.
        assert!((mean_cos / 20_000.0 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn placement_errors() {
        let scene = shoebox(Vec3::new(5.0, 4.0, 3.0), BandCoefficients::flat(0.3)).unwrap();
        let inside = Vec3::new(1.0, 1.0, 1.0);
        let outside = Vec3::new(6.0, 1.0, 1.0);
        let err = trace_energy(&scene, &request(outside, ReceiverConfig::mono(inside)));
        assert!(matches!(err, Err(crate::Error::Placement(_))));
        let err = trace_energy(&scene, &request(inside, ReceiverConfig::mono(outside)));
        assert!(matches!(err, Err(crate::Error::Placement(_))));
        let near = inside + Vec3::new(1e-4, 0.0, 0.0);
        let err = trace_energy(&scene, &request(inside, ReceiverConfig::mono(near)));
        assert!(matches!(err, Err(crate::Error::Placement(_))));
    }

    #[test]
    fn anechoic_direct_tap() {
        let scene = shoebox(Vec3::new(20.0, 10.0, 20.0), BandCoefficients::flat(1.0)).unwrap();
        let src = Vec3::new(5.0, 5.0, 10.0);
        let rcv = src + Vec3::new(3.43, 0.0, 0.0);
        let ir = trace_rir(&scene, &request(src, ReceiverConfig::mono(rcv))).unwrap();
        assert_eq!(ir.len(), 8000);
        let ch = &ir.channels[0];
        let peak = ch
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        assert_eq!(peak.0, 160);
        assert!((peak.1 - 1.0 / 3.43).abs() < 1e-6, "{}", peak.1);
        let rest: f64 = ch
            .iter()
            .enumerate()
            .filter(|(i, _)| (*i as i64 - 160).abs() > 16)
            .map(|(_, v)| v * v)
            .sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let scene = shoebox(
            Vec3::new(5.0, 4.0, 3.0),
            BandCoefficients::flat(0.2).with_scattering(0.5),
        )
        .unwrap();
        let req = request(
            Vec3::new(1.0, 1.0, 1.0),
            ReceiverConfig::mono(Vec3::new(4.0, 2.0, 1.5)),
        );
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| trace_rir(&scene, &req).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| trace_rir(&scene, &req).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn ambisonic_w_matches_mono() {
        let scene = shoebox(
            Vec3::new(5.0, 4.0, 3.0),
            BandCoefficients {
                absorption: [0.1, 0.15, 0.2, 0.3, 0.35, 0.4],
                scattering: [0.3; BANDS],
                transmission: [0.0; BANDS],
            },
        )
        .unwrap();
        let src = Vec3::new(1.0, 1.0, 1.0);
        let center = Vec3::new(3.5, 2.0, 2.0);
        let mono = trace_rir(&scene, &request(src, ReceiverConfig::mono(center))).unwrap();
        let foa = trace_rir(&scene, &request(src, ReceiverConfig::ambisonics(center))).unwrap();
        assert_eq!(foa.num_channels(), 4);
        let (em, ew) = (mono.energy(0), foa.energy(0));
        assert!(((em - ew) / em).abs() < 1e-6);
        // Directional channels never exceed the omni channel in energy.
        for ch in 1..4 {
            assert!(foa.energy(ch) <= ew * (1.0 + 1e-9));
        }
    }

    #[test]
    fn array_traces_each_element() {
        let scene = shoebox(Vec3::new(5.0, 4.0, 3.0), BandCoefficients::flat(0.4)).unwrap();
        let receiver = ReceiverConfig::array(
            Vec3::new(3.0, 2.0, 1.5),
            vec![Vec3::new(-0.1, 0.0, 0.0), Vec3::new(0.1, 0.0, 0.0)],
        );
        let req = request(Vec3::new(1.0, 1.0, 1.0), receiver);
        let trace = trace_energy(&scene, &req).unwrap();
        assert_eq!(trace.elements.len(), 2);
        assert_eq!(trace.elements[0].seed, 7);
        assert_eq!(trace.elements[1].seed, 7 ^ 1);
        let ir = trace_rir(&scene, &req).unwrap();
        assert_eq!(ir.num_channels(), 2);
        assert_ne!(ir.channels[0], ir.channels[1]);
    }

    #[test]
    fn absorbing_panel_never_adds_energy() {
        let mut materials = MaterialTable::new(BandCoefficients::flat(0.2));
        let black = materials.insert("black", BandCoefficients::flat(1.0));
        let dims = Vec3::new(8.0, 3.0, 6.0);
        let open = {
            let mut b = MeshBuilder::new();
            b.add_box(Vec3::ZERO, dims, 0);
            b.build(materials.clone(), 1.5).unwrap()
        };
        let blocked = {
            let mut b = MeshBuilder::new();
            b.add_box(Vec3::ZERO, dims, 0);
            b.add_panel(0, 4.0, [0.5, 1.0], [2.5, 5.0], black);
            b.build(materials, 1.5).unwrap()
        };
        let req = request(
            Vec3::new(2.0, 1.5, 3.0),
            ReceiverConfig::mono(Vec3::new(6.0, 1.5, 3.0)),
        );
        let a = trace_energy(&open, &req).unwrap();
        let b = trace_energy(&blocked, &req).unwrap();
        for band in 0..BANDS {
            for (x, y) in a.elements[0].energy[band].iter().zip(&b.elements[0].energy[band]) {
                assert!(y <= x);
            }
            assert_eq!(b.elements[0].direct.amplitude[band], 0.0);
        }
    }
}
