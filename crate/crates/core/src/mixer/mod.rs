//! Dataset group construction: randomized placement, clip arrangement into
//! fixed-length stems, rendering, and metadata.

mod arrange;
mod build;
mod config;
mod metadata;
mod plan;
mod pools;

pub use arrange::{arrange_stem, layout, seconds_to_samples, Arrangement};
pub use build::{
    build_group, compose_mixture, derive_seed, render_along, render_config, GroupOutput,
    ManualRender, MixTask, Mixture, NoiseKind, Stems,
};
pub use config::{
    AudioSettings, Environment, GenerationConfig, MicrophoneSection, MicrophoneType, MixConfig,
    MixerOverrides, Movement, NoiseSource, NormalizeStage, RirOverrides, RirSettings, SoundSource,
    DEFAULT_CLIP_SECONDS, DEFAULT_SAMPLE_RATE,
};
pub use metadata::{
    metadata_violations, validate_metadata, BedMeta, MixMetadata, SpeechMeta, BED_KEYS,
    METADATA_SCHEMA, SPEECH_KEYS,
};
pub use plan::{
    plan_group, MixPlan, NoisePlan, Planner, Segment, SourcePlan, MAX_PLACEMENT_TRIES,
    N_SOURCES, NOISE_MAX_GAP, SEGMENTS_PER_NOISE, SPEECH_MAX_GAP, UTTERANCES_PER_SOURCE,
};
pub use pools::{ClipKind, ClipStore, FileStore, MemoryStore, PoolEntry, Pools};
