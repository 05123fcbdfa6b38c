//! Noise models and the deterministic corruption pipeline.

mod config;
mod engine;
mod seed;

pub use config::{preset, ConfigFile, Gaussian, NoiseConfig, NoiseKind, NoiseMode, Tier};
pub use engine::{
    apply_noise, apply_single_operator, sample_kernel, ChangeLog, ChangeRecord, ChangeSummary,
    ClassSwap, DisplacementSummary, MorphOp, Outcome, ScaleEvent,
};
pub(crate) use engine::{stream, stream_rng};
pub use seed::{named_seed, splitmix64, sub_seed};
