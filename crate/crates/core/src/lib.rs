//! Behavioral watermarking for LLM-driven agents.
//!
//! A watermark is embedded by biasing an agent's high-level behavior choice
//! toward a keyed, per-round subset of its behavior catalog, and detected from
//! the resulting behavior trace with a one-sided binomial z-test.
//!
//! The crate is `no_std` with `alloc`. File formats, the LLM client and the
//! experiment CLI live in the `agent-guide` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod behavior;
pub mod detect;
pub mod embed;
mod error;
pub mod guidance;
pub mod mock;
pub mod persona;
pub mod sampler;
pub mod sim;
pub mod trace;

pub use behavior::{
    normalize_distribution, Action, Behavior, BehaviorCatalog, BehaviorDistribution, Event,
    Memory, MemoryRecord, NORMALIZATION_EPSILON,
};
pub use detect::{
    calibrate_fpr, count_guided_hits, detect, exact_null_fpr, expected_hit_rate, z_statistic, DetectionConfig,
    DetectionReport, HitCount,
};
pub use embed::{apply_bias, embed_round, sample_behavior, sample_index, EmbedOutcome};
pub use error::{Error, GeneratorError, Result};
pub use guidance::{
    derive_params, params_for_round, prf, select_guided_subset, GuidanceConfig, GuidanceMode,
    GuidanceParams, GuidedSubset, WatermarkKey,
};
pub use mock::{MockGenerator, ProfileTable};
pub use persona::{Activity, Mood, Persona};
pub use sampler::SamplerState;
pub use sim::{simulate_agent, Generator, RawDistribution, Watermark};
pub use trace::{Trace, TraceHeader, TraceRecord};
