//! Deterministic spatial Foley toolkit.
//!
//! Renders mono sound events into stereo along visual cue trajectories,
//! plans and applies rule-based mixing, upmixes to 5.1, synthesizes
//! spatially annotated datasets and scores spatial/temporal alignment.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod annotate;
pub mod audio;
pub mod cli;
pub mod dataset;
pub mod diag;
pub mod error;
pub mod metrics;
pub mod mix;
pub mod script;
pub mod spatial;
pub mod trajectory;

pub use audio::AudioClip;
pub use diag::{Diagnostic, Diagnostics, Severity};
pub use error::{Error, Result};

/// Version stamped into every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn schema_version() -> u32 {
    SCHEMA_VERSION
}
