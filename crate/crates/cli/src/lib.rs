//! Experiment harness: configuration, the four table experiments and report output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, RawConfig};
pub use experiments::{run, ExperimentError, ExperimentOutput, Render};
pub use output::{exit_code, write_output};
