//! Batch front-end for the Oldroyd-B solver: configuration, the single-run,
//! linear-verification and viscosity-sweep experiments, and their outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{apply_override, validate_config, RunConfig, Validated};
pub use error::{CliError, Result};
