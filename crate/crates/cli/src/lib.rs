//! Batch front end: TOML configs in, versioned JSON reports and CSV tables out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;

pub use config::{ConfigError, ExperimentConfig, OUTPUT_DIR_ENV};
