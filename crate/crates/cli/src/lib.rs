//! Experiment harness around `cauchy_core`: configuration and presets, the
//! `run` / `tau` / `sweep` / `check` pipelines, and CSV, JSON and SVG artifacts.

pub mod artifacts;
pub mod check;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod svg;

pub use config::{overlay_toml, preset, ExperimentConfig, PRESETS};
pub use error::{CliError, CliResult};
