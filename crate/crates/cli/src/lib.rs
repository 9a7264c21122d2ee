//! Experiment runner for the degenloop simulator: JSON configs, figure
//! presets, parameter sweeps and verification reports.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod format;
pub mod presets;
pub mod sweep;
pub mod verify;

pub use error::CliError;
