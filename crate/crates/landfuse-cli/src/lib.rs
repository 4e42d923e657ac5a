//! Companion crate to `landfuse-core`: file formats, the scenario
//! orchestration with wall-clock measurement, and the `landfuse` command
//! line.

pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod pipeline;

pub use error::{CliError, Result};
