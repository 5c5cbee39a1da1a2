//! Monte-Carlo harness for the `riscf` estimators: TOML experiment specs,
//! parallel trials with per-trial seeds, NMSE aggregation and CSV/SVG output.

pub mod config;
pub mod error;
pub mod metrics;
pub mod output;
pub mod runner;
pub mod trial;

pub use config::{ExperimentSpec, Method, Preset, SweepVariable};
pub use error::{BenchError, Result};
pub use runner::{find_row, run_experiment, ResultRow};
