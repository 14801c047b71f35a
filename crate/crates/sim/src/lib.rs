//! Monte-Carlo harness for the SCMA detectors: configuration, the
//! frame-parallel runner and CSV output.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{Cli, CodebookSource, ConfigError, Origin, SimConfig};
pub use runner::{default_t_max, run_scenario, PointResult, Scenario, ScenarioResult, SimError};
