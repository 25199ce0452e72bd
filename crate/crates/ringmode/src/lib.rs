//! Scenario runner for the ring-road lab: config files, CSV artifacts,
//! analysis reports, Monte Carlo variance studies and parameter sweeps on top
//! of `ringmode-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod report;
pub mod runner;
pub mod sweep;

pub use config::{Overrides, Scenario, ScenarioConfig};
pub use error::{ConfigError, Error, Result};
pub use runner::{run_analysis, run_scenario, run_sweep, RunArtifacts};
