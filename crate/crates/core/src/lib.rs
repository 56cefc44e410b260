//! Monte Carlo simulation and analysis of two-station Bell-CHSH
//! experiments.
//!
//! * [`model`]: singlet-state predictions and CHSH algebra.
//! * [`lhv`]: local hidden-variable models, deterministic and with
//!   setting-dependent non-detection.
//! * [`sim`]: trial-level simulation producing [`eventlog::EventLog`]s.
//! * [`estimators`]: counts tables, fair-sampling and inclusive
//!   correlators, CHSH reports.
//! * [`spacetime`]: lightcone audits of station timelines.

pub mod config;
pub mod estimators;
pub mod eventlog;
pub mod lhv;
pub mod model;
pub mod outcome;
pub mod report;
pub mod rng;
pub mod sim;
pub mod spacetime;

pub use config::{config_digest, parse_config, preset, ConfigError};
pub use estimators::{chsh_report, tabulate, ChshReport, CountsTable, Mode, SettingChoice};
pub use eventlog::EventLog;
pub use model::{Angle, ChshGrouping, SettingsPair, Visibility};
pub use outcome::{Outcome, Sign};
pub use sim::{run_experiment, run_experiment_with_threads, ExperimentConfig, SourceModel};

/// Version string embedded in manifests and reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
