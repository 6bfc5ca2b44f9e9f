//! Scenario files, runs and artifacts for the heat-diffusion Nevanlinna toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;
pub mod scenarios;

pub use config::{load_config, Check, ConfigError, ScenarioConfig};
pub use run::{run, CheckOutcome, HarnessError, RunOptions, RunRecord, Status};
pub use scenarios::{list_builtin_scenarios, resolve, ScenarioEntry};
