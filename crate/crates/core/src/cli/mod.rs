//! Scenario runner: configuration resolution and the named experiments.

mod config;
mod scenario;

pub use config::{load_config, parse_config, parse_key_values, ConfigError, FlagOverrides, ScenarioConfig, ScenarioName, KEYS};
pub use scenario::{
    controller_sim, delta_tag, ip_sim, ipd_gains, most_stable_cell, pid_gains, read_metrics, run_compare, run_scenario,
    trace_file_name, winner_of, CompareEntry, CompareReport, ControllerKind, ScenarioError, ScenarioOutcome,
};
