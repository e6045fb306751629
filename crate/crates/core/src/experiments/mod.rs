//! Synthetic scenarios, parameter sweeps and empirical rate checks.

mod config;
mod plots;
mod scenario;
mod sweep;
mod verify;

pub use config::{
    rate, DictionaryConfig, DictionaryFamily, EpsilonRule, NoiseConfig, ScenarioConfig, TargetConfig, Task,
};
pub use plots::{emit_plots, validate_plot_spec, PLOT_FILES, VEGA_LITE_SCHEMA};
pub use scenario::{cell_seed, generate, Population, Scenario, TaskProblem};
pub use sweep::{read_records_csv, record_columns, run_sweep, write_records_csv, RunRecord};
pub use verify::{
    log_log_slope, median, planted_records, verify_rates, RateMode, RateParams, RatePoint, RateReport, SubspaceTerms,
};
