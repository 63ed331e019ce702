//! Experiment configuration, multi-seed orchestration and reporting.

pub mod config;
pub mod ledger;
pub mod report;
pub mod run;
pub mod selftest;

pub use config::{
    parse_config, parse_config_str, DataSource, DatasetSpec, ExperimentSpec, SyntheticSource,
    TrainSettings,
};
pub use ledger::{Ledger, ResultRecord, RunKey};
pub use report::{
    aggregate, coldstart_points, emit_report, mean_std, Aggregate, ColdStartPoint, ReportFormat,
};
pub use run::{
    load_dataset, prepare, run_experiment, run_experiment_with, run_single, PreparedData,
};
pub use selftest::{run_selftest, CheckResult};
