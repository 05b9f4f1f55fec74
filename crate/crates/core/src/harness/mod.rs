//! Seeded experiment orchestration: configuration, per-trial records,
//! summaries, reports and the quick self-test.

mod config;
mod experiments;
mod record;
mod report;
mod run;
mod selftest;

pub use config::{ExperimentConfig, Kind, Resolved};
pub use experiments::{run_trial, Outcome};
pub use record::{derived_seed, Line, MetricSummary, Summary, Timing, TrialRecord};
pub use report::{parse_records, plot_data_csv, read_records, render, summary_csv, Records, ReportFormat};
pub use run::{metric_summary, run_experiment, summarize, timing_path, RunOutput};
pub use selftest::{selftest, CheckResult};
