//! Replication harness: label generation, stratified splits, method fits,
//! evaluation against the true labels, and CSV reports.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{load_config, parse_config, DatasetSource, DatasetSpec, ExperimentConfig, Method};
pub use experiment::{
    cell_seed, evaluate, prepare_dataset, replication_count, run_experiment, stratified_split, PreparedDataset,
    ResultRow,
};
pub use report::{emit_report, read_raw, summarize_raw, summarize_rows, MeanSd, ReportFiles, SummaryRow};
