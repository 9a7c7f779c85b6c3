//! Dataset ingestion, end-to-end runs and report files.

mod dataset;
mod report;
mod run;

pub use dataset::{
    load_dataset, load_dataset_with, validate, Dataset, DatasetManifest, Problem, ResolutionPolicy,
    DERIVED_FIXATION_PERCENTILE,
};
pub use report::{
    emit_report, load_report, report_diff, ReportDiff, RowDelta, FEATURES_CSV, MANIFEST_JSON,
    REPORT_CSV, REPORT_JSON,
};
pub use run::{
    effective_config, run_pipeline, EvaluationReport, Method, ReportRow, RunConfig, RunManifest,
    Setting, SettingManifest, SettingReport, RANDOM_ASSIGN_CLUSTERS,
};
