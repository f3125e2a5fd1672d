//! File formats: CSV matrices, key=value configuration, JSON reports and
//! two-column trace exports.

mod config;
mod matrix;
mod report;

pub use config::{parse_config, read_config, ConfigMap};
pub use matrix::{parse_matrix_csv, read_matrix_csv, write_dense_csv, write_matrix_csv};
pub use report::{
    read_report, write_report, write_trace_csv, ConvergenceReport, Document, FitReport, GenReport, Report,
    SelectReport, TraceSeries, SCHEMA_VERSION,
};
