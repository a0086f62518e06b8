//! Run driver, declarative configuration, and result emission.

mod config;
mod driver;
mod report;

pub use config::{
    load_config, ConfigError, LineSearchKind, Method, SolverConfig, TrSolver, SEED_ENV_VAR,
};
pub use driver::{run, run_objective, HistoryRow, RunError, RunRecord};
pub use report::{
    emit_contour_grid, emit_history_csv, emit_summary, emit_trajectory, read_history_csv,
    read_summary_json, summary_table, verify_linesearch_conditions, GridSpec, ReportError,
    SummaryRow,
};
