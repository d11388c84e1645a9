//! Experiment grid over learners, feature counts and task modes.
//!
//! Every cell shares one stratified split of the source data. Features are
//! ranked on the training part of that split only, then each cell keeps the
//! top `k` columns of both parts, trains one learner and evaluates it.

mod config;
mod grid;
mod report;

pub use config::{BenchConfig, DataSource};
pub use grid::{run_grid, run_grid_on_split, CellMetrics, CellOutcome, CellResult, ExperimentGrid};
pub use report::{emit_report, ReportFormat};

/// Process exit codes for a bench run.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const PARTIAL_FAILURE: i32 = 1;
    pub const CONFIG_OR_IO: i32 = 2;
}
