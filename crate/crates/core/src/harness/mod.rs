//! Config-driven experiment runner.

pub mod config;
pub mod pipeline;
pub mod run;
pub mod theorem1;

pub use config::{DataSource, ExperimentConfig, InterventionConfig, InterventionKind, MethodConfig, MethodKind, SweepConfig};
pub use pipeline::{fit_pipeline, FittedPipeline};
pub use run::{
    apply_point, format_params, grid_points, mean_stderr, run_experiment, sweep_and_aggregate, write_outputs,
    write_theorem1, Failure, GridPoint, RawRecord, RunResult, SummaryRow, METRICS,
};
pub use theorem1::{mixture_grid, theorem1_report, Theorem1Report};
