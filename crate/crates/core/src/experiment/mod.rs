//! Scenario runs, metrics and result export.

mod export;
mod metrics;
mod pipeline;
pub mod recovery;
mod runner;
mod signals;

pub use export::{
    export_results, read_summary, read_trace, summarize, trace_file_name, SummaryRow,
};
pub use metrics::{reduction_pct, rms_error, rms_error_nd};
pub use pipeline::{
    build_registry, build_system, collect_training_logs, train_generators, training_trajectories,
    ArtifactBundle, GeneratorReport, NamedGenerator,
};
pub use runner::{evaluate, ExperimentContext, ExperimentResult};
pub use signals::{
    load_trajectory_csv, moving_average, multisine_trajectories, preprocess_drawing,
    resample_cubic, synthesize_drawing, DrawingOptions, PreparedDrawing,
};
