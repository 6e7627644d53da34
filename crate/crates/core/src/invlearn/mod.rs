//! Inverse learning: feature templates, datasets from baseline logs, training
//! and the runtime reference generator.

mod data;
mod features;
mod generator;

pub use data::{
    build_features, collect_baseline_data, generate_training_trajectories,
    taylor_correlation_bound, DatasetOptions, TrainingDataset, Trajectory, TrajectoryLog,
};
pub use features::{FeatureEncoding, FeatureSpec, InputSelection};
pub use generator::{train_inverse, NetworkPreset, ReferenceGenerator};
