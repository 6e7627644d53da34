mod network;
mod normalize;
mod train;

pub use network::{init_network, Activation, FeedforwardNetwork, Gradients, NetworkNorm};
pub use normalize::NormStats;
pub use train::{split_indices, train, EpochRecord, Optimizer, TrainReport, TrainingConfig};
