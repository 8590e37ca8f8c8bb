//! The model player: delta-parameterized one-step dynamics ensembles trained on a replay buffer.

mod buffer;
mod ensemble;
mod normalizer;

pub use buffer::ReplayBuffer;
pub use ensemble::{DynamicsEnsemble, ModelTrainConfig, TrainReport};
pub use normalizer::{Normalizer, SCALE_FLOOR};
