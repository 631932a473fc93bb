//! Domain-adaptation regression network: encoder, contact classifier, force
//! regressor, loss terms and the model file container.

pub mod conv;
pub mod file;
pub mod loss;
pub mod matrix;
pub mod network;
pub mod params;
pub mod transfer;

pub use file::{ModelMetadata, TrainedModel};
pub use loss::{classification_loss, regression_loss, total_loss, LossWeights};
pub use matrix::Matrix;
pub use network::{classify, encode, regress, sample_input};
pub use params::{Architecture, ModelParams};
pub use transfer::{coral_distance, lmmd, mmd_global, multi_gaussian_kernel, KernelParams, TransferKind};

/// Bottleneck features, one row per sample.
pub type FeatureBatch = Matrix;
