//! Force estimation for optical tactile sensors, and unsupervised transfer of
//! a trained force model to a new sensor.
//!
//! A small convolutional encoder maps a contact/reference image pair to a
//! bottleneck feature. A sigmoid head regresses normalised `(fx, fy, fz)` and a
//! softmax head predicts the contact class. Adaptation to an unlabeled target
//! sensor minimises the source regression and classification losses plus a
//! class-weighted MMD between source and target features, with the target
//! classes taken from the classifier's own predictions.
//!
//! - [`sim`] renders labeled synthetic sensors with controllable domain gaps.
//! - [`model`] holds the network, the losses and the model file format.
//! - [`train`] has the pretraining and adaptation loops.
//! - [`eval`] computes metrics, comparison tables and feature embeddings.
//! - [`io`] reads and writes manifests and run configs.
//! - [`experiment`] strings these together for end-to-end runs.
//! - [`cli`] backs the `tactile-da` binary.

pub mod cli;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod model;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
