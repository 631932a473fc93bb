//! Two-stage training: source-only pretraining, then adaptation.

pub mod config;
pub mod grad;
pub mod normalize;
pub mod optim;
pub mod split;
pub mod trace;
pub mod trainer;

pub use config::{Schedule, TrainConfig};
pub use grad::{compute_gradients, evaluate_loss, LossBreakdown, LossOptions, SourceBatch, TargetBatch};
pub use normalize::{scale_forces, Direction, NormalizationSpec};
pub use optim::{lr_schedule, sgd_momentum_step, SgdMomentum};
pub use split::{split_indices, split_target, SplitIndices, TARGET_SPLIT};
pub use trace::TraceRecord;
pub use trainer::{adapt, pretrain_source, TrainOutcome, UnlabeledImages};
