use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::loss::LossWeights;
use crate::model::transfer::{KernelParams, TransferKind};

/// Inverse-decay learning-rate schedule `eta0 * (1 + a*i)^(-p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub a: f64,
    pub p: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { a: 0.0003, p: 0.75 }
    }
}

/// Hyper-parameters of one training stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub eta0: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub schedule: Schedule,
    /// Learning-rate multiplier of the convolution layers.
    pub backbone_lr_factor: f64,
    pub loss_weights: LossWeights,
    pub transfer: TransferKind,
    pub kernel: KernelParams,
    /// Back-propagate the transfer loss into the target pseudo labels.
    pub pseudo_label_grad: bool,
    pub seed: u64,
}

impl TrainConfig {
    /// Source-only pretraining: regression loss only, eta0 = 0.1, 20 epochs.
    pub fn pretrain() -> Self {
        TrainConfig {
            eta0: 0.1,
            epochs: 20,
            batch_size: 32,
            momentum: 0.9,
            schedule: Schedule::default(),
            backbone_lr_factor: 0.1,
            loss_weights: LossWeights::PRETRAIN,
            transfer: TransferKind::Lmmd,
            kernel: KernelParams::default(),
            pseudo_label_grad: false,
            seed: 0,
        }
    }

    /// Adaptation: all three losses, eta0 = 0.01, 10 epochs.
    pub fn adapt() -> Self {
        TrainConfig {
            eta0: 0.01,
            epochs: 10,
            loss_weights: LossWeights::ADAPT,
            ..Self::pretrain()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta0.is_finite() && self.eta0 > 0.0) {
            return Err(Error::invalid("eta0 must be positive"));
        }
        if self.batch_size < 2 {
            return Err(Error::invalid("batch_size must be at least 2"));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if !(self.backbone_lr_factor > 0.0 && self.backbone_lr_factor <= 1.0) {
            return Err(Error::invalid("backbone_lr_factor must lie in (0, 1]"));
        }
        if !(self.schedule.a >= 0.0 && self.schedule.p >= 0.0) {
            return Err(Error::invalid("schedule constants must be non-negative"));
        }
        self.loss_weights.validate()?;
        self.kernel.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_defaults() {
        let p = TrainConfig::pretrain();
        assert_eq!((p.eta0, p.epochs, p.batch_size, p.momentum), (0.1, 20, 32, 0.9));
        assert_eq!(p.loss_weights, LossWeights::PRETRAIN);
        let a = TrainConfig::adapt();
        assert_eq!((a.eta0, a.epochs), (0.01, 10));
        assert_eq!(a.loss_weights, LossWeights::ADAPT);
        assert_eq!(a.schedule, Schedule { a: 0.0003, p: 0.75 });
        assert_eq!(a.backbone_lr_factor, 0.1);
        p.validate().unwrap();
        a.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        for cfg in [
            TrainConfig {
                eta0: 0.0,
                ..TrainConfig::adapt()
            },
            TrainConfig {
                batch_size: 1,
                ..TrainConfig::adapt()
            },
            TrainConfig {
                backbone_lr_factor: 1.5,
                ..TrainConfig::adapt()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
