//! SGD with momentum, an inverse-decay schedule and a reduced learning rate
//! for the convolution backbone.

use crate::error::{Error, Result};
use crate::model::params::{ModelParams, ParamGroup};
use crate::train::config::Schedule;

/// `eta0 * (1 + a*i)^(-p)` at iteration `i`.
pub fn lr_schedule(eta0: f64, iteration: u64, schedule: &Schedule) -> f64 {
    eta0 * (1.0 + schedule.a * iteration as f64).powf(-schedule.p)
}

/// One momentum update on a flat parameter slice:
/// `v = momentum * v + g; theta -= lr * factor * v`.
pub fn sgd_momentum_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    factor: f64,
    momentum: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(Error::shape(
            "sgd_momentum_step",
            params.len(),
            format!("{}/{}", grads.len(), velocity.len()),
        ));
    }
    let step = lr * factor;
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *p -= step * *v;
    }
    Ok(())
}

/// Momentum state for a whole model.
#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub momentum: f64,
    pub backbone_lr_factor: f64,
    velocity: ModelParams,
}

impl SgdMomentum {
    pub fn new(params: &ModelParams, momentum: f64, backbone_lr_factor: f64) -> Self {
        SgdMomentum {
            momentum,
            backbone_lr_factor,
            velocity: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, lr: f64) -> Result<()> {
        if !params.same_layout(grads) || !params.same_layout(&self.velocity) {
            return Err(Error::shape(
                "SgdMomentum::step",
                "matching tensor layout",
                "different layout",
            ));
        }
        for i in 0..params.tensors.len() {
            let factor = match params.group(i) {
                ParamGroup::Backbone => self.backbone_lr_factor,
                ParamGroup::Head => 1.0,
            };
            sgd_momentum_step(
                &mut params.tensors[i].data,
                &grads.tensors[i].data,
                &mut self.velocity.tensors[i].data,
                lr,
                factor,
                self.momentum,
            )?;
        }
        Ok(())
    }
}
