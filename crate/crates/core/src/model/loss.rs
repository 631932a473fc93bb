//! Supervised loss terms and their weighted combination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::matrix::Matrix;

/// Floor inside the cross-entropy logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_r: f64,
    pub lambda_c: f64,
    pub lambda_t: f64,
}

impl LossWeights {
    pub const PRETRAIN: LossWeights = LossWeights {
        lambda_r: 1.0,
        lambda_c: 0.0,
        lambda_t: 0.0,
    };
    pub const ADAPT: LossWeights = LossWeights {
        lambda_r: 1.0,
        lambda_c: 1.0,
        lambda_t: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_r", self.lambda_r),
            ("lambda_c", self.lambda_c),
            ("lambda_t", self.lambda_t),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn total_loss(l_r: f64, l_c: f64, l_t: f64, w: &LossWeights) -> f64 {
    w.lambda_r * l_r + w.lambda_c * l_c + w.lambda_t * l_t
}

fn same_shape(ctx: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            ctx,
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    if a.rows == 0 {
        return Err(Error::invalid(format!("{ctx}: empty batch")));
    }
    Ok(())
}

/// Mean over rows of the squared Euclidean error.
pub fn regression_loss(pred: &Matrix, target: &Matrix) -> Result<f64> {
    Ok(regression_loss_grad(pred, target)?.0)
}

/// Loss and its gradient with respect to `pred`.
pub fn regression_loss_grad(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    same_shape("regression_loss", pred, target)?;
    let b = pred.rows as f64;
    let mut grad = Matrix::zeros(pred.rows, pred.cols);
    let mut loss = 0.0;
    for ((g, p), t) in grad.data.iter_mut().zip(&pred.data).zip(&target.data) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / b;
    }
    Ok((loss / b, grad))
}

/// Mean over rows of `-sum_k y_k log max(p_k, eps)`.
pub fn classification_loss(probs: &Matrix, labels: &Matrix) -> Result<f64> {
    same_shape("classification_loss", probs, labels)?;
    let b = probs.rows as f64;
    let s: f64 = probs
        .data
        .iter()
        .zip(&labels.data)
        .filter(|(_, &y)| y != 0.0)
        .map(|(&p, &y)| -y * p.max(LOG_FLOOR).ln())
        .sum();
    Ok(s / b)
}

/// Gradient of [`classification_loss`] with respect to the probabilities.
pub fn classification_loss_grad_probs(probs: &Matrix, labels: &Matrix) -> Result<Matrix> {
    same_shape("classification_loss", probs, labels)?;
    let b = probs.rows as f64;
    let mut g = Matrix::zeros(probs.rows, probs.cols);
    for ((gv, &p), &y) in g.data.iter_mut().zip(&probs.data).zip(&labels.data) {
        if y != 0.0 && p > LOG_FLOOR {
            *gv = -y / (p * b);
        }
    }
    Ok(g)
}

/// Back-propagate a gradient through a row-wise softmax.
pub fn softmax_backward(probs: &Matrix, dprobs: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(probs.rows, probs.cols);
    for i in 0..probs.rows {
        let p = probs.row(i);
        let g = dprobs.row(i);
        let s: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        for (o, (&pj, &gj)) in out.row_mut(i).iter_mut().zip(p.iter().zip(g)) {
            *o = pj * (gj - s);
        }
    }
    out
}
