//! Reverse-mode gradients of the combined objective
//! `lambda_r * L_r + lambda_c * L_c + lambda_t * L_t`.
//!
//! The regression and classification terms read source labels only. The
//! transfer term compares source and target features; the target side sees
//! images and the classifier's own pseudo labels, never target labels.

use crate::error::{Error, Result};
use crate::model::loss::{
    classification_loss, classification_loss_grad_probs, regression_loss_grad, softmax_backward, LossWeights,
};
use crate::model::matrix::Matrix;
use crate::model::network::{
    encode_sample, encode_sample_backward, linear, linear_backward, softmax_rows, EncoderCache,
};
use crate::model::params::ModelParams;
use crate::model::transfer::{coral_grad, lmmd_grad, mmd_global_grad, KernelParams, TransferGrad, TransferKind};

/// Labeled source batch. `targets` are normalised forces, `labels` one-hot
/// contact classes.
pub struct SourceBatch<'a> {
    pub inputs: &'a [Vec<f64>],
    pub targets: &'a Matrix,
    pub labels: Option<&'a Matrix>,
}

/// Unlabeled target batch.
pub struct TargetBatch<'a> {
    pub inputs: &'a [Vec<f64>],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    pub weights: LossWeights,
    pub transfer: TransferKind,
    pub kernel: KernelParams,
    pub pseudo_label_grad: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub regression: f64,
    pub classification: f64,
    pub transfer: f64,
    pub total: f64,
}

struct Forward {
    feats: Matrix,
    caches: Vec<EncoderCache>,
}

fn forward(params: &ModelParams, inputs: &[Vec<f64>], keep: bool) -> Result<Forward> {
    let d = params.arch.bottleneck_dim;
    let mut feats = Matrix::zeros(inputs.len(), d);
    let mut caches = Vec::with_capacity(if keep { inputs.len() } else { 0 });
    for (i, x) in inputs.iter().enumerate() {
        let (f, c) = encode_sample(params, x)?;
        feats.row_mut(i).copy_from_slice(&f);
        if keep {
            caches.push(c);
        }
    }
    Ok(Forward { feats, caches })
}

fn check(params: &ModelParams, src: &SourceBatch, tgt: Option<&TargetBatch>, opts: &LossOptions) -> Result<()> {
    opts.weights.validate()?;
    let b = src.inputs.len();
    if b == 0 {
        return Err(Error::invalid("empty source batch"));
    }
    if src.targets.shape() != (b, 3) {
        return Err(Error::shape(
            "source targets",
            format!("({b}, 3)"),
            format!("{:?}", src.targets.shape()),
        ));
    }
    if let Some(l) = src.labels {
        if l.shape() != (b, params.arch.num_classes) {
            return Err(Error::shape(
                "source labels",
                format!("({b}, {})", params.arch.num_classes),
                format!("{:?}", l.shape()),
            ));
        }
    }
    let needs_labels =
        opts.weights.lambda_c > 0.0 || (opts.weights.lambda_t > 0.0 && opts.transfer == TransferKind::Lmmd);
    if needs_labels && src.labels.is_none() {
        return Err(Error::invalid(
            "source contact-class labels are required by the configured losses",
        ));
    }
    if opts.weights.lambda_t > 0.0 && tgt.is_none_or(|t| t.inputs.is_empty()) {
        return Err(Error::invalid("transfer loss requires a target batch"));
    }
    Ok(())
}

/// Per-sample `1/(1+e^-z)` and its derivative.
fn sigmoid_with_grad(z: &Matrix) -> (Matrix, Matrix) {
    let mut s = z.clone();
    let mut ds = z.clone();
    for (sv, dv) in s.data.iter_mut().zip(ds.data.iter_mut()) {
        let v = crate::model::network::sigmoid(*sv);
        *sv = v;
        *dv = v * (1.0 - v);
    }
    (s, ds)
}

fn transfer_terms(
    f_s: &Matrix,
    labels_s: Option<&Matrix>,
    f_t: &Matrix,
    probs_t: Option<&Matrix>,
    opts: &LossOptions,
) -> Result<TransferGrad> {
    match opts.transfer {
        TransferKind::Lmmd => lmmd_grad(
            f_s,
            labels_s.expect("checked"),
            f_t,
            probs_t.expect("computed for lmmd"),
            &opts.kernel,
        ),
        TransferKind::Mmd => mmd_global_grad(f_s, f_t, &opts.kernel),
        TransferKind::Coral => coral_grad(f_s, f_t),
    }
}

/// Loss values without gradients.
pub fn evaluate_loss(
    params: &ModelParams,
    src: &SourceBatch,
    tgt: Option<&TargetBatch>,
    opts: &LossOptions,
) -> Result<LossBreakdown> {
    check(params, src, tgt, opts)?;
    let fs = forward(params, src.inputs, false)?.feats;
    let (rw, rb) = params.regressor();
    let (pred, _) = sigmoid_with_grad(&linear(rw, rb, &fs));
    let (l_r, _) = regression_loss_grad(&pred, src.targets)?;
    let (cw, cb) = params.classifier();
    let l_c = match src.labels {
        Some(l) => classification_loss(&softmax_rows(&linear(cw, cb, &fs)), l)?,
        None => 0.0,
    };
    let mut l_t = 0.0;
    if opts.weights.lambda_t > 0.0 {
        let ft = forward(params, tgt.expect("checked").inputs, false)?.feats;
        let probs_t = (opts.transfer == TransferKind::Lmmd).then(|| softmax_rows(&linear(cw, cb, &ft)));
        l_t = transfer_terms(&fs, src.labels, &ft, probs_t.as_ref(), opts)?.value;
    }
    Ok(breakdown(l_r, l_c, l_t, &opts.weights))
}

fn breakdown(l_r: f64, l_c: f64, l_t: f64, w: &LossWeights) -> LossBreakdown {
    LossBreakdown {
        regression: l_r,
        classification: l_c,
        transfer: l_t,
        total: crate::model::loss::total_loss(l_r, l_c, l_t, w),
    }
}

/// Loss values and gradients for every parameter tensor.
///
/// With `pseudo_label_grad` off, target class probabilities enter the local
/// discrepancy as constants; the gradient is then that of the objective with
/// the pseudo labels frozen at their current values.
pub fn compute_gradients(
    params: &ModelParams,
    src: &SourceBatch,
    tgt: Option<&TargetBatch>,
    opts: &LossOptions,
) -> Result<(LossBreakdown, ModelParams)> {
    check(params, src, tgt, opts)?;
    let w = opts.weights;
    let mut grads = params.zeros_like();
    let fwd_s = forward(params, src.inputs, true)?;
    let fs = &fwd_s.feats;
    let mut dfs = Matrix::zeros(fs.rows, fs.cols);

    // regression head
    let (rw, rb) = params.regressor();
    let (pred, dsig) = sigmoid_with_grad(&linear(rw, rb, fs));
    let (l_r, mut dpred) = regression_loss_grad(&pred, src.targets)?;
    if w.lambda_r > 0.0 {
        for (g, d) in dpred.data.iter_mut().zip(&dsig.data) {
            *g *= w.lambda_r * d;
        }
        let (gw, gb) = grads.regressor_mut();
        let dx = linear_backward(rw, fs, &dpred, gw, gb);
        dfs.data.iter_mut().zip(&dx.data).for_each(|(a, b)| *a += b);
    }

    // classification head
    let (cw, cb) = params.classifier();
    let mut l_c = 0.0;
    if let Some(labels) = src.labels {
        let probs_s = softmax_rows(&linear(cw, cb, fs));
        l_c = classification_loss(&probs_s, labels)?;
        if w.lambda_c > 0.0 {
            let mut dp = classification_loss_grad_probs(&probs_s, labels)?;
            dp.data.iter_mut().for_each(|v| *v *= w.lambda_c);
            let dlogits = softmax_backward(&probs_s, &dp);
            let (gw, gb) = grads.classifier_mut();
            let dx = linear_backward(cw, fs, &dlogits, gw, gb);
            dfs.data.iter_mut().zip(&dx.data).for_each(|(a, b)| *a += b);
        }
    }

    // transfer term
    let mut l_t = 0.0;
    let mut target_part = None;
    if w.lambda_t > 0.0 {
        let fwd_t = forward(params, tgt.expect("checked").inputs, true)?;
        let ft = &fwd_t.feats;
        let probs_t = (opts.transfer == TransferKind::Lmmd).then(|| softmax_rows(&linear(cw, cb, ft)));
        let tg = transfer_terms(fs, src.labels, ft, probs_t.as_ref(), opts)?;
        l_t = tg.value;
        dfs.data
            .iter_mut()
            .zip(&tg.d_source.data)
            .for_each(|(a, b)| *a += w.lambda_t * b);
        let mut dft = tg.d_target.clone();
        dft.data.iter_mut().for_each(|v| *v *= w.lambda_t);
        if opts.pseudo_label_grad {
            if let (Some(dp), Some(p)) = (tg.d_target_probs.as_ref(), probs_t.as_ref()) {
                let mut dp = dp.clone();
                dp.data.iter_mut().for_each(|v| *v *= w.lambda_t);
                let dlogits = softmax_backward(p, &dp);
                let (gw, gb) = grads.classifier_mut();
                let dx = linear_backward(cw, ft, &dlogits, gw, gb);
                dft.data.iter_mut().zip(&dx.data).for_each(|(a, b)| *a += b);
            }
        }
        target_part = Some((fwd_t.caches, dft));
    }

    for (i, cache) in fwd_s.caches.iter().enumerate() {
        encode_sample_backward(params, cache, dfs.row(i), &mut grads);
    }
    if let Some((caches, dft)) = target_part {
        for (i, cache) in caches.iter().enumerate() {
            encode_sample_backward(params, cache, dft.row(i), &mut grads);
        }
    }
    Ok((breakdown(l_r, l_c, l_t, &w), grads))
}
