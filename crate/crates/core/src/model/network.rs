//! Forward and backward passes of the encoder and both heads.
//!
//! Every pass is row-independent: there is no batch normalisation, so a
//! sample's features never depend on the rest of its batch.

use crate::error::{Error, Result};
use crate::model::matrix::{axpy, dot, Matrix};
use crate::model::params::{ModelParams, FORCE_AXES, INPUT_CHANNELS};
use crate::sim::image::{Image, CHANNELS};

/// Stack contact and reference images into a `6 x H x W` input.
pub fn sample_input(contact: &Image, reference: &Image) -> Result<Vec<f64>> {
    if !contact.same_shape(reference) {
        return Err(Error::shape(
            "sample_input",
            format!("{}x{}", contact.height, contact.width),
            format!("{}x{}", reference.height, reference.width),
        ));
    }
    let hw = contact.height * contact.width;
    let mut out = vec![0.0; INPUT_CHANNELS * hw];
    for (slot, img) in [contact, reference].into_iter().enumerate() {
        for (p, px) in img.data.chunks_exact(CHANNELS).enumerate() {
            for ch in 0..CHANNELS {
                out[(slot * CHANNELS + ch) * hw + p] = px[ch] as f64;
            }
        }
    }
    Ok(out)
}

/// Intermediate values kept for the backward pass of one sample.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    cols: Vec<Vec<f64>>,
    /// Post-ReLU output of each conv layer.
    acts: Vec<Vec<f64>>,
    pooled: Vec<f64>,
}

pub fn encode_sample(params: &ModelParams, input: &[f64]) -> Result<(Vec<f64>, EncoderCache)> {
    let arch = &params.arch;
    if input.len() != arch.input_len() {
        return Err(Error::shape("encode", arch.input_len(), input.len()));
    }
    let geoms = arch.conv_geoms();
    let mut cols = Vec::with_capacity(geoms.len());
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(geoms.len());
    for (l, g) in geoms.iter().enumerate() {
        let x = if l == 0 { input } else { &acts[l - 1][..] };
        let c = g.im2col(x);
        let (w, b) = params.conv(l);
        let mut y = g.forward(w, b, &c);
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        cols.push(c);
        acts.push(y);
    }
    let last = geoms.last().expect("validated architecture");
    let p = last.out_pixels() as f64;
    let pooled: Vec<f64> = acts
        .last()
        .expect("validated architecture")
        .chunks_exact(last.out_pixels())
        .map(|ch| ch.iter().sum::<f64>() / p)
        .collect();
    let (bw, bb) = params.bottleneck();
    let feat = linear_row(bw, bb, &pooled);
    Ok((feat, EncoderCache { cols, acts, pooled }))
}

/// Accumulate encoder gradients for one sample given `dL/dfeatures`.
pub fn encode_sample_backward(params: &ModelParams, cache: &EncoderCache, dfeat: &[f64], grads: &mut ModelParams) {
    let geoms = params.arch.conv_geoms();
    let (bw, _) = params.bottleneck();
    let pooled_dim = cache.pooled.len();
    let mut dpooled = vec![0.0; pooled_dim];
    {
        let (gw, gb) = grads.bottleneck_mut();
        for (j, &g) in dfeat.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            gb[j] += g;
            axpy(g, &cache.pooled, &mut gw[j * pooled_dim..(j + 1) * pooled_dim]);
            axpy(g, &bw[j * pooled_dim..(j + 1) * pooled_dim], &mut dpooled);
        }
    }
    let last = geoms.last().expect("validated architecture");
    let p = last.out_pixels();
    let mut dact: Vec<f64> = dpooled
        .iter()
        .flat_map(|&g| std::iter::repeat_n(g / p as f64, p))
        .collect();
    for l in (0..geoms.len()).rev() {
        for (d, &a) in dact.iter_mut().zip(&cache.acts[l]) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }
        let (w, _) = params.conv(l);
        let (gw, gb) = grads.conv_mut(l);
        match geoms[l].backward(w, &cache.cols[l], &dact, gw, gb, l > 0) {
            Some(dx) => dact = dx,
            None => break,
        }
    }
}

pub fn encode(params: &ModelParams, inputs: &[Vec<f64>]) -> Result<Matrix> {
    let d = params.arch.bottleneck_dim;
    let mut out = Matrix::zeros(inputs.len(), d);
    for (i, x) in inputs.iter().enumerate() {
        let (f, _) = encode_sample(params, x)?;
        out.row_mut(i).copy_from_slice(&f);
    }
    Ok(out)
}

fn linear_row(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(j, &bj)| bj + dot(&w[j * n..(j + 1) * n], x))
        .collect()
}

/// `x W^T + b` for every row of `x`.
pub fn linear(w: &[f64], b: &[f64], x: &Matrix) -> Matrix {
    let out_dim = b.len();
    let mut out = Matrix::zeros(x.rows, out_dim);
    for i in 0..x.rows {
        out.row_mut(i).copy_from_slice(&linear_row(w, b, x.row(i)));
    }
    out
}

/// Accumulate `dW`, `db` and return `dX` for `y = x W^T + b`.
pub fn linear_backward(w: &[f64], x: &Matrix, dy: &Matrix, dw: &mut [f64], db: &mut [f64]) -> Matrix {
    let n = x.cols;
    let mut dx = Matrix::zeros(x.rows, n);
    for i in 0..x.rows {
        for (j, &g) in dy.row(i).iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            db[j] += g;
            axpy(g, x.row(i), &mut dw[j * n..(j + 1) * n]);
            axpy(g, &w[j * n..(j + 1) * n], dx.row_mut(i));
        }
    }
    dx
}

pub fn classifier_logits(params: &ModelParams, f: &Matrix) -> Result<Matrix> {
    check_features(params, f)?;
    let (w, b) = params.classifier();
    Ok(linear(w, b, f))
}

pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows {
        let row = out.row_mut(i);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    out
}

/// Contact-class probabilities, one softmax row per sample.
pub fn classify(params: &ModelParams, f: &Matrix) -> Result<Matrix> {
    Ok(softmax_rows(&classifier_logits(params, f)?))
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Normalised force predictions in `(0, 1)`, columns `fx, fy, fz`.
pub fn regress(params: &ModelParams, f: &Matrix) -> Result<Matrix> {
    check_features(params, f)?;
    let (w, b) = params.regressor();
    let mut out = linear(w, b, f);
    out.data.iter_mut().for_each(|v| *v = sigmoid(*v));
    debug_assert_eq!(out.cols, FORCE_AXES);
    Ok(out)
}

fn check_features(params: &ModelParams, f: &Matrix) -> Result<()> {
    if f.cols != params.arch.bottleneck_dim {
        return Err(Error::shape("features", params.arch.bottleneck_dim, f.cols));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::Architecture;

    fn small_arch() -> Architecture {
        Architecture {
            image_height: 12,
            image_width: 10,
            channels: vec![4, 5],
            bottleneck_dim: 7,
            num_classes: 6,
        }
    }

    fn inputs(arch: &Architecture, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|k| {
                (0..arch.input_len())
                    .map(|i| ((i * 31 + k * 17) % 97) as f64 / 97.0)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn zero_params_give_zero_features_and_half_forces() {
        let arch = small_arch();
        let p = ModelParams::zeros(&arch).unwrap();
        let f = encode(&p, &inputs(&arch, 3)).unwrap();
        assert!(f.data.iter().all(|&v| v == 0.0));
        let r = regress(&p, &f).unwrap();
        assert!(r.data.iter().all(|&v| v == 0.5));
        let c = classify(&p, &f).unwrap();
        assert!(c.data.iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn rows_do_not_interact() {
        let arch = small_arch();
        let p = ModelParams::init(&arch, 1).unwrap();
        let xs = inputs(&arch, 8);
        let all = encode(&p, &xs).unwrap();
        for i in 0..8 {
            let one = encode(&p, &xs[i..i + 1]).unwrap();
            assert_eq!(one.row(0), all.row(i));
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_keep_argmax() {
        let arch = small_arch();
        for seed in 0..100 {
            let p = ModelParams::init(&arch, seed).unwrap();
            let f = encode(&p, &inputs(&arch, 2)).unwrap();
            let logits = classifier_logits(&p, &f).unwrap();
            let probs = softmax_rows(&logits);
            for i in 0..probs.rows {
                let s: f64 = probs.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-9);
                assert!(probs.row(i).iter().all(|&v| v >= 0.0));
                let am = |r: &[f64]| {
                    r.iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .unwrap()
                        .0
                };
                assert_eq!(am(probs.row(i)), am(logits.row(i)));
            }
        }
    }

    #[test]
    fn regressor_bias_is_monotone() {
        let arch = small_arch();
        let mut p = ModelParams::init(&arch, 2).unwrap();
        let f = encode(&p, &inputs(&arch, 4)).unwrap();
        let before = regress(&p, &f).unwrap();
        p.regressor_mut().1[2] += 0.3;
        let after = regress(&p, &f).unwrap();
        for i in 0..4 {
            assert!(after.get(i, 2) > before.get(i, 2));
            assert_eq!(after.get(i, 0), before.get(i, 0));
            for j in 0..3 {
                assert!(after.get(i, j) > 0.0 && after.get(i, j) < 1.0);
            }
        }
    }

    #[test]
    fn input_stacks_channels() {
        let c = Image::filled(2, 2, 0.25);
        let r = Image::filled(2, 2, 0.75);
        let x = sample_input(&c, &r).unwrap();
        assert_eq!(x.len(), 24);
        assert!(x[..12].iter().all(|&v| v == 0.25));
        assert!(x[12..].iter().all(|&v| v == 0.75));
        assert!(sample_input(&c, &Image::filled(3, 2, 0.0)).is_err());
    }

    #[test]
    fn rejects_wrong_input_length() {
        let p = ModelParams::zeros(&small_arch()).unwrap();
        assert!(encode(&p, &[vec![0.0; 5]]).is_err());
    }
}
