//! Oracles shared by the integration tests and the acceptance suite. None of
//! them call into the code they check beyond the public loss functions.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_da::model::loss::LossWeights;
use tactile_da::model::{Architecture, KernelParams, Matrix, ModelParams, TransferKind};
use tactile_da::train::{compute_gradients, evaluate_loss, LossOptions, SourceBatch, TargetBatch};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// D = 8, n = 4 classes, 8x8 inputs.
pub fn tiny_arch() -> Architecture {
    Architecture {
        image_height: 8,
        image_width: 8,
        channels: vec![4, 6],
        bottleneck_dim: 8,
        num_classes: 4,
    }
}

/// Random parameters and B_s = B_t = 4 batches for the tiny model.
pub struct Fixture {
    pub params: ModelParams,
    pub xs: Vec<Vec<f64>>,
    pub xt: Vec<Vec<f64>>,
    pub targets: Matrix,
    pub labels: Matrix,
}

pub fn fixture(seed: u64) -> Fixture {
    let arch = tiny_arch();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(&arch, seed).unwrap();
    // non-zero biases so every tensor's gradient path is exercised
    for t in params.tensors.iter_mut().filter(|t| t.name.ends_with("bias")) {
        t.data.iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
    }
    let mut batch = |shift: f64| -> Vec<Vec<f64>> {
        (0..4)
            .map(|_| (0..arch.input_len()).map(|_| rng.gen::<f64>() + shift).collect())
            .collect()
    };
    let xs = batch(0.0);
    let xt = batch(0.3);
    let targets = Matrix::from_vec(4, 3, (0..12).map(|_| rng.gen()).collect()).unwrap();
    let mut labels = Matrix::zeros(4, 4);
    for (i, c) in [0usize, 1, 2, 1].into_iter().enumerate() {
        labels.set(i, c, 1.0);
    }
    Fixture {
        params,
        xs,
        xt,
        targets,
        labels,
    }
}

/// Options for differentiating the loss as a plain function of the
/// parameters, pseudo-label path included.
pub fn options(weights: LossWeights, transfer: TransferKind) -> LossOptions {
    LossOptions {
        weights,
        transfer,
        kernel: KernelParams::default(),
        pseudo_label_grad: true,
    }
}

pub fn loss_at(f: &Fixture, params: &ModelParams, opts: &LossOptions) -> f64 {
    let src = SourceBatch {
        inputs: &f.xs,
        targets: &f.targets,
        labels: Some(&f.labels),
    };
    evaluate_loss(params, &src, Some(&TargetBatch { inputs: &f.xt }), opts)
        .unwrap()
        .total
}

pub fn grads_at(f: &Fixture, opts: &LossOptions) -> ModelParams {
    let src = SourceBatch {
        inputs: &f.xs,
        targets: &f.targets,
        labels: Some(&f.labels),
    };
    compute_gradients(&f.params, &src, Some(&TargetBatch { inputs: &f.xt }), opts)
        .unwrap()
        .1
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative error `|g - g_fd| / max(|g|, |g_fd|)` of every tensor.
pub fn fd_errors(f: &Fixture, opts: &LossOptions) -> Vec<(String, f64)> {
    let analytic = grads_at(f, opts);
    let mut out = Vec::new();
    for (ti, t) in f.params.tensors.iter().enumerate() {
        let mut fd = vec![0.0; t.data.len()];
        for (k, slot) in fd.iter_mut().enumerate() {
            let mut p = f.params.clone();
            p.tensors[ti].data[k] += FD_STEP;
            let up = loss_at(f, &p, opts);
            p.tensors[ti].data[k] -= 2.0 * FD_STEP;
            let down = loss_at(f, &p, opts);
            *slot = (up - down) / (2.0 * FD_STEP);
        }
        let a = &analytic.tensors[ti].data;
        let diff = norm(a.iter().zip(&fd).map(|(x, y)| x - y));
        let scale = norm(a.iter().copied()).max(norm(fd.iter().copied())).max(1e-12);
        out.push((t.name.clone(), diff / scale));
    }
    out
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

pub fn onehots(classes: &[usize], n: usize) -> Matrix {
    let mut m = Matrix::zeros(classes.len(), n);
    for (i, &c) in classes.iter().enumerate() {
        m.set(i, c, 1.0);
    }
    m
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Multi-bandwidth Gaussian kernel written out directly: base bandwidth is
/// the mean squared distance over ordered off-diagonal pairs of `all`.
pub fn kernel_oracle(a: &[f64], b: &[f64], all: &[&[f64]], mul: f64, num: usize) -> f64 {
    let n = all.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += sq(all[i], all[j]);
            }
        }
    }
    let base = s / (n * n - n) as f64;
    (0..num)
        .map(|i| (-sq(a, b) / (base * mul.powi(i as i32 - (num / 2) as i32))).exp())
        .sum()
}

/// Class-weighted discrepancy by explicit loops over classes and sample
/// pairs, averaged over classes with mass on both sides.
pub fn lmmd_oracle(fs: &Matrix, ys: &Matrix, ft: &Matrix, pt: &Matrix, mul: f64, num: usize) -> f64 {
    let all: Vec<&[f64]> = (0..fs.rows)
        .map(|i| fs.row(i))
        .chain((0..ft.rows).map(|i| ft.row(i)))
        .collect();
    let k = |a: &[f64], b: &[f64]| kernel_oracle(a, b, &all, mul, num);
    let mut total = 0.0;
    let mut active = 0;
    for c in 0..ys.cols {
        let ss: f64 = (0..fs.rows).map(|i| ys.get(i, c)).sum();
        let st: f64 = (0..ft.rows).map(|i| pt.get(i, c)).sum();
        if ss <= 0.0 || st <= 0.0 {
            continue;
        }
        active += 1;
        let mut term = 0.0;
        for i in 0..fs.rows {
            for j in 0..fs.rows {
                term += ys.get(i, c) / ss * ys.get(j, c) / ss * k(fs.row(i), fs.row(j));
            }
        }
        for i in 0..ft.rows {
            for j in 0..ft.rows {
                term += pt.get(i, c) / st * pt.get(j, c) / st * k(ft.row(i), ft.row(j));
            }
        }
        for i in 0..fs.rows {
            for j in 0..ft.rows {
                term -= 2.0 * ys.get(i, c) / ss * pt.get(j, c) / st * k(fs.row(i), ft.row(j));
            }
        }
        total += term;
    }
    if active == 0 {
        0.0
    } else {
        total / active as f64
    }
}
