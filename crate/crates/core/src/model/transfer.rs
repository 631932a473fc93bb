//! Domain transfer losses on bottleneck features.
//!
//! All kernel losses share one multi-bandwidth Gaussian kernel evaluated on
//! the stacked source and target batch. The base bandwidth is the mean
//! squared distance over off-diagonal pairs, and the kernel sums
//! `exp(-d / (base * mul^(i - num/2)))` for `i in 0..num`. Gradients flow
//! through the data-dependent bandwidth as well.
//!
//! The local (class-conditional) discrepancy weights every sample by its
//! normalised class mass: one-hot labels on the source side, classifier
//! probabilities on the target side. It averages the per-class discrepancy
//! over classes that carry mass in both batches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::matrix::{sq_dist, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub kernel_mul: f64,
    pub kernel_num: usize,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            kernel_mul: 2.0,
            kernel_num: 5,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kernel_mul.is_finite() && self.kernel_mul > 0.0) || self.kernel_num == 0 {
            return Err(Error::invalid("kernel_mul must be positive and kernel_num at least 1"));
        }
        Ok(())
    }

    /// Bandwidth multipliers relative to the base bandwidth.
    pub fn scales(&self) -> Vec<f64> {
        let half = (self.kernel_num / 2) as i32;
        (0..self.kernel_num as i32)
            .map(|i| self.kernel_mul.powi(i - half))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferKind {
    Lmmd,
    Mmd,
    Coral,
}

impl std::fmt::Display for TransferKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TransferKind::Lmmd => "lmmd",
            TransferKind::Mmd => "mmd",
            TransferKind::Coral => "coral",
        })
    }
}

struct KernelEval {
    dist: Matrix,
    base: f64,
    bws: Vec<f64>,
    k: Matrix,
}

fn kernel_eval(z: &Matrix, kp: &KernelParams) -> Result<KernelEval> {
    kp.validate()?;
    let n = z.rows;
    if n < 2 {
        return Err(Error::invalid(format!("kernel needs at least 2 rows, got {n}")));
    }
    let mut dist = Matrix::zeros(n, n);
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sq_dist(z.row(i), z.row(j));
            dist.set(i, j, d);
            dist.set(j, i, d);
            total += 2.0 * d;
        }
    }
    let base = total / (n * n - n) as f64;
    let bws: Vec<f64> = kp.scales().iter().map(|s| base * s).collect();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d = dist.get(i, j);
            let v = if base > 0.0 {
                bws.iter().map(|bw| (-d / bw).exp()).sum()
            } else {
                kp.kernel_num as f64
            };
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    Ok(KernelEval { dist, base, bws, k })
}

/// Kernel matrix over the rows of `z`.
pub fn multi_gaussian_kernel(z: &Matrix, kp: &KernelParams) -> Result<Matrix> {
    Ok(kernel_eval(z, kp)?.k)
}

/// Gradient with respect to `z` of `sum_ij dk[i][j] * K[i][j]`.
fn kernel_backward(z: &Matrix, ev: &KernelEval, dk: &Matrix) -> Matrix {
    let n = z.rows;
    let mut dz = Matrix::zeros(n, z.cols);
    if ev.base <= 0.0 {
        return dz;
    }
    // dL/d(dist) through the explicit dependence, and dL/d(base).
    let mut ddist = Matrix::zeros(n, n);
    let mut dbase = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let g = dk.get(i, j);
            if g == 0.0 {
                continue;
            }
            let d = ev.dist.get(i, j);
            let mut direct = 0.0;
            let mut via_base = 0.0;
            for bw in &ev.bws {
                let e = (-d / bw).exp();
                direct -= e / bw;
                via_base += e * d / (bw * ev.base);
            }
            ddist.set(i, j, g * direct);
            dbase += g * via_base;
        }
    }
    let share = dbase / (n * n - n) as f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            // d(dist_ij)/dz_i = 2 (z_i - z_j); both (i,j) and (j,i) touch z_i.
            let g = 2.0 * (ddist.get(i, j) + ddist.get(j, i) + 2.0 * share);
            if g == 0.0 {
                continue;
            }
            let (zi, zj) = (z.row(i), z.row(j));
            let diff: Vec<f64> = zi.iter().zip(zj).map(|(a, b)| a - b).collect();
            for (o, v) in dz.row_mut(i).iter_mut().zip(diff) {
                *o += g * v;
            }
        }
    }
    dz
}

/// Value of a transfer loss and its gradients.
#[derive(Debug, Clone)]
pub struct TransferGrad {
    pub value: f64,
    pub d_source: Matrix,
    pub d_target: Matrix,
    /// Gradient with respect to the target class probabilities, for losses
    /// that read them.
    pub d_target_probs: Option<Matrix>,
}

fn check_pair(f_s: &Matrix, f_t: &Matrix) -> Result<()> {
    if f_s.cols != f_t.cols {
        return Err(Error::shape("transfer features", f_s.cols, f_t.cols));
    }
    if f_s.rows < 2 || f_t.rows < 2 {
        return Err(Error::invalid(format!(
            "transfer loss needs at least 2 samples per domain, got {} and {}",
            f_s.rows, f_t.rows
        )));
    }
    Ok(())
}

/// Per-class normalised weights; `None` for classes without mass.
fn class_weights(labels: &Matrix) -> Vec<Option<Vec<f64>>> {
    (0..labels.cols)
        .map(|c| {
            let col: Vec<f64> = (0..labels.rows).map(|i| labels.get(i, c)).collect();
            let s: f64 = col.iter().sum();
            (s > 0.0).then(|| col.iter().map(|v| v / s).collect())
        })
        .collect()
}

/// Weighted discrepancy given per-class source and target weight vectors.
/// Returns the value, `dL/dK` and `dL/dw_t` per class.
fn weighted_discrepancy(
    k: &Matrix,
    bs: usize,
    classes: &[(usize, Vec<f64>, Vec<f64>)],
) -> (f64, Matrix, Vec<Vec<f64>>) {
    let n = k.rows;
    let bt = n - bs;
    let mut dk = Matrix::zeros(n, n);
    let mut dwt = Vec::with_capacity(classes.len());
    if classes.is_empty() {
        return (0.0, dk, dwt);
    }
    let scale = 1.0 / classes.len() as f64;
    let mut value = 0.0;
    for (_, ws, wt) in classes {
        let mut g = vec![0.0; bt];
        for i in 0..bs {
            for j in 0..bs {
                let w = scale * ws[i] * ws[j];
                value += w * k.get(i, j);
                dk.data[i * n + j] += w;
            }
            for j in 0..bt {
                let w = scale * ws[i] * wt[j];
                value -= 2.0 * w * k.get(i, bs + j);
                dk.data[i * n + bs + j] -= w;
                dk.data[(bs + j) * n + i] -= w;
                g[j] -= 2.0 * scale * ws[i] * k.get(i, bs + j);
            }
        }
        for i in 0..bt {
            for j in 0..bt {
                let w = scale * wt[i] * wt[j];
                value += w * k.get(bs + i, bs + j);
                dk.data[(bs + i) * n + bs + j] += w;
                g[i] += 2.0 * scale * wt[j] * k.get(bs + i, bs + j);
            }
        }
        dwt.push(g);
    }
    (value, dk, dwt)
}

/// Class-conditional discrepancy between source features (with label rows
/// `labels_s`) and target features (with class probabilities `probs_t`).
pub fn lmmd(f_s: &Matrix, labels_s: &Matrix, f_t: &Matrix, probs_t: &Matrix, kp: &KernelParams) -> Result<f64> {
    Ok(lmmd_grad(f_s, labels_s, f_t, probs_t, kp)?.value)
}

pub fn lmmd_grad(
    f_s: &Matrix,
    labels_s: &Matrix,
    f_t: &Matrix,
    probs_t: &Matrix,
    kp: &KernelParams,
) -> Result<TransferGrad> {
    check_pair(f_s, f_t)?;
    if labels_s.rows != f_s.rows || probs_t.rows != f_t.rows || labels_s.cols != probs_t.cols {
        return Err(Error::shape(
            "lmmd labels",
            format!("{}x{} / {}x{}", f_s.rows, probs_t.cols, f_t.rows, probs_t.cols),
            format!(
                "{}x{} / {}x{}",
                labels_s.rows, labels_s.cols, probs_t.rows, probs_t.cols
            ),
        ));
    }
    let bs = f_s.rows;
    let z = f_s.vstack(f_t)?;
    let ev = kernel_eval(&z, kp)?;
    let active: Vec<(usize, Vec<f64>, Vec<f64>)> = class_weights(labels_s)
        .into_iter()
        .zip(class_weights(probs_t))
        .enumerate()
        .filter_map(|(c, (s, t))| Some((c, s?, t?)))
        .collect();
    let (value, dk, dwt) = weighted_discrepancy(&ev.k, bs, &active);
    let dz = kernel_backward(&z, &ev, &dk);

    // w_t[c][j] = p[j][c] / sum_j' p[j'][c]
    let mut dprobs = Matrix::zeros(probs_t.rows, probs_t.cols);
    for ((c, _, wt), g) in active.iter().zip(&dwt) {
        let mass: f64 = (0..probs_t.rows).map(|j| probs_t.get(j, *c)).sum();
        let mean_g: f64 = g.iter().zip(wt).map(|(a, b)| a * b).sum();
        for (j, gj) in g.iter().enumerate() {
            dprobs.set(j, *c, (gj - mean_g) / mass);
        }
    }
    Ok(TransferGrad {
        value,
        d_source: dz.rows_range(0, bs),
        d_target: dz.rows_range(bs, z.rows),
        d_target_probs: Some(dprobs),
    })
}

/// Uniform-weight discrepancy between two batches.
pub fn mmd_global(f_s: &Matrix, f_t: &Matrix, kp: &KernelParams) -> Result<f64> {
    Ok(mmd_global_grad(f_s, f_t, kp)?.value)
}

pub fn mmd_global_grad(f_s: &Matrix, f_t: &Matrix, kp: &KernelParams) -> Result<TransferGrad> {
    check_pair(f_s, f_t)?;
    let bs = f_s.rows;
    let z = f_s.vstack(f_t)?;
    let ev = kernel_eval(&z, kp)?;
    let ws = vec![1.0 / bs as f64; bs];
    let wt = vec![1.0 / f_t.rows as f64; f_t.rows];
    let (value, dk, _) = weighted_discrepancy(&ev.k, bs, &[(0, ws, wt)]);
    let dz = kernel_backward(&z, &ev, &dk);
    Ok(TransferGrad {
        value,
        d_source: dz.rows_range(0, bs),
        d_target: dz.rows_range(bs, z.rows),
        d_target_probs: None,
    })
}

/// Unbiased feature covariance and the centred data it was computed from.
fn covariance(f: &Matrix) -> (Matrix, Matrix) {
    let mean = f.column_means();
    let mut centred = f.clone();
    for i in 0..f.rows {
        for (v, m) in centred.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let d = f.cols;
    let mut cov = Matrix::zeros(d, d);
    for i in 0..f.rows {
        let r = centred.row(i);
        for a in 0..d {
            for b in 0..d {
                cov.data[a * d + b] += r[a] * r[b];
            }
        }
    }
    let denom = (f.rows - 1) as f64;
    cov.data.iter_mut().for_each(|v| *v /= denom);
    (cov, centred)
}

/// Squared Frobenius distance of the two covariances over `4 D^2`.
pub fn coral_distance(f_s: &Matrix, f_t: &Matrix) -> Result<f64> {
    Ok(coral_grad(f_s, f_t)?.value)
}

pub fn coral_grad(f_s: &Matrix, f_t: &Matrix) -> Result<TransferGrad> {
    check_pair(f_s, f_t)?;
    let d = f_s.cols;
    let (cs, xs) = covariance(f_s);
    let (ct, xt) = covariance(f_t);
    let norm = 4.0 * (d * d) as f64;
    let diff: Vec<f64> = cs.data.iter().zip(&ct.data).map(|(a, b)| a - b).collect();
    let value = diff.iter().map(|v| v * v).sum::<f64>() / norm;
    // dL/dC = 2 diff / norm (symmetric); dL/dX = 2 Xc dL/dC / (n - 1).
    let side = |xc: &Matrix, sign: f64| {
        let mut out = Matrix::zeros(xc.rows, d);
        let s = sign * 4.0 / (norm * (xc.rows - 1) as f64);
        for i in 0..xc.rows {
            let r = xc.row(i);
            let o = out.row_mut(i);
            for a in 0..d {
                let mut acc = 0.0;
                for b in 0..d {
                    acc += r[b] * diff[b * d + a];
                }
                o[a] = s * acc;
            }
        }
        out
    };
    Ok(TransferGrad {
        value,
        d_source: side(&xs, 1.0),
        d_target: side(&xt, -1.0),
        d_target_probs: None,
    })
}
