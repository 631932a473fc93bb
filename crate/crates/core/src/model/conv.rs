//! 3x3, stride-2, zero-padded convolution via im2col.
//!
//! Tensors are channel-major (`C x H x W`). The column buffer has one row per
//! `(in_channel, ky, kx)` tap and one column per output pixel, so both passes
//! reduce to contiguous multiply-adds over output pixels.

use crate::model::params::KERNEL_SIZE;

const STRIDE: usize = 2;
const PAD: usize = 1;
const TAPS: usize = KERNEL_SIZE * KERNEL_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_ch: usize,
    pub out_ch: usize,
    pub h: usize,
    pub w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeom {
    pub fn new(in_ch: usize, out_ch: usize, h: usize, w: usize) -> Self {
        let out = |n: usize| (n + 2 * PAD - KERNEL_SIZE) / STRIDE + 1;
        ConvGeom {
            in_ch,
            out_ch,
            h,
            w,
            out_h: out(h),
            out_w: out(w),
        }
    }

    pub fn out_pixels(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn col_rows(&self) -> usize {
        self.in_ch * TAPS
    }

    /// Input coordinate read by output index `o` at kernel offset `k`.
    #[inline]
    fn src(o: usize, k: usize, n: usize) -> Option<usize> {
        let i = (o * STRIDE + k) as isize - PAD as isize;
        (i >= 0 && (i as usize) < n).then_some(i as usize)
    }

    pub fn im2col(&self, input: &[f64]) -> Vec<f64> {
        let p = self.out_pixels();
        let mut cols = vec![0.0; self.col_rows() * p];
        for ci in 0..self.in_ch {
            let plane = &input[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..KERNEL_SIZE {
                for kx in 0..KERNEL_SIZE {
                    let row = (ci * TAPS + ky * KERNEL_SIZE + kx) * p;
                    for oy in 0..self.out_h {
                        let Some(iy) = Self::src(oy, ky, self.h) else { continue };
                        for ox in 0..self.out_w {
                            if let Some(ix) = Self::src(ox, kx, self.w) {
                                cols[row + oy * self.out_w + ox] = plane[iy * self.w + ix];
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, dcols: &[f64]) -> Vec<f64> {
        let p = self.out_pixels();
        let mut out = vec![0.0; self.in_ch * self.h * self.w];
        for ci in 0..self.in_ch {
            let plane = &mut out[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..KERNEL_SIZE {
                for kx in 0..KERNEL_SIZE {
                    let row = (ci * TAPS + ky * KERNEL_SIZE + kx) * p;
                    for oy in 0..self.out_h {
                        let Some(iy) = Self::src(oy, ky, self.h) else { continue };
                        for ox in 0..self.out_w {
                            if let Some(ix) = Self::src(ox, kx, self.w) {
                                plane[iy * self.w + ix] += dcols[row + oy * self.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Pre-activation output `out_ch x P` from a column buffer.
    pub fn forward(&self, weight: &[f64], bias: &[f64], cols: &[f64]) -> Vec<f64> {
        let p = self.out_pixels();
        let k = self.col_rows();
        let mut out = vec![0.0; self.out_ch * p];
        for (o, dst) in out.chunks_exact_mut(p).enumerate() {
            dst.fill(bias[o]);
        }
        // out += W (out_ch x k) * cols (k x P)
        gemm(self.out_ch, k, p, weight, (k, 1), cols, (p, 1), 1.0, &mut out, p);
        out
    }

    /// Accumulate weight and bias gradients; return the input gradient when
    /// `need_input` is set.
    pub fn backward(
        &self,
        weight: &[f64],
        cols: &[f64],
        dout: &[f64],
        dweight: &mut [f64],
        dbias: &mut [f64],
        need_input: bool,
    ) -> Option<Vec<f64>> {
        let p = self.out_pixels();
        let k = self.col_rows();
        for (o, g) in dout.chunks_exact(p).enumerate() {
            dbias[o] += g.iter().sum::<f64>();
        }
        // dW += dout (out_ch x P) * cols^T (P x k)
        gemm(self.out_ch, p, k, dout, (p, 1), cols, (1, p), 1.0, dweight, k);
        if !need_input {
            return None;
        }
        // dcols = W^T (k x out_ch) * dout (out_ch x P)
        let mut dcols = vec![0.0; k * p];
        gemm(k, self.out_ch, p, weight, (1, k), dout, (p, 1), 0.0, &mut dcols, p);
        Some(self.col2im(&dcols))
    }
}

/// `c = a * b + beta * c` for row-major `c` (`m x n`); `a` and `b` are given
/// with explicit (row, column) strides so transposes need no copy.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the assertions above keep every strided access in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            ldc as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::matrix::dot;

    /// Direct convolution by definition.
    fn naive(g: &ConvGeom, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.out_ch * g.out_pixels()];
        for o in 0..g.out_ch {
            for oy in 0..g.out_h {
                for ox in 0..g.out_w {
                    let mut acc = b[o];
                    for ci in 0..g.in_ch {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let iy = (oy * 2 + ky) as isize - 1;
                                let ix = (ox * 2 + kx) as isize - 1;
                                if iy < 0 || ix < 0 || iy as usize >= g.h || ix as usize >= g.w {
                                    continue;
                                }
                                acc += w[((o * g.in_ch + ci) * 3 + ky) * 3 + kx]
                                    * x[(ci * g.h + iy as usize) * g.w + ix as usize];
                            }
                        }
                    }
                    out[(o * g.out_h + oy) * g.out_w + ox] = acc;
                }
            }
        }
        out
    }

    fn pseudo(n: usize, s: f64) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * 0.7 + s).sin() * 1.3).collect()
    }

    #[test]
    fn output_sizes() {
        let g = ConvGeom::new(6, 16, 64, 64);
        assert_eq!((g.out_h, g.out_w), (32, 32));
        let g = ConvGeom::new(3, 4, 7, 5);
        assert_eq!((g.out_h, g.out_w), (4, 3));
    }

    #[test]
    fn matches_direct_convolution() {
        for (h, w) in [(8, 8), (7, 5)] {
            let g = ConvGeom::new(3, 4, h, w);
            let wt = pseudo(4 * 3 * 9, 0.1);
            let b = pseudo(4, 2.0);
            let x = pseudo(3 * h * w, 5.0);
            let fast = g.forward(&wt, &b, &g.im2col(&x));
            let slow = naive(&g, &wt, &b, &x);
            for (a, c) in fast.iter().zip(&slow) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_is_adjoint() {
        // <dout, conv(x)> is linear in x and w; its gradients must match
        // finite differences exactly up to rounding.
        let g = ConvGeom::new(2, 3, 6, 5);
        let wt = pseudo(3 * 2 * 9, 0.3);
        let b = pseudo(3, 1.0);
        let x = pseudo(2 * 6 * 5, 4.0);
        let dout = pseudo(3 * g.out_pixels(), 9.0);
        let f = |wt: &[f64], x: &[f64]| -> f64 { dot(&g.forward(wt, &b, &g.im2col(x)), &dout) };
        let mut dw = vec![0.0; wt.len()];
        let mut db = vec![0.0; 3];
        let dx = g.backward(&wt, &g.im2col(&x), &dout, &mut dw, &mut db, true).unwrap();
        let h = 1e-6;
        for i in 0..wt.len() {
            let (mut a, mut c) = (wt.clone(), wt.clone());
            a[i] += h;
            c[i] -= h;
            assert!(((f(&a, &x) - f(&c, &x)) / (2.0 * h) - dw[i]).abs() < 1e-6);
        }
        for i in 0..x.len() {
            let (mut a, mut c) = (x.clone(), x.clone());
            a[i] += h;
            c[i] -= h;
            assert!(((f(&wt, &a) - f(&wt, &c)) / (2.0 * h) - dx[i]).abs() < 1e-6);
        }
        for o in 0..3 {
            let s: f64 = dout[o * g.out_pixels()..(o + 1) * g.out_pixels()].iter().sum();
            assert!((db[o] - s).abs() < 1e-12);
        }
    }
}
