use crate::error::{Error, Result};
use crate::model::matrix::Matrix;
use crate::model::params::FORCE_AXES;
use crate::train::normalize::NormalizationSpec;

/// Mean absolute error of each force axis. Both inputs in newtons, `N x 3`.
pub fn mae_per_axis(pred: &Matrix, truth: &Matrix) -> Result<[f64; FORCE_AXES]> {
    if pred.shape() != truth.shape() || pred.cols != FORCE_AXES {
        return Err(Error::shape(
            "mae_per_axis",
            format!("matching (N, {FORCE_AXES})"),
            format!("{:?} vs {:?}", pred.shape(), truth.shape()),
        ));
    }
    if pred.rows == 0 {
        return Err(Error::invalid("mae_per_axis: no samples"));
    }
    let mut sum = [0.0; FORCE_AXES];
    for i in 0..pred.rows {
        for (a, s) in sum.iter_mut().enumerate() {
            *s += (pred.get(i, a) - truth.get(i, a)).abs();
        }
    }
    Ok(sum.map(|s| s / pred.rows as f64))
}

/// Coefficient of determination. Unbounded below; NaN (with a warning) when
/// the truth is constant.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::shape("r_squared", truth.len(), pred.len()));
    }
    if truth.len() < 2 {
        return Err(Error::invalid("r_squared needs at least 2 samples"));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        log::warn!("r_squared: constant ground truth, R^2 undefined");
        return Ok(f64::NAN);
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// MAE as a percentage of the axis's full force range.
pub fn pct_of_range(mae: f64, axis: usize, spec: &NormalizationSpec) -> Result<f64> {
    spec.validate()?;
    if axis >= FORCE_AXES {
        return Err(Error::invalid(format!("axis {axis} out of range")));
    }
    Ok(mae / spec.range(axis) * 100.0)
}

/// Round half away from zero to `decimals` places, for display. A tolerance
/// of 1e-9 absorbs representation error (6.35 is stored as 6.3499...).
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    ((x.abs() * k + 0.5 + 1e-9).floor()).copysign(x) / k
}

pub fn format_pct(pct: f64) -> String {
    format!("{:.1}%", round_half_up(pct, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mae_examples() {
        let t = Matrix::from_rows(&[vec![0.1, -0.2, -1.0], vec![0.0, 0.3, -2.0]]).unwrap();
        assert_eq!(mae_per_axis(&t, &t).unwrap(), [0.0; 3]);
        let mut p = t.clone();
        for i in 0..2 {
            p.set(i, 2, t.get(i, 2) + 0.1);
        }
        let m = mae_per_axis(&p, &t).unwrap();
        assert_eq!(&m[..2], &[0.0, 0.0]);
        assert!((m[2] - 0.1).abs() < 1e-12);
        assert!(mae_per_axis(&p, &Matrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn r_squared_examples() {
        let t = [0.0, 1.0, 2.0];
        assert_eq!(r_squared(&t, &t).unwrap(), 1.0);
        assert_eq!(r_squared(&[1.0; 3], &t).unwrap(), 0.0);
        assert_eq!(r_squared(&[2.0, 1.0, 0.0], &t).unwrap(), -3.0);
        assert!(r_squared(&[1.0, 2.0], &[1.0, 1.0]).unwrap().is_nan());
        assert!(r_squared(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn percent_of_range_matches_reported_pairs() {
        let spec = NormalizationSpec::new([-0.75, -0.75, -3.0], [0.75, 0.75, 0.0]).unwrap();
        assert_eq!(format_pct(pct_of_range(0.102, 2, &spec).unwrap()), "3.4%");
        assert_eq!(format_pct(pct_of_range(0.095, 0, &spec).unwrap()), "6.3%");
        assert_eq!(format_pct(pct_of_range(0.062, 1, &spec).unwrap()), "4.1%");
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(0.25, 1), 0.3);
        assert_eq!(round_half_up(6.35, 1), 6.4);
        assert_eq!(round_half_up(6.349, 1), 6.3);
        assert_eq!(round_half_up(-0.25, 1), -0.3);
        assert_eq!(round_half_up(3.4, 1), 3.4);
    }

    proptest! {
        #[test]
        fn pct_is_linear_in_mae(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let spec = NormalizationSpec::new([-0.75, -0.75, -3.0], [0.75, 0.75, 0.0]).unwrap();
            let lhs = pct_of_range(a + b, 2, &spec).unwrap();
            let rhs = pct_of_range(a, 2, &spec).unwrap() + pct_of_range(b, 2, &spec).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
