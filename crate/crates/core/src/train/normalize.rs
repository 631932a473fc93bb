use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::matrix::Matrix;
use crate::model::params::FORCE_AXES;
use crate::sim::force::ForceLabel;

/// Per-axis force range of the source domain; maps newtons to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationSpec {
    pub min: [f64; FORCE_AXES],
    pub max: [f64; FORCE_AXES],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Normalize,
    Denormalize,
}

impl NormalizationSpec {
    pub fn new(min: [f64; FORCE_AXES], max: [f64; FORCE_AXES]) -> Result<Self> {
        let s = NormalizationSpec { min, max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..FORCE_AXES {
            if !(self.min[a].is_finite() && self.max[a].is_finite()) {
                return Err(Error::invalid("normalization bounds must be finite"));
            }
            if self.max[a] <= self.min[a] {
                return Err(Error::invalid(format!(
                    "degenerate normalization on axis {a}: max {} <= min {}",
                    self.max[a], self.min[a]
                )));
            }
        }
        Ok(())
    }

    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a ForceLabel>) -> Result<Self> {
        let mut min = [f64::INFINITY; FORCE_AXES];
        let mut max = [f64::NEG_INFINITY; FORCE_AXES];
        for l in labels {
            for (a, v) in l.as_array().into_iter().enumerate() {
                min[a] = min[a].min(v);
                max[a] = max[a].max(v);
            }
        }
        Self::new(min, max)
    }

    pub fn range(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    #[inline]
    pub fn normalize(&self, axis: usize, f: f64) -> f64 {
        (f - self.min[axis]) / self.range(axis)
    }

    #[inline]
    pub fn denormalize(&self, axis: usize, v: f64) -> f64 {
        self.min[axis] + v * self.range(axis)
    }

    pub fn normalize_label(&self, l: &ForceLabel) -> [f64; FORCE_AXES] {
        let a = l.as_array();
        [
            self.normalize(0, a[0]),
            self.normalize(1, a[1]),
            self.normalize(2, a[2]),
        ]
    }
}

/// Apply the affine map to every row of an `N x 3` force matrix.
pub fn scale_forces(forces: &Matrix, spec: &NormalizationSpec, direction: Direction) -> Result<Matrix> {
    spec.validate()?;
    if forces.cols != FORCE_AXES {
        return Err(Error::shape("scale_forces", FORCE_AXES, forces.cols));
    }
    let mut out = forces.clone();
    for i in 0..out.rows {
        for (a, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = match direction {
                Direction::Normalize => spec.normalize(a, *v),
                Direction::Denormalize => spec.denormalize(a, *v),
            };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn source_spec() -> NormalizationSpec {
        NormalizationSpec::new([-0.75, -0.75, -3.0], [0.75, 0.75, 0.0]).unwrap()
    }

    #[test]
    fn endpoints_and_midpoint() {
        let s = source_spec();
        let f = Matrix::from_rows(&[vec![-0.75, -0.75, -3.0], vec![0.75, 0.75, 0.0], vec![0.0, 0.0, -1.5]]).unwrap();
        let n = scale_forces(&f, &s, Direction::Normalize).unwrap();
        assert_eq!(n.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(n.row(1), &[1.0, 1.0, 1.0]);
        assert_eq!(n.get(2, 2), 0.5);
    }

    #[test]
    fn degenerate_spec_rejected() {
        assert!(NormalizationSpec::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
        let bad = NormalizationSpec {
            min: [0.0; 3],
            max: [0.0; 3],
        };
        assert!(scale_forces(&Matrix::zeros(1, 3), &bad, Direction::Normalize).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(fx in -5.0f64..5.0, fy in -5.0f64..5.0, fz in -5.0f64..5.0) {
            let s = source_spec();
            let f = Matrix::from_vec(1, 3, vec![fx, fy, fz]).unwrap();
            let back = scale_forces(&scale_forces(&f, &s, Direction::Normalize).unwrap(), &s, Direction::Denormalize).unwrap();
            for (a, b) in f.data.iter().zip(&back.data) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
