//! Indenter contact path.
//!
//! The indenter visits a regular grid of surface points. At each surface point
//! it first records the untouched reference position, then for every depth it
//! sweeps circles of increasing radius, visiting `n_angles` equally spaced
//! directions per circle. The position of a contact inside this per-point
//! sequence is its contact class.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSpec {
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub surface_w_mm: f64,
    pub surface_h_mm: f64,
    pub depths_mm: Vec<f64>,
    pub radii_mm: Vec<f64>,
    pub n_angles: usize,
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec {
            grid_nx: 6,
            grid_ny: 5,
            surface_w_mm: 10.0,
            surface_h_mm: 8.0,
            depths_mm: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            radii_mm: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            n_angles: 12,
        }
    }
}

impl PathSpec {
    /// The full path used for the large data groups.
    pub fn full() -> Self {
        Self::default()
    }

    /// A sparser path for small target groups: 3x3 grid, two depths, two
    /// radii. Keeps the extreme depth and radius so the force range matches
    /// the full path.
    pub fn sparse() -> Self {
        PathSpec {
            grid_nx: 3,
            grid_ny: 3,
            depths_mm: vec![0.5, 1.0],
            radii_mm: vec![0.3, 0.6],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_nx == 0 || self.grid_ny == 0 {
            return Err(Error::invalid("surface grid must have at least one point per axis"));
        }
        if !(self.surface_w_mm > 0.0 && self.surface_h_mm > 0.0) {
            return Err(Error::invalid("surface dimensions must be positive"));
        }
        if self.n_angles == 0 {
            return Err(Error::invalid("n_angles must be at least 1"));
        }
        check_ascending("depths_mm", &self.depths_mm)?;
        check_ascending("radii_mm", &self.radii_mm)?;
        Ok(())
    }

    /// Contact points per surface point, including the reference position.
    pub fn points_per_surface(&self) -> usize {
        1 + self.depths_mm.len() * self.n_angles * self.radii_mm.len()
    }

    /// Number of contact classes; equal to [`Self::points_per_surface`].
    pub fn num_classes(&self) -> usize {
        self.points_per_surface()
    }

    pub fn num_surface_points(&self) -> usize {
        self.grid_nx * self.grid_ny
    }

    pub fn total_points(&self) -> usize {
        self.num_surface_points() * self.points_per_surface()
    }

    pub fn max_radius_mm(&self) -> f64 {
        self.radii_mm.last().copied().unwrap_or(0.0)
    }

    pub fn max_depth_mm(&self) -> f64 {
        self.depths_mm.last().copied().unwrap_or(0.0)
    }

    /// Centre of surface cell `index` (row-major, x fastest) in mm.
    pub fn surface_point(&self, index: usize) -> [f64; 2] {
        let i = index % self.grid_nx;
        let j = index / self.grid_nx;
        [
            (i as f64 + 0.5) * self.surface_w_mm / self.grid_nx as f64,
            (j as f64 + 0.5) * self.surface_h_mm / self.grid_ny as f64,
        ]
    }
}

fn check_ascending(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} must not be empty")));
    }
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::invalid(format!("{name} entries must be finite and positive")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{name} must be strictly ascending")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub surface_index: usize,
    pub surface_xy: [f64; 2],
    pub depth: f64,
    pub lateral: [f64; 2],
    pub class_index: usize,
}

impl ContactPoint {
    pub fn is_reference(&self) -> bool {
        self.class_index == 0
    }

    pub fn lateral_norm(&self) -> f64 {
        self.lateral[0].hypot(self.lateral[1])
    }
}

/// The in-depth sequence for one surface point, reference first.
pub fn depth_sequence(spec: &PathSpec, surface_index: usize) -> Vec<ContactPoint> {
    let surface_xy = spec.surface_point(surface_index);
    let mut out = Vec::with_capacity(spec.points_per_surface());
    out.push(ContactPoint {
        surface_index,
        surface_xy,
        depth: 0.0,
        lateral: [0.0, 0.0],
        class_index: 0,
    });
    for &depth in &spec.depths_mm {
        for &r in &spec.radii_mm {
            for k in 0..spec.n_angles {
                let theta = 2.0 * PI * k as f64 / spec.n_angles as f64;
                out.push(ContactPoint {
                    surface_index,
                    surface_xy,
                    depth,
                    lateral: [r * theta.cos(), r * theta.sin()],
                    class_index: out.len(),
                });
            }
        }
    }
    out
}

/// Full ordered contact path over every surface point.
pub fn generate_contact_path(spec: &PathSpec) -> Result<Vec<ContactPoint>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.total_points());
    for s in 0..spec.num_surface_points() {
        out.extend(depth_sequence(spec, s));
    }
    Ok(out)
}

/// One-hot contact-class label of `point` under `spec`.
pub fn assign_contact_class(point: &ContactPoint, spec: &PathSpec) -> Result<Vec<f64>> {
    onehot(point.class_index, spec.num_classes())
}

pub fn onehot(class_index: usize, num_classes: usize) -> Result<Vec<f64>> {
    if class_index >= num_classes {
        return Err(Error::invalid(format!(
            "class index {class_index} out of range for {num_classes} classes"
        )));
    }
    let mut v = vec![0.0; num_classes];
    v[class_index] = 1.0;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counts() {
        let spec = PathSpec::default();
        assert_eq!(spec.points_per_surface(), 361);
        assert_eq!(spec.num_surface_points(), 30);
        let path = generate_contact_path(&spec).unwrap();
        assert_eq!(path.len(), 10_830);
    }

    #[test]
    fn sparse_counts() {
        let spec = PathSpec::sparse();
        assert_eq!(spec.points_per_surface(), 49);
        assert_eq!(generate_contact_path(&spec).unwrap().len(), 441);
    }

    #[test]
    fn each_sequence_starts_at_reference() {
        let spec = PathSpec::default();
        let path = generate_contact_path(&spec).unwrap();
        for chunk in path.chunks(361) {
            let p = chunk[0];
            assert_eq!(p.class_index, 0);
            assert_eq!(p.depth, 0.0);
            assert_eq!(p.lateral, [0.0, 0.0]);
            for (j, q) in chunk.iter().enumerate() {
                assert_eq!(q.class_index, j);
                assert_eq!(q.surface_index, p.surface_index);
                assert_eq!(q.is_reference(), q.depth == 0.0 && q.lateral == [0.0, 0.0]);
                assert!(q.lateral_norm() <= spec.max_radius_mm() + 1e-12);
            }
        }
    }

    #[test]
    fn ordering_depth_then_radius_then_angle() {
        let spec = PathSpec::default();
        let seq = depth_sequence(&spec, 0);
        // class 1: first depth, smallest radius, angle 0
        assert_eq!(seq[1].depth, 0.2);
        assert!((seq[1].lateral[0] - 0.1).abs() < 1e-15);
        // class 13: first depth, second radius, angle 0
        assert_eq!(seq[13].depth, 0.2);
        assert!((seq[13].lateral[0] - 0.2).abs() < 1e-15);
        // class 73: second depth begins
        assert_eq!(seq[72].depth, 0.2);
        assert_eq!(seq[73].depth, 0.4);
        assert_eq!(seq[360].depth, 1.0);
    }

    #[test]
    fn onehot_labels() {
        let spec = PathSpec::default();
        let seq = depth_sequence(&spec, 3);
        let e0 = assign_contact_class(&seq[0], &spec).unwrap();
        assert_eq!(e0[0], 1.0);
        assert_eq!(e0.iter().sum::<f64>(), 1.0);
        let last = assign_contact_class(&seq[360], &spec).unwrap();
        assert_eq!(last[360], 1.0);
        let mut acc = vec![0.0; 361];
        for p in &seq {
            for (a, v) in acc.iter_mut().zip(assign_contact_class(p, &spec).unwrap()) {
                *a += v;
            }
        }
        assert!(acc.iter().all(|&v| v == 1.0));
        let mut bad = seq[0];
        bad.class_index = 361;
        assert!(assign_contact_class(&bad, &spec).is_err());
    }

    #[test]
    fn rejects_unsorted_radii() {
        let spec = PathSpec {
            radii_mm: vec![0.2, 0.1],
            ..PathSpec::default()
        };
        assert!(generate_contact_path(&spec).is_err());
    }
}
