//! Contact force law used to label simulated indentations.
//!
//! Normal force follows Hertzian contact of a sphere on an elastic half-space,
//! `F = -(4/3) E* sqrt(R) d^(3/2)`. Tangential force is a linear spring whose
//! stiffness grows with `E* sqrt(d)`, clamped to the Coulomb friction cone.
//! Constants are calibrated so elastomer 0 spans -3..0 N normal and
//! -0.75..0.75 N shear over the default contact path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::domain::{ELASTOMER_MODULUS_SCALE, NUM_ELASTOMERS};

/// Sphere indenter of 3 mm diameter.
pub const INDENTER_RADIUS_MM: f64 = 1.5;
pub const FRICTION_COEFFICIENT: f64 = 0.3;

/// |F_z| at 1 mm depth on elastomer 0.
const NORMAL_FORCE_AT_1MM: f64 = 3.0;
/// |F_shear| at 1 mm depth and 0.6 mm lateral displacement on elastomer 0.
const SHEAR_FORCE_CALIBRATION: f64 = 0.75;
const SHEAR_CALIBRATION_LATERAL_MM: f64 = 0.6;

/// Effective modulus E* of elastomer 0 in N/mm^2.
pub fn base_modulus() -> f64 {
    NORMAL_FORCE_AT_1MM / (4.0 / 3.0 * INDENTER_RADIUS_MM.sqrt())
}

pub fn effective_modulus(elastomer_index: u8) -> Result<f64> {
    if elastomer_index >= NUM_ELASTOMERS {
        return Err(Error::invalid(format!(
            "elastomer_index {elastomer_index} out of range"
        )));
    }
    Ok(base_modulus() * ELASTOMER_MODULUS_SCALE[elastomer_index as usize])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceLabel {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
}

impl ForceLabel {
    pub fn as_array(&self) -> [f64; 3] {
        [self.fx, self.fy, self.fz]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ForceLabel {
            fx: a[0],
            fy: a[1],
            fz: a[2],
        }
    }

    pub fn shear_magnitude(&self) -> f64 {
        self.fx.hypot(self.fy)
    }
}

/// Normal force (N, compressive so `<= 0`) at indentation `depth` (mm).
pub fn hertz_normal_force(depth: f64, elastomer_index: u8) -> Result<f64> {
    if !depth.is_finite() || depth < 0.0 {
        return Err(Error::invalid(format!("depth must be finite and >= 0, got {depth}")));
    }
    let e = effective_modulus(elastomer_index)?;
    Ok(-(4.0 / 3.0) * e * INDENTER_RADIUS_MM.sqrt() * depth.powf(1.5))
}

/// Tangential stiffness in N/mm at `depth`.
pub fn tangential_stiffness(depth: f64, elastomer_index: u8) -> Result<f64> {
    Ok(
        stiffness_ratio(elastomer_index)? * SHEAR_FORCE_CALIBRATION / SHEAR_CALIBRATION_LATERAL_MM
            * depth.max(0.0).sqrt(),
    )
}

/// `E*(e) / E*(0)`, exactly 1 for elastomer 0.
fn stiffness_ratio(elastomer_index: u8) -> Result<f64> {
    Ok(effective_modulus(elastomer_index)? / base_modulus())
}

/// Shear force `(fx, fy)` for a lateral displacement at `depth`.
///
/// `max_lateral_mm` is the largest radius of the generating path; larger
/// displacements would leave the non-slip regime and are rejected.
pub fn shear_force(lateral: [f64; 2], depth: f64, elastomer_index: u8, max_lateral_mm: f64) -> Result<(f64, f64)> {
    let mag = lateral[0].hypot(lateral[1]);
    if mag > max_lateral_mm + 1e-12 {
        return Err(Error::invalid(format!(
            "lateral displacement {mag} mm exceeds path maximum {max_lateral_mm} mm"
        )));
    }
    let fz = hertz_normal_force(depth, elastomer_index)?;
    if mag == 0.0 || depth == 0.0 {
        return Ok((0.0, 0.0));
    }
    // grouped so the calibration point lands exactly on SHEAR_FORCE_CALIBRATION
    let spring = SHEAR_FORCE_CALIBRATION
        * stiffness_ratio(elastomer_index)?
        * depth.sqrt()
        * (mag / SHEAR_CALIBRATION_LATERAL_MM);
    let f = spring.min(FRICTION_COEFFICIENT * fz.abs());
    Ok((f * lateral[0] / mag, f * lateral[1] / mag))
}

/// Full force label for a contact.
pub fn contact_force(depth: f64, lateral: [f64; 2], elastomer_index: u8, max_lateral_mm: f64) -> Result<ForceLabel> {
    let fz = hertz_normal_force(depth, elastomer_index)?;
    let (fx, fy) = shear_force(lateral, depth, elastomer_index, max_lateral_mm)?;
    Ok(ForceLabel { fx, fy, fz })
}
