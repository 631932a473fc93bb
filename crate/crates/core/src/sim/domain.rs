use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of illumination conditions and elastomers the simulator knows.
pub const NUM_ILLUMINATIONS: u8 = 3;
pub const NUM_ELASTOMERS: u8 = 3;

/// Effective modulus of each elastomer relative to elastomer 0.
pub const ELASTOMER_MODULUS_SCALE: [f64; NUM_ELASTOMERS as usize] = [1.0, 1.25, 1.5];

/// The three variables that separate one sensor domain from another:
/// marker presence, illumination condition and elastomer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub markers: bool,
    pub illumination_index: u8,
    pub elastomer_index: u8,
}

impl DomainConfig {
    pub fn new(markers: bool, illumination_index: u8, elastomer_index: u8) -> Result<Self> {
        let d = DomainConfig {
            markers,
            illumination_index,
            elastomer_index,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.illumination_index >= NUM_ILLUMINATIONS {
            return Err(Error::invalid(format!(
                "illumination_index {} out of range 0..{}",
                self.illumination_index, NUM_ILLUMINATIONS
            )));
        }
        if self.elastomer_index >= NUM_ELASTOMERS {
            return Err(Error::invalid(format!(
                "elastomer_index {} out of range 0..{}",
                self.elastomer_index, NUM_ELASTOMERS
            )));
        }
        Ok(())
    }

    /// Number of domain variables on which `self` and `other` differ.
    pub fn gap(&self, other: &DomainConfig) -> usize {
        usize::from(self.markers != other.markers)
            + usize::from(self.illumination_index != other.illumination_index)
            + usize::from(self.elastomer_index != other.elastomer_index)
    }
}

/// Formats as `mb0i0` / `wmb1i1`.
impl fmt::Display for DomainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = if self.markers { "m" } else { "wm" };
        write!(f, "{m}b{}i{}", self.elastomer_index, self.illumination_index)
    }
}

impl FromStr for DomainConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse domain label {s:?} (expected e.g. mb0i0)"));
        let (markers, rest) = if let Some(r) = s.strip_prefix("wm") {
            (false, r)
        } else if let Some(r) = s.strip_prefix('m') {
            (true, r)
        } else {
            return Err(bad());
        };
        let b = rest.as_bytes();
        if b.len() != 4 || b[0] != b'b' || b[2] != b'i' {
            return Err(bad());
        }
        let digit = |c: u8| if c.is_ascii_digit() { Ok(c - b'0') } else { Err(bad()) };
        DomainConfig::new(markers, digit(b[3])?, digit(b[1])?)
    }
}
