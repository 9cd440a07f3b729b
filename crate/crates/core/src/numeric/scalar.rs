use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Arithmetic width used for a whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Precision {
    Bits32,
    Bits64,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::Bits32 => 32,
            Precision::Bits64 => 64,
        }
    }

    /// Byte width of one scalar; doubles as the tag in the binary matrix format.
    pub fn byte_width(self) -> u8 {
        match self {
            Precision::Bits32 => 4,
            Precision::Bits64 => 8,
        }
    }

    pub fn from_byte_width(tag: u8) -> Option<Self> {
        match tag {
            4 => Some(Precision::Bits32),
            8 => Some(Precision::Bits64),
            _ => None,
        }
    }

    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Bits32 => f32::EPSILON as f64,
            Precision::Bits64 => f64::EPSILON,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

impl From<Precision> for u32 {
    fn from(p: Precision) -> u32 {
        p.bits()
    }
}

impl TryFrom<u32> for Precision {
    type Error = String;

    fn try_from(bits: u32) -> Result<Self, Self::Error> {
        match bits {
            32 => Ok(Precision::Bits32),
            64 => Ok(Precision::Bits64),
            other => Err(format!("precision must be 32 or 64, got {other}")),
        }
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "32" | "f32" | "Bits32" => Ok(Precision::Bits32),
            "64" | "f64" | "Bits64" => Ok(Precision::Bits64),
            other => Err(format!("unknown precision '{other}' (expected 32 or 64)")),
        }
    }
}

/// Real scalar usable by every kernel in the crate. Implemented for `f32` and `f64` only.
pub trait Scalar:
    Float
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    const PRECISION: Precision;

    /// Relative floor for `y0' S y0` style denominators.
    const DENOMINATOR_FLOOR: f64;

    /// Relative tolerance for checking caller-supplied consistency preconditions.
    const CONSISTENCY_TOL: f64;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    /// `bytes` must hold exactly `PRECISION.byte_width()` bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const PRECISION: Precision = Precision::Bits32;
    const DENOMINATOR_FLOOR: f64 = 1e-5;
    const CONSISTENCY_TOL: f64 = 1e-4;

    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte scalar"))
    }
}

impl Scalar for f64 {
    const PRECISION: Precision = Precision::Bits64;
    const DENOMINATOR_FLOOR: f64 = 1e-12;
    const CONSISTENCY_TOL: f64 = 1e-8;

    fn from_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte scalar"))
    }
}
