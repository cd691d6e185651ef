use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::Fraction;
use crate::reservoir::ReservoirPoint;

/// Largest torus dimension handled by the stack-allocated coordinate buffers.
pub const MAX_DIM: usize = 8;

/// Which arithmetic backs a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    FixedPoint,
    Rational,
    Reservoir,
    Float,
}

/// Point of the torus `T^d = [0,1)^d`.
#[derive(Clone, Debug, PartialEq)]
pub enum PhasePoint {
    /// Binary fractions with a declared precision. `spent` counts the digits
    /// consumed by non-invertible doubling steps.
    Fixed { coords: Vec<Fraction>, spent: u32 },
    /// Exact rationals `nums[i] / den`.
    Rational { nums: Vec<u64>, den: u64 },
    Reservoir(ReservoirPoint),
    /// Double precision, used by the Manneville-Pomeau engine only.
    Float(Vec<f64>),
}

impl PhasePoint {
    pub fn fixed(coords: Vec<Fraction>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::InvalidPoint(format!(
                "dimension {} outside 1..={MAX_DIM}",
                coords.len()
            )));
        }
        let bits = coords[0].bits();
        if coords.iter().any(|c| c.bits() != bits) {
            return Err(Error::InvalidPoint("mixed precisions".into()));
        }
        Ok(PhasePoint::Fixed { coords, spent: 0 })
    }

    /// Dyadic point `nums[i] / 2^log2_den` at precision `bits`.
    pub fn dyadic(nums: &[u64], log2_den: u32, bits: u32) -> Result<Self> {
        let coords = nums
            .iter()
            .map(|&n| Fraction::from_dyadic(n, log2_den, bits))
            .collect::<Result<Vec<_>>>()?;
        Self::fixed(coords)
    }

    /// Truncates float coordinates to fixed point.
    pub fn fixed_from_f64(values: &[f64], bits: u32) -> Result<Self> {
        let coords = values
            .iter()
            .map(|&v| Fraction::from_f64(v, bits))
            .collect::<Result<Vec<_>>>()?;
        Self::fixed(coords)
    }

    pub fn rational(nums: Vec<u64>, den: u64) -> Result<Self> {
        if den == 0 || nums.iter().any(|&n| n >= den) {
            return Err(Error::InvalidPoint(format!(
                "rational coordinates {nums:?}/{den} not in [0,1)"
            )));
        }
        if nums.is_empty() || nums.len() > MAX_DIM {
            return Err(Error::InvalidPoint("bad dimension".into()));
        }
        Ok(PhasePoint::Rational { nums, den })
    }

    pub fn float(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() > MAX_DIM {
            return Err(Error::InvalidPoint("bad dimension".into()));
        }
        if values.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(Error::InvalidPoint(format!("{values:?} not in [0,1)")));
        }
        Ok(PhasePoint::Float(values))
    }

    pub fn dim(&self) -> usize {
        match self {
            PhasePoint::Fixed { coords, .. } => coords.len(),
            PhasePoint::Rational { nums, .. } => nums.len(),
            PhasePoint::Reservoir(_) => 1,
            PhasePoint::Float(v) => v.len(),
        }
    }

    pub fn engine(&self) -> Engine {
        match self {
            PhasePoint::Fixed { .. } => Engine::FixedPoint,
            PhasePoint::Rational { .. } => Engine::Rational,
            PhasePoint::Reservoir(_) => Engine::Reservoir,
            PhasePoint::Float(_) => Engine::Float,
        }
    }

    /// Writes float coordinates into `out[..dim]`; every value is in `[0,1)`.
    pub fn write_f64(&self, out: &mut [f64]) {
        match self {
            PhasePoint::Fixed { coords, .. } => {
                for (o, c) in out.iter_mut().zip(coords) {
                    *o = c.to_f64();
                }
            }
            PhasePoint::Rational { nums, den } => {
                for (o, &n) in out.iter_mut().zip(nums) {
                    *o = below_one(n as f64 / *den as f64);
                }
            }
            PhasePoint::Reservoir(p) => out[0] = p.to_f64(),
            PhasePoint::Float(v) => out[..v.len()].copy_from_slice(v),
        }
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        let mut buf = [0.0; MAX_DIM];
        self.write_f64(&mut buf);
        buf[..self.dim()].to_vec()
    }
}

pub(crate) fn below_one(v: f64) -> f64 {
    if v >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        v
    }
}

/// Quotient metric on the torus: per-coordinate wrap, then Euclidean norm.
pub fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return wrap_abs(a[0] - b[0]);
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = wrap_abs(x - y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Distance from `d` to the nearest integer.
pub(crate) fn wrap_abs(d: f64) -> f64 {
    let d = d.abs().fract();
    d.min(1.0 - d)
}

/// Representative of `d` modulo one in `[-1/2, 1/2)`.
pub(crate) fn wrap_signed(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

pub fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
