//! Observed systems: an observation map `F` between the torus and a
//! measurement space, hitting times of `F`-balls, pushforward dimensions and
//! the finite-difference rank of `dF`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hitting::{hitting_time, HittingRecord, Tau};
use crate::observables::{estimate_dimension, DimensionEstimate, DimensionOptions, Observable, RadiusLadder};
use crate::point::{euclid_dist, torus_dist, wrap_signed, PhasePoint, MAX_DIM};
use crate::system::SystemSpec;

/// Catalog of observation maps `F: T^d -> Y`.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservationMap {
    Identity,
    /// Coordinate projection onto the listed (0-based) coordinates.
    Projection(Vec<usize>),
    /// `x -> A x` on the fundamental-domain representative, flat codomain.
    Linear(Vec<Vec<f64>>),
    /// `(x, y) -> (x + a sin 2 pi y, y)` on `T^2`.
    Shear(f64),
    /// `(x, y) -> x + a sin 2 pi y` on the circle.
    Twist(f64),
    Constant(Vec<f64>),
}

impl ObservationMap {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, a.trim()),
            None => (text, ""),
        };
        let bad = |reason: &str| Error::parse("observation map", text, reason);
        match head {
            "identity" if arg.is_empty() => Ok(ObservationMap::Identity),
            "proj" => Ok(ObservationMap::Projection(parse_coords(arg).ok_or_else(|| bad("expected 1-based coordinates"))?)),
            h if h.starts_with("proj") && arg.is_empty() => {
                Ok(ObservationMap::Projection(parse_coords(&h[4..]).ok_or_else(|| bad("expected 1-based coordinates"))?))
            }
            "linear" => {
                let rows = parse_float_rows(arg).ok_or_else(|| bad("expected [[a,b],[c,d]]"))?;
                let cols = rows.first().map_or(0, |r| r.len());
                if rows.is_empty() || rows.len() > MAX_DIM || cols == 0 || rows.iter().any(|r| r.len() != cols) {
                    return Err(bad("matrix rows must be non-empty and of equal length"));
                }
                Ok(ObservationMap::Linear(rows))
            }
            "shear" => Ok(ObservationMap::Shear(arg.parse().map_err(|_| bad("expected amplitude"))?)),
            "twist" => Ok(ObservationMap::Twist(arg.parse().map_err(|_| bad("expected amplitude"))?)),
            "const" => {
                let v = parse_floats(arg).ok_or_else(|| bad("expected comma separated values"))?;
                if v.is_empty() || v.len() > MAX_DIM {
                    return Err(bad("bad codomain dimension"));
                }
                Ok(ObservationMap::Constant(v))
            }
            _ => Err(bad("unknown map")),
        }
    }

    pub fn codomain_dim(&self, domain_dim: usize) -> usize {
        match self {
            ObservationMap::Identity => domain_dim,
            ObservationMap::Projection(c) => c.len(),
            ObservationMap::Linear(rows) => rows.len(),
            ObservationMap::Shear(_) => 2,
            ObservationMap::Twist(_) => 1,
            ObservationMap::Constant(v) => v.len(),
        }
    }

    /// Checks the map accepts points of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let ok = match self {
            ObservationMap::Identity | ObservationMap::Constant(_) => true,
            ObservationMap::Projection(c) => !c.is_empty() && c.iter().all(|&i| i < dim),
            ObservationMap::Linear(rows) => rows[0].len() == dim,
            ObservationMap::Shear(_) | ObservationMap::Twist(_) => dim == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("observation map {self} does not accept {dim}-dimensional points")))
        }
    }

    /// Whether the codomain carries the torus metric.
    pub fn periodic(&self) -> bool {
        !matches!(self, ObservationMap::Linear(_) | ObservationMap::Constant(_))
    }

    /// Writes `F(x)` into `out[..codomain_dim]`. `x` is read as a real vector,
    /// so finite differences may step outside `[0,1)`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ObservationMap::Identity => out[..x.len()].copy_from_slice(x),
            ObservationMap::Projection(c) => project_into(c, x, out),
            ObservationMap::Linear(rows) => {
                for (o, row) in out.iter_mut().zip(rows) {
                    *o = row.iter().zip(x).map(|(a, v)| a * v).sum();
                }
            }
            ObservationMap::Shear(a) => {
                out[0] = (x[0] + a * (2.0 * PI * x[1]).sin()).rem_euclid(1.0);
                out[1] = x[1].rem_euclid(1.0);
            }
            ObservationMap::Twist(a) => out[0] = (x[0] + a * (2.0 * PI * x[1]).sin()).rem_euclid(1.0),
            ObservationMap::Constant(v) => out[..v.len()].copy_from_slice(v),
        }
    }

    /// Distance in the codomain.
    pub fn image_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.periodic() {
            torus_dist(a, b)
        } else {
            euclid_dist(a, b)
        }
    }

    /// Lipschitz constant with respect to the torus metric. For linear maps
    /// this is the Frobenius bound on the fundamental domain only.
    pub fn lipschitz(&self) -> f64 {
        match self {
            ObservationMap::Identity | ObservationMap::Projection(_) => 1.0,
            ObservationMap::Linear(rows) => rows.iter().flatten().map(|a| a * a).sum::<f64>().sqrt(),
            ObservationMap::Shear(a) => 1.0 + 2.0 * PI * a.abs(),
            ObservationMap::Twist(a) => (1.0 + (2.0 * PI * a).powi(2)).sqrt(),
            ObservationMap::Constant(_) => 0.0,
        }
    }

    /// Largest codomain distance from `target` over the torus.
    pub fn image_radius_bound(&self, domain_dim: usize, target: &[f64]) -> f64 {
        match self {
            ObservationMap::Linear(rows) => {
                let norm: f64 = rows.iter().flatten().map(|a| a * a).sum::<f64>().sqrt();
                norm * (domain_dim as f64).sqrt() + target.iter().map(|t| t * t).sum::<f64>().sqrt()
            }
            ObservationMap::Constant(v) => euclid_dist(v, target),
            _ => (self.codomain_dim(domain_dim) as f64).sqrt() / 2.0,
        }
    }
}

impl fmt::Display for ObservationMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservationMap::Identity => f.write_str("identity"),
            ObservationMap::Projection(c) => write!(f, "proj:{}", join(c.iter().map(|i| i + 1))),
            ObservationMap::Linear(rows) => {
                let r: Vec<String> = rows.iter().map(|row| format!("[{}]", join(row.iter()))).collect();
                write!(f, "linear:[{}]", r.join(","))
            }
            ObservationMap::Shear(a) => write!(f, "shear:{a}"),
            ObservationMap::Twist(a) => write!(f, "twist:{a}"),
            ObservationMap::Constant(v) => write!(f, "const:{}", join(v.iter())),
        }
    }
}

/// Shared by projected-distance observables and projection maps so both
/// produce bit-identical values.
pub(crate) fn project_into(coords: &[usize], x: &[f64], out: &mut [f64]) {
    for (o, &i) in out.iter_mut().zip(coords) {
        *o = x[i];
    }
}

pub(crate) fn join<T: fmt::Display>(items: impl Iterator<Item = T>) -> String {
    items.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// 1-based comma separated coordinate list, returned 0-based.
pub(crate) fn parse_coords(text: &str) -> Option<Vec<usize>> {
    let v = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().ok().filter(|&i| i >= 1).map(|i| i - 1))
        .collect::<Option<Vec<_>>>()?;
    let mut sorted = v.clone();
    sorted.sort_unstable();
    sorted.dedup();
    (sorted.len() == v.len() && v.len() <= MAX_DIM).then_some(v)
}

pub(crate) fn parse_floats(text: &str) -> Option<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

fn parse_float_rows(text: &str) -> Option<Vec<Vec<f64>>> {
    let inner = text.trim().strip_prefix('[')?.strip_suffix(']')?;
    let mut rows = Vec::new();
    for chunk in inner.split(']') {
        let chunk = chunk.trim().trim_start_matches(',').trim();
        if chunk.is_empty() {
            continue;
        }
        rows.push(parse_floats(chunk.strip_prefix('[')?)?);
    }
    Some(rows)
}

/// Hitting time of the `r`-ball around `F(x0)` in the observation space.
pub fn observed_hitting_time(
    system: &SystemSpec,
    x: &PhasePoint,
    x0: &PhasePoint,
    map: &ObservationMap,
    r: f64,
    cap: u64,
) -> Result<HittingRecord> {
    map.validate(system.dimension())?;
    if let ObservationMap::Constant(_) = map {
        if cap == 0 {
            return Err(Error::InvalidArgument("cap must be at least 1".into()));
        }
        // The image is a single point, so the first step already hits.
        return Ok(HittingRecord {
            point_id: 0,
            radius: r,
            tau: if r >= 0.0 { Tau::Hit(1) } else { Tau::Censored(cap) },
            steps_used: 0,
        });
    }
    let f = Observable::pushforward_from(map.clone(), &x0.to_f64s())?;
    hitting_time(system, x, &f, r, cap)
}

/// Local dimension of `F_* mu` at `F(x0)`, estimated as the sublevel dimension
/// of `x -> |F(x) - F(x0)|`.
pub fn pushforward_dimension(
    system: &SystemSpec,
    map: &ObservationMap,
    x0: &PhasePoint,
    ladder: &RadiusLadder,
    seed: u64,
    samples: usize,
    options: &DimensionOptions,
) -> Result<DimensionEstimate> {
    let f = Observable::pushforward_from(map.clone(), &x0.to_f64s())?;
    estimate_dimension(&f, ladder, system, seed, samples, options)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub base_point: Vec<f64>,
    pub step: f64,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tolerance: f64,
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Rank of the central finite-difference Jacobian of `F` at `x`.
pub fn jacobian_rank(map: &ObservationMap, x: &[f64], h: f64) -> Result<RankReport> {
    if !(1e-8..=1e-2).contains(&h) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h} outside [1e-8, 1e-2]")));
    }
    let n = x.len();
    map.validate(n)?;
    let m = map.codomain_dim(n);
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let (mut plus, mut minus) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
    let (mut fp, mut fm) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
    for j in 0..n {
        plus[..n].copy_from_slice(x);
        minus[..n].copy_from_slice(x);
        plus[j] += h;
        minus[j] -= h;
        map.apply(&plus[..n], &mut fp);
        map.apply(&minus[..n], &mut fm);
        for i in 0..m {
            let mut d = fp[i] - fm[i];
            if map.periodic() {
                d = wrap_signed(d);
            }
            jac[(i, j)] = d / (2.0 * h);
        }
    }
    let singular_values: Vec<f64> = if m == 0 || n == 0 {
        Vec::new()
    } else {
        let mut s: Vec<f64> = jac.svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let tolerance = (1e-8 * smax).max(1e-6);
    let rank = singular_values.iter().filter(|&&s| s > tolerance).count();
    Ok(RankReport {
        base_point: x.to_vec(),
        step: h,
        singular_values,
        rank,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["identity", "proj:1", "proj:2,1", "linear:[[1,0],[2,0]]", "shear:0.1", "twist:0.2", "const:0.5"] {
            let m = ObservationMap::parse(s).unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert_eq!(ObservationMap::parse("proj1").unwrap(), ObservationMap::Projection(vec![0]));
        assert!(ObservationMap::parse("proj:0").is_err());
        assert!(ObservationMap::parse("linear:[[1,0],[2]]").is_err());
    }

    #[test]
    fn ranks() {
        let x = [0.3, 0.6];
        let lin = ObservationMap::parse("linear:[[1,0],[2,0]]").unwrap();
        assert_eq!(jacobian_rank(&lin, &x, 1e-5).unwrap().rank, 1);
        assert_eq!(jacobian_rank(&ObservationMap::Identity, &x, 1e-5).unwrap().rank, 2);
        assert_eq!(jacobian_rank(&ObservationMap::Constant(vec![0.5]), &x, 1e-5).unwrap().rank, 0);
        assert_eq!(jacobian_rank(&ObservationMap::Shear(0.2), &x, 1e-5).unwrap().rank, 2);
        assert_eq!(jacobian_rank(&ObservationMap::Twist(0.2), &x, 1e-5).unwrap().rank, 1);
        // Periodic wrap across the boundary.
        assert_eq!(jacobian_rank(&ObservationMap::Identity, &[0.0, 0.999_999_9], 1e-5).unwrap().rank, 2);
        assert!(jacobian_rank(&ObservationMap::Identity, &x, 0.1).is_err());
    }
}
