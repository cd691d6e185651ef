//! Minimal approach distances `d_n(x, p) = min_{1<=i<=n} |pi(T^i x) - p|`
//! along exact orbits of a hyperbolic toral automorphism, standing in for a
//! time-one geodesic map with its canonical projection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observed::project_into;
use crate::point::{torus_dist, PhasePoint, MAX_DIM};
use crate::stats::{fit_line, median};
use crate::system::{Orbit, SystemKind, SystemSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproachSeries {
    pub target: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub d_n: Vec<f64>,
    pub fit_from: u64,
    /// Slope of `-log d_n` against `log n` over grid points `n >= fit_from`;
    /// `None` with fewer than two such points.
    pub exponent: Option<f64>,
    /// Largest and median `-log d_n / log n` over the same points.
    pub tail_max_ratio: f64,
    pub tail_median_ratio: f64,
}

/// `per_decade` log-spaced integers from 1 to `n_max` inclusive.
pub fn log_grid(n_max: u64, per_decade: u32) -> Vec<u64> {
    let mut out = vec![];
    let steps = ((n_max as f64).log10() * per_decade as f64).ceil() as u32;
    for i in 0..=steps {
        let n = (10f64.powf(i as f64 / per_decade as f64).round() as u64).min(n_max);
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Running minima of the projected distance to `p` at the grid points.
/// `coords` are the 0-based projected coordinates. The exponent is fitted
/// over `n >= fit_from`, by default the largest decade.
pub fn approach_series(
    system: &SystemSpec,
    coords: &[usize],
    x: &PhasePoint,
    p: &[f64],
    n_grid: &[u64],
    fit_from: Option<u64>,
) -> Result<ApproachSeries> {
    if !matches!(system.kind, SystemKind::ToralAutomorphism(_)) {
        return Err(Error::InvalidSystem(format!("{} is not a toral automorphism", system.id())));
    }
    let d = system.dimension();
    if coords.is_empty() || coords.len() != p.len() || coords.iter().any(|&c| c >= d) {
        return Err(Error::InvalidArgument("projection does not match the target".into()));
    }
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("n grid must be positive and increasing".into()));
    }
    let mut orbit = Orbit::new(system, x)?;
    let (mut buf, mut proj) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
    let mut best = f64::INFINITY;
    let mut d_n = Vec::with_capacity(n_grid.len());
    let mut gi = 0;
    for i in 1..=*n_grid.last().unwrap() {
        orbit.advance()?;
        orbit.write_f64(&mut buf);
        project_into(coords, &buf[..d], &mut proj);
        best = best.min(torus_dist(&proj[..coords.len()], p));
        if n_grid[gi] == i {
            d_n.push(best);
            gi += 1;
        }
    }
    // Default tail: the largest decade of the grid.
    let fit_from = fit_from.unwrap_or_else(|| n_grid.last().unwrap().div_ceil(10));
    let tail: Vec<usize> = (0..n_grid.len()).filter(|&i| n_grid[i] >= fit_from).collect();
    let xs: Vec<f64> = tail.iter().map(|&i| (n_grid[i] as f64).ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| -d_n[i].ln()).collect();
    let ratios: Vec<f64> = xs.iter().zip(&ys).filter(|(x, _)| **x > 0.0).map(|(x, y)| y / x).collect();
    Ok(ApproachSeries {
        target: p.to_vec(),
        n_grid: n_grid.to_vec(),
        fit_from,
        exponent: fit_line(&xs, &ys).map(|f| f.slope),
        tail_max_ratio: ratios.iter().copied().fold(f64::NAN, f64::max),
        tail_median_ratio: median(&ratios),
        d_n,
    })
}
