//! Lipschitz observables `f >= 0`, their sublevel sets `S_r = {f <= r}`,
//! radius ladders, and estimates of `mu(S_r)` and of the sublevel dimension.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::observed::{join, parse_coords, parse_floats, project_into, ObservationMap};
use crate::point::{torus_dist, PhasePoint, MAX_DIM};
use crate::stats::{fit_line, normal_quantile, window_slopes};
use crate::system::{invariant_f64s, SystemSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    DistToPoint { target: Vec<f64> },
    /// Distance between the listed (0-based) coordinates and `target`.
    DistToProjectedPoint { coords: Vec<usize>, target: Vec<f64> },
    /// `|F(x) - target|` in the codomain of `F`.
    Pushforward { map: ObservationMap, target: Vec<f64> },
    WeightedSum(Vec<(f64, Observable)>),
    /// `max(0, g - margin)`: sublevels of `g` fattened by `margin`.
    Thickened { inner: Box<Observable>, margin: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    rule: Rule,
    lipschitz: f64,
}

fn check_target(target: &[f64]) -> Result<()> {
    if target.is_empty() || target.len() > MAX_DIM || target.iter().any(|v| !(0.0..1.0).contains(v)) {
        return Err(Error::InvalidArgument(format!("target {target:?} is not a torus point")));
    }
    Ok(())
}

impl Observable {
    pub fn dist_to_point(target: &[f64]) -> Result<Self> {
        check_target(target)?;
        Ok(Observable {
            rule: Rule::DistToPoint { target: target.to_vec() },
            lipschitz: 1.0,
        })
    }

    pub fn dist_to(point: &PhasePoint) -> Self {
        Observable {
            rule: Rule::DistToPoint { target: point.to_f64s() },
            lipschitz: 1.0,
        }
    }

    /// `coords` are 0-based.
    pub fn dist_to_projected(coords: Vec<usize>, target: &[f64]) -> Result<Self> {
        check_target(target)?;
        if coords.len() != target.len() {
            return Err(Error::InvalidArgument("projection and target dimensions differ".into()));
        }
        Ok(Observable {
            rule: Rule::DistToProjectedPoint { coords, target: target.to_vec() },
            lipschitz: 1.0,
        })
    }

    /// `x -> |F(x) - y0|`.
    pub fn pushforward(map: ObservationMap, y0: &[f64]) -> Result<Self> {
        if y0.is_empty() || y0.len() > MAX_DIM {
            return Err(Error::InvalidArgument("bad codomain target".into()));
        }
        let lipschitz = map.lipschitz();
        Ok(Observable {
            rule: Rule::Pushforward { map, target: y0.to_vec() },
            lipschitz,
        })
    }

    /// `x -> |F(x) - F(x0)|`.
    pub fn pushforward_from(map: ObservationMap, x0: &[f64]) -> Result<Self> {
        map.validate(x0.len())?;
        let mut y0 = [0.0; MAX_DIM];
        map.apply(x0, &mut y0);
        let m = map.codomain_dim(x0.len());
        Self::pushforward(map, &y0[..m])
    }

    pub fn weighted_sum(terms: Vec<(f64, Observable)>) -> Result<Self> {
        if terms.is_empty() || terms.iter().any(|(w, _)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be non-negative and finite".into()));
        }
        let lipschitz = terms.iter().map(|(w, f)| w * f.lipschitz).sum();
        Ok(Observable {
            rule: Rule::WeightedSum(terms),
            lipschitz,
        })
    }

    pub fn thickened(inner: Observable, margin: f64) -> Result<Self> {
        if !(margin >= 0.0) || !margin.is_finite() {
            return Err(Error::InvalidArgument("margin must be non-negative".into()));
        }
        let lipschitz = inner.lipschitz;
        Ok(Observable {
            rule: Rule::Thickened { inner: Box::new(inner), margin },
            lipschitz,
        })
    }

    /// Parses a config rule: `dist:0.375`, `dist:0.1,0.2`, `projdist:1:0.5`,
    /// `pushdist:<map>:<target>`, `fat:<margin>:<rule>`,
    /// `sum:<w>*<rule>;<w>*<rule>`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |reason: &str| Error::parse("observable", text, reason);
        let (head, rest) = text.split_once(':').ok_or_else(|| bad("expected <kind>:<args>"))?;
        match head {
            "dist" => Self::dist_to_point(&parse_floats(rest).ok_or_else(|| bad("expected coordinates"))?),
            "projdist" => {
                let (c, t) = rest.split_once(':').ok_or_else(|| bad("expected projdist:<coords>:<target>"))?;
                let coords = parse_coords(c).ok_or_else(|| bad("expected 1-based coordinates"))?;
                Self::dist_to_projected(coords, &parse_floats(t).ok_or_else(|| bad("expected target"))?)
            }
            "pushdist" => {
                let (m, t) = rest.rsplit_once(':').ok_or_else(|| bad("expected pushdist:<map>:<target>"))?;
                let map = ObservationMap::parse(m)?;
                Self::pushforward(map, &parse_floats(t).ok_or_else(|| bad("expected target"))?)
            }
            "fat" => {
                let (m, inner) = rest.split_once(':').ok_or_else(|| bad("expected fat:<margin>:<rule>"))?;
                let margin: f64 = m.trim().parse().map_err(|_| bad("margin is not a number"))?;
                Self::thickened(Self::parse(inner)?, margin)
            }
            "sum" => {
                let terms = rest
                    .split(';')
                    .map(|t| {
                        let (w, r) = t.split_once('*').ok_or_else(|| bad("expected <weight>*<rule>"))?;
                        let w: f64 = w.trim().parse().map_err(|_| bad("weight is not a number"))?;
                        Ok((w, Self::parse(r)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::weighted_sum(terms)
            }
            _ => Err(bad("unknown observable kind")),
        }
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Checks that `f` is defined on `dim`-dimensional points.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let ok = match &self.rule {
            Rule::DistToPoint { target } => target.len() == dim,
            Rule::DistToProjectedPoint { coords, .. } => coords.iter().all(|&c| c < dim),
            Rule::Pushforward { map, target } => {
                map.validate(dim)?;
                map.codomain_dim(dim) == target.len()
            }
            Rule::WeightedSum(terms) => {
                for (_, f) in terms {
                    f.validate(dim)?;
                }
                true
            }
            Rule::Thickened { inner, .. } => {
                inner.validate(dim)?;
                true
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("observable {self} is not defined on {dim}-dimensional points")))
        }
    }

    /// `f(x)` on float coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.rule {
            Rule::DistToPoint { target } => torus_dist(x, target),
            Rule::DistToProjectedPoint { coords, target } => {
                let mut buf = [0.0; MAX_DIM];
                project_into(coords, x, &mut buf);
                torus_dist(&buf[..coords.len()], target)
            }
            Rule::Pushforward { map, target } => {
                let mut buf = [0.0; MAX_DIM];
                map.apply(x, &mut buf);
                map.image_dist(&buf[..target.len()], target)
            }
            Rule::WeightedSum(terms) => terms.iter().map(|(w, f)| w * f.eval(x)).sum(),
            Rule::Thickened { inner, margin } => (inner.eval(x) - margin).max(0.0),
        }
    }

    pub fn evaluate(&self, x: &PhasePoint) -> f64 {
        let mut buf = [0.0; MAX_DIM];
        x.write_f64(&mut buf);
        self.eval(&buf[..x.dim()])
    }

    /// Upper bound on `sup f` over the `dim`-torus.
    pub fn sup_bound(&self, dim: usize) -> f64 {
        match &self.rule {
            Rule::DistToPoint { .. } => (dim as f64).sqrt() / 2.0,
            Rule::DistToProjectedPoint { coords, .. } => (coords.len() as f64).sqrt() / 2.0,
            Rule::Pushforward { map, target } => map.image_radius_bound(dim, target),
            Rule::WeightedSum(terms) => terms.iter().map(|(w, f)| w * f.sup_bound(dim)).sum(),
            Rule::Thickened { inner, margin } => (inner.sup_bound(dim) - margin).max(0.0),
        }
    }

    /// `mu(S_r)` in closed form, when the system is Lebesgue and the sublevel
    /// set is a ball, a strip, a point image or a fattening of one.
    pub fn exact_measure(&self, system: &SystemSpec, r: f64) -> Option<f64> {
        if !system.is_lebesgue() {
            return None;
        }
        let d = system.dimension();
        match &self.rule {
            Rule::DistToPoint { .. } => ball_measure(d, r),
            Rule::DistToProjectedPoint { coords, .. } => ball_measure(coords.len(), r),
            Rule::Pushforward { map, target } => match map {
                ObservationMap::Identity => ball_measure(d, r),
                ObservationMap::Projection(c) => ball_measure(c.len(), r),
                ObservationMap::Constant(v) => Some(if crate::point::euclid_dist(v, target) <= r { 1.0 } else { 0.0 }),
                _ => None,
            },
            Rule::WeightedSum(_) => None,
            Rule::Thickened { inner, margin } => inner.exact_measure(system, r + margin),
        }
    }

    /// Mollifier of the nested pair `S_r ⊂ S_{r_prev}` at `x`.
    pub fn mollifier(&self, r_prev: f64, r: f64, x: &[f64]) -> f64 {
        mollifier(self.eval(x), r_prev, r)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::DistToPoint { target } => write!(f, "dist:{}", join(target.iter())),
            Rule::DistToProjectedPoint { coords, target } => {
                write!(f, "projdist:{}:{}", join(coords.iter().map(|c| c + 1)), join(target.iter()))
            }
            Rule::Pushforward { map, target } => write!(f, "pushdist:{map}:{}", join(target.iter())),
            Rule::WeightedSum(terms) => {
                let t: Vec<String> = terms.iter().map(|(w, g)| format!("{w}*{g}")).collect();
                write!(f, "sum:{}", t.join(";"))
            }
            Rule::Thickened { inner, margin } => write!(f, "fat:{margin}:{inner}"),
        }
    }
}

/// Lebesgue measure of a radius-`r` ball in `T^k` where known in closed form.
pub fn ball_measure(k: usize, r: f64) -> Option<f64> {
    if r < 0.0 {
        return Some(0.0);
    }
    if k == 1 {
        return Some((2.0 * r).min(1.0));
    }
    if r <= 0.5 {
        let kf = k as f64;
        Some(PI.powf(kf / 2.0) / gamma(kf / 2.0 + 1.0) * r.powf(kf))
    } else if r >= (k as f64).sqrt() / 2.0 {
        Some(1.0)
    } else {
        None
    }
}

/// Piecewise linear interpolation between the indicators of `{f <= r}` and
/// `{f <= r_prev}`.
pub fn mollifier(value: f64, r_prev: f64, r: f64) -> f64 {
    if value <= r {
        1.0
    } else if value >= r_prev {
        0.0
    } else {
        (r_prev - value) / (r_prev - r)
    }
}

/// Strictly decreasing radii `r_0 > r_1 > ...` with `r_{k+1} > c r_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusLadder {
    radii: Vec<f64>,
    gap: f64,
    /// Absolute index of `radii[0]`, so that rung `k` of a `2^-k` ladder is
    /// `radius(k)`.
    first_index: usize,
}

impl RadiusLadder {
    pub fn new(radii: Vec<f64>, gap: f64) -> Result<Self> {
        Self::with_first_index(radii, gap, 0)
    }

    pub fn with_first_index(radii: Vec<f64>, gap: f64, first_index: usize) -> Result<Self> {
        if !(gap > 0.0 && gap < 1.0) {
            return Err(Error::InvalidLadder(format!("gap constant {gap} outside (0,1)")));
        }
        if radii.is_empty() {
            return Err(Error::InvalidLadder("no radii".into()));
        }
        if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidLadder("radii must be positive and finite".into()));
        }
        for (k, w) in radii.windows(2).enumerate() {
            if w[1] >= w[0] {
                return Err(Error::InvalidLadder(format!("radii not strictly decreasing at rung {}", k + 1)));
            }
            if w[1] <= gap * w[0] {
                return Err(Error::InvalidLadder(format!(
                    "gap condition r_{{k+1}} > {gap} r_k violated at rung {}",
                    k + 1
                )));
            }
        }
        Ok(RadiusLadder { radii, gap, first_index })
    }

    /// `2^-k` for `k = k_first..=k_last`, gap constant 0.4.
    pub fn dyadic(k_first: u32, k_last: u32) -> Result<Self> {
        if k_last < k_first {
            return Err(Error::InvalidLadder("empty exponent range".into()));
        }
        let radii = (k_first..=k_last).map(|k| 0.5f64.powi(k as i32)).collect();
        Self::with_first_index(radii, 0.4, k_first as usize)
    }

    /// `2^{-k/2}` for `k = 2 k_first ..= 2 k_last`, the refinement of
    /// [`RadiusLadder::dyadic`] covering the same range.
    pub fn half_dyadic(k_first: u32, k_last: u32) -> Result<Self> {
        if k_last < k_first {
            return Err(Error::InvalidLadder("empty exponent range".into()));
        }
        let radii = (2 * k_first..=2 * k_last)
            .map(|k| 0.5f64.powf(k as f64 / 2.0))
            .collect();
        Self::with_first_index(radii, 0.6, 2 * k_first as usize)
    }

    /// `count` radii `r0, r0 q, r0 q^2, ...`, gap constant `q / 2`.
    pub fn geometric(r0: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidLadder(format!("ratio {ratio} outside (0,1)")));
        }
        let radii = (0..count).map(|i| r0 * ratio.powi(i as i32)).collect();
        Self::new(radii, ratio / 2.0)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    /// Radius at absolute index `k`.
    pub fn radius(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.first_index).and_then(|i| self.radii.get(i).copied())
    }

    /// Sub-ladder of rungs with radius `<= r_max`.
    pub fn below(&self, r_max: f64) -> Result<Self> {
        let skip = self.radii.iter().take_while(|&&r| r > r_max).count();
        Self::with_first_index(self.radii[skip..].to_vec(), self.gap, self.first_index + skip)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub samples: usize,
    pub exact: bool,
}

impl MeasureEstimate {
    pub fn exact(value: f64) -> Self {
        MeasureEstimate {
            estimate: value,
            half_width: 0.0,
            samples: 0,
            exact: true,
        }
    }

    /// Normal-approximation interval for `hits` successes in `n` trials.
    pub fn from_count(hits: usize, n: usize, z: f64) -> Self {
        let p = hits as f64 / n as f64;
        MeasureEstimate {
            estimate: p,
            half_width: z * (p * (1.0 - p) / n as f64).sqrt(),
            samples: n,
            exact: false,
        }
    }

    pub fn lower(&self) -> f64 {
        (self.estimate - self.half_width).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        (self.estimate + self.half_width).min(1.0)
    }

    pub fn expected_hits(&self) -> f64 {
        self.estimate * self.samples as f64
    }
}

pub const DEFAULT_LEVEL: f64 = 0.95;
pub const MIN_SAMPLES: usize = 100;
/// Rungs with fewer expected Monte Carlo hits are left out of slope fits.
pub const MIN_EXPECTED_HITS: f64 = 20.0;

/// Sorted values of `f` over `n` invariant samples.
pub fn sample_values(f: &Observable, system: &SystemSpec, seed: u64, n: usize) -> Result<Vec<f64>> {
    f.validate(system.dimension())?;
    let d = system.dimension();
    let coords = invariant_f64s(system, seed, n)?;
    let mut values: Vec<f64> = coords.chunks(d).map(|x| f.eval(x)).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Number of sorted values `<= r`.
pub fn count_le(sorted: &[f64], r: f64) -> usize {
    sorted.partition_point(|&v| v <= r)
}

/// Monte Carlo estimates of `mu(S_r)` for each radius from one shared sample.
pub fn monte_carlo_measures(
    f: &Observable,
    radii: &[f64],
    system: &SystemSpec,
    seed: u64,
    n: usize,
    level: f64,
) -> Result<Vec<MeasureEstimate>> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    let values = sample_values(f, system, seed, n)?;
    let z = normal_quantile(level);
    Ok(radii
        .iter()
        .map(|&r| MeasureEstimate::from_count(count_le(&values, r), n, z))
        .collect())
}

/// `mu(S_r)` for each radius: exact where a closed form exists, otherwise
/// Monte Carlo over `n` shared invariant samples.
pub fn estimate_measures(
    f: &Observable,
    radii: &[f64],
    system: &SystemSpec,
    seed: u64,
    n: usize,
    level: f64,
) -> Result<Vec<MeasureEstimate>> {
    f.validate(system.dimension())?;
    let exact: Vec<Option<f64>> = radii.iter().map(|&r| f.exact_measure(system, r)).collect();
    if exact.iter().all(Option::is_some) {
        return Ok(exact.into_iter().map(|v| MeasureEstimate::exact(v.unwrap())).collect());
    }
    let mc = monte_carlo_measures(f, radii, system, seed, n, level)?;
    Ok(exact
        .into_iter()
        .zip(mc)
        .map(|(e, m)| e.map_or(m, MeasureEstimate::exact))
        .collect())
}

pub fn estimate_measure(f: &Observable, r: f64, system: &SystemSpec, seed: u64, n: usize) -> Result<MeasureEstimate> {
    Ok(estimate_measures(f, &[r], system, seed, n, DEFAULT_LEVEL)?[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionOptions {
    /// Rungs per sliding window.
    pub window: usize,
    pub level: f64,
    /// Use Monte Carlo even where a closed form exists.
    pub force_monte_carlo: bool,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        DimensionOptions {
            window: 4,
            level: DEFAULT_LEVEL,
            force_monte_carlo: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    /// Least-squares slope over all usable rungs.
    pub slope: f64,
    pub slope_stderr: f64,
    pub d_upper: f64,
    pub d_lower: f64,
    /// Ladder positions `[first, last]` of the usable rungs.
    pub window: (usize, usize),
    pub window_width: usize,
    pub radii: Vec<f64>,
    pub measures: Vec<MeasureEstimate>,
}

impl DimensionEstimate {
    /// `d_lower` and `d_upper` agree within `tol`.
    pub fn agrees(&self, tol: f64) -> bool {
        self.d_upper - self.d_lower <= tol
    }
}

/// Slope fit of `log mu(S_r)` against `log r` over the ladder.
pub fn estimate_dimension(
    f: &Observable,
    ladder: &RadiusLadder,
    system: &SystemSpec,
    seed: u64,
    samples: usize,
    options: &DimensionOptions,
) -> Result<DimensionEstimate> {
    let measures = if options.force_monte_carlo {
        monte_carlo_measures(f, ladder.radii(), system, seed, samples, options.level)?
    } else {
        estimate_measures(f, ladder.radii(), system, seed, samples, options.level)?
    };
    dimension_from_measures(ladder.radii(), measures, options.window)
}

pub(crate) fn dimension_from_measures(
    radii: &[f64],
    measures: Vec<MeasureEstimate>,
    window: usize,
) -> Result<DimensionEstimate> {
    let usable: Vec<usize> = (0..radii.len())
        .filter(|&i| {
            let m = &measures[i];
            m.estimate > 0.0 && (m.exact || m.expected_hits() >= MIN_EXPECTED_HITS)
        })
        .collect();
    if usable.len() < 4 {
        return Err(Error::DegenerateLadder { usable: usable.len(), needed: 4 });
    }
    let xs: Vec<f64> = usable.iter().map(|&i| radii[i].ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|&i| measures[i].estimate.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or(Error::DegenerateLadder { usable: usable.len(), needed: 4 })?;
    let width = window.clamp(2, usable.len());
    let slopes = window_slopes(&xs, &ys, width);
    let d_upper = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d_lower = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DimensionEstimate {
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        d_upper,
        d_lower,
        window: (usable[0], *usable.last().unwrap()),
        window_width: width,
        radii: radii.to_vec(),
        measures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        let f = Observable::parse("dist:0").unwrap();
        assert!((f.eval(&[0.9]) - 0.1).abs() < 1e-15);
        let g = Observable::parse("projdist:1:0.5").unwrap();
        assert_eq!(g.eval(&[0.5, 0.93]), 0.0);
        let h = Observable::pushforward(ObservationMap::Constant(vec![0.3]), &[0.3]).unwrap();
        assert_eq!(h.eval(&[0.1, 0.7]), 0.0);
    }

    #[test]
    fn rule_round_trip() {
        for s in ["dist:0.375", "dist:0.1,0.2", "projdist:1:0.5", "pushdist:proj:1:0.5", "fat:0.05:dist:0.5", "sum:0.5*dist:0.1;2*projdist:2:0.3"] {
            assert_eq!(Observable::parse(s).unwrap().to_string(), s);
        }
        assert!(Observable::parse("dist:1.5").is_err());
        assert!(Observable::parse("sum:-1*dist:0.1").is_err());
        assert!(Observable::parse("ball:0.1").is_err());
    }

    #[test]
    fn mollifier_examples() {
        assert_eq!(mollifier(0.1, 0.2, 0.1), 1.0);
        assert!((mollifier(0.15, 0.2, 0.1) - 0.5).abs() < 1e-12);
        assert_eq!(mollifier(0.25, 0.2, 0.1), 0.0);
    }

    #[test]
    fn closed_forms() {
        let circle = SystemSpec::doubling();
        let f = Observable::parse("dist:0.5").unwrap();
        let m = estimate_measure(&f, 0.1, &circle, 1, 1000).unwrap();
        assert!(m.exact && (m.estimate - 0.2).abs() < 1e-15 && m.half_width == 0.0);
        let cat = SystemSpec::cat();
        let g = Observable::parse("dist:0,0").unwrap();
        let m = estimate_measure(&g, 0.1, &cat, 1, 1000).unwrap();
        assert!((m.estimate - PI * 0.01).abs() < 1e-15);
        let fat = Observable::parse("fat:0.05:dist:0.5").unwrap();
        assert!((fat.exact_measure(&circle, 0.01).unwrap() - 0.12).abs() < 1e-15);
        assert!(ball_measure(2, 0.6).is_none());
        assert_eq!(ball_measure(2, 0.8), Some(1.0));
    }

    #[test]
    fn ladder_validation() {
        assert!(RadiusLadder::new(vec![1.0, 0.5, 0.2], 0.45).is_err());
        assert!(RadiusLadder::new(vec![1.0, 1.0], 0.4).is_err());
        assert!(RadiusLadder::new(vec![1.0, 0.5], 1.0).is_err());
        let l = RadiusLadder::dyadic(3, 14).unwrap();
        assert_eq!(l.len(), 12);
        assert_eq!(l.radius(3), Some(0.125));
        assert_eq!(l.radius(2), None);
        let h = RadiusLadder::half_dyadic(3, 14).unwrap();
        assert_eq!(h.len(), 23);
        assert_eq!(h.radii()[0], 0.125);
        assert_eq!(*h.radii().last().unwrap(), 0.5f64.powi(14));
        let b = l.below(0.5f64.powi(8)).unwrap();
        assert_eq!(b.first_index(), 8);
    }

    #[test]
    fn exact_dimension_slopes() {
        let circle = SystemSpec::doubling();
        let ladder = RadiusLadder::dyadic(3, 12).unwrap();
        let f = Observable::parse("dist:0.5").unwrap();
        let d = estimate_dimension(&f, &ladder, &circle, 0, 1000, &DimensionOptions::default()).unwrap();
        assert!((d.slope - 1.0).abs() < 1e-12);
        let cat = SystemSpec::cat();
        let g = Observable::parse("dist:0.2,0.7").unwrap();
        let d = estimate_dimension(&g, &ladder, &cat, 0, 1000, &DimensionOptions::default()).unwrap();
        assert!((d.slope - 2.0).abs() < 1e-12);
    }
}
