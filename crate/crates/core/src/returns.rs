//! Return-time statistics in a sublevel target: the rescaled survival curve
//! `g(t)`, the mass of very long returns, and Kac's mean-return identity.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hitting::{hitting_time, Tau};
use crate::observables::{estimate_measure, MeasureEstimate, Observable, Rule};
use crate::observed::ObservationMap;
use crate::par;
use crate::point::PhasePoint;
use crate::rng::{derive_seed, purpose, stream_rng};
use crate::stats::normal_quantile;
use crate::system::{mp_map, SystemKind, SystemSpec};

/// Give up when fewer than this fraction of candidates land in `S_r` ...
pub const MIN_ACCEPTANCE: f64 = 1e-6;
/// ... after at least this many attempts.
pub const STALL_ATTEMPTS: u64 = 1 << 20;

/// Axis-aligned box around `S_r` for Lebesgue systems: per coordinate either
/// a centre (interval of half-width `half`) or unconstrained.
fn bounding_box(f: &Observable, system: &SystemSpec, r: f64) -> Option<(Vec<Option<f64>>, f64)> {
    if !system.is_lebesgue() {
        return None;
    }
    let d = system.dimension();
    let centred = |coords: &[usize], target: &[f64]| {
        let mut c = vec![None; d];
        for (&i, &t) in coords.iter().zip(target) {
            c[i] = Some(t);
        }
        c
    };
    let all: Vec<usize> = (0..d).collect();
    match f.rule() {
        Rule::DistToPoint { target } => Some((centred(&all, target), r)),
        Rule::DistToProjectedPoint { coords, target } => Some((centred(coords, target), r)),
        Rule::Pushforward { map: ObservationMap::Identity, target } => Some((centred(&all, target), r)),
        Rule::Pushforward { map: ObservationMap::Projection(c), target } => Some((centred(c, target), r)),
        Rule::Thickened { inner, margin } => bounding_box(inner, system, r + margin),
        _ => None,
    }
}

const TWO_64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedSample {
    pub points: Vec<PhasePoint>,
    pub attempts: u64,
    /// Drawn inside a bounding box of `S_r` rather than from the whole space.
    pub direct: bool,
}

/// `n` points distributed as `mu` restricted to `S_r`.
pub fn sample_conditioned(system: &SystemSpec, f: &Observable, r: f64, seed: u64, n: usize) -> Result<ConditionedSample> {
    f.validate(system.dimension())?;
    match bounding_box(f, system, r) {
        Some((centres, half)) => sample_in_box(system, f, r, seed, n, &centres, half),
        None => sample_by_rejection(system, f, r, seed, n),
    }
}

fn stall(accepted: u64, attempts: u64) -> Option<Error> {
    let rate = accepted as f64 / attempts as f64;
    (attempts >= STALL_ATTEMPTS && rate < MIN_ACCEPTANCE).then_some(Error::RejectionStall { rate, attempts })
}

fn sample_in_box(
    system: &SystemSpec,
    f: &Observable,
    r: f64,
    seed: u64,
    n: usize,
    centres: &[Option<f64>],
    half: f64,
) -> Result<ConditionedSample> {
    let pad = half * (1.0 + 1e-12) + 1e-15;
    let bits_seed = derive_seed(seed, purpose::CONDITIONED_BITS);
    let draws = par::try_map_indexed(n, |i| {
        let mut rng = stream_rng(derive_seed(seed, purpose::CONDITIONED), i as u64);
        let mut words = vec![0u64; centres.len()];
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            for (w, c) in words.iter_mut().zip(centres) {
                let u = rng.next_u64();
                *w = match c {
                    Some(c) if pad < 0.5 => {
                        let lo = ((c - pad).rem_euclid(1.0) * TWO_64) as u64;
                        let span = (2.0 * pad * TWO_64) as u64;
                        lo.wrapping_add(((u as u128 * span as u128) >> 64) as u64)
                    }
                    _ => u,
                };
            }
            let p = system.point_with_leading_words(bits_seed, i as u64, &words)?;
            if f.evaluate(&p) <= r {
                return Ok((p, attempts));
            }
            if let Some(e) = stall(0, attempts) {
                return Err(e);
            }
        }
    })?;
    let attempts = draws.iter().map(|d| d.1).sum();
    Ok(ConditionedSample {
        points: draws.into_iter().map(|d| d.0).collect(),
        attempts,
        direct: true,
    })
}

fn sample_by_rejection(system: &SystemSpec, f: &Observable, r: f64, seed: u64, n: usize) -> Result<ConditionedSample> {
    let mut points = Vec::with_capacity(n);
    let mut attempts = 0u64;
    let batch = 1usize << 16;
    match &system.kind {
        SystemKind::MannevillePomeau { s } => {
            // Continue one long orbit past the burn-in, keeping every stride-th point.
            let mut rng = stream_rng(derive_seed(seed, purpose::CONDITIONED), 0);
            let mut x = 0.25 + 0.5 * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            for _ in 0..system.sampler.burn_in {
                x = mp_map(x, *s);
            }
            while points.len() < n {
                attempts += 1;
                if f.eval(&[x]) <= r {
                    points.push(PhasePoint::Float(vec![x]));
                }
                for _ in 0..system.sampler.stride.max(1) {
                    x = mp_map(x, *s);
                }
                if let Some(e) = stall(points.len() as u64, attempts) {
                    return Err(e);
                }
            }
        }
        _ => {
            let cand_seed = derive_seed(seed, purpose::CONDITIONED);
            let mut next = 0u64;
            while points.len() < n {
                let found = par::try_map_indexed(batch, |i| {
                    let p = system.lebesgue_point(cand_seed, next + i as u64)?;
                    Ok::<_, Error>((f.evaluate(&p) <= r).then_some(p))
                })?;
                for p in found {
                    attempts += 1;
                    if let Some(p) = p {
                        points.push(p);
                        if points.len() == n {
                            break;
                        }
                    }
                }
                next += batch as u64;
                if let Some(e) = stall(points.len() as u64, attempts) {
                    return Err(e);
                }
            }
        }
    }
    Ok(ConditionedSample { points, attempts, direct: false })
}

pub fn default_t_grid() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 10.0).collect()
}

/// Return times of a conditioned sample, shared by the curve and the
/// triviality indicator so both see the same points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnSample {
    pub radius: f64,
    pub measure: MeasureEstimate,
    pub cap: u64,
    pub taus: Vec<Tau>,
    pub direct_sampling: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnOptions {
    /// `None` gives `100 / mu(S_r)`.
    pub cap: Option<u64>,
    /// Samples for `mu(S_r)` when no closed form exists.
    pub measure_samples: usize,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        ReturnOptions {
            cap: None,
            measure_samples: 1_000_000,
        }
    }
}

pub fn return_sample(
    system: &SystemSpec,
    f: &Observable,
    r: f64,
    seed: u64,
    n: usize,
    options: &ReturnOptions,
) -> Result<ReturnSample> {
    let measure = estimate_measure(f, r, system, seed, options.measure_samples)?;
    if !(measure.estimate > 0.0) {
        return Err(Error::InvalidArgument(format!("estimated measure of S_{r} is zero")));
    }
    let cap = options.cap.unwrap_or_else(|| (100.0 / measure.estimate).ceil() as u64);
    let sample = sample_conditioned(system, f, r, seed, n)?;
    let taus = par::try_map_indexed(n, |i| Ok::<_, Error>(hitting_time(system, &sample.points[i], f, r, cap)?.tau))?;
    Ok(ReturnSample {
        radius: r,
        measure,
        cap,
        taus,
        direct_sampling: sample.direct,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnCurve {
    pub radius: f64,
    pub measure: f64,
    pub t_grid: Vec<f64>,
    pub g: Vec<f64>,
    /// Grid points past `cap * mu` where censored returns were counted.
    pub censor_flags: Vec<bool>,
    pub samples: usize,
    pub cap: u64,
    pub censored: usize,
}

/// `g(t) = #{tau >= t / mu(S_r)} / N`; censored returns count as `>= cap`.
pub fn curve_from_sample(sample: &ReturnSample, t_grid: &[f64]) -> Result<ReturnCurve> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] < 0.0 {
        return Err(Error::InvalidArgument("t grid must be non-negative and increasing".into()));
    }
    let mu = sample.measure.estimate;
    let n = sample.taus.len();
    let censored = sample.taus.iter().filter(|t| t.is_censored()).count();
    let mut g = Vec::with_capacity(t_grid.len());
    let mut censor_flags = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let threshold = t / mu;
        let count = sample.taus.iter().filter(|tau| tau.value() as f64 >= threshold || tau.is_censored()).count();
        g.push(count as f64 / n as f64);
        censor_flags.push(censored > 0 && threshold > sample.cap as f64);
    }
    Ok(ReturnCurve {
        radius: sample.radius,
        measure: mu,
        t_grid: t_grid.to_vec(),
        g,
        censor_flags,
        samples: n,
        cap: sample.cap,
        censored,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn return_curve(
    system: &SystemSpec,
    f: &Observable,
    r: f64,
    t_grid: &[f64],
    seed: u64,
    n: usize,
    options: &ReturnOptions,
) -> Result<ReturnCurve> {
    curve_from_sample(&return_sample(system, f, r, seed, n, options)?, t_grid)
}

/// `sup_t |g(t) - e^-t|` over the grid.
pub fn exp_law_distance(curve: &ReturnCurve) -> f64 {
    curve
        .t_grid
        .iter()
        .zip(&curve.g)
        .map(|(t, g)| (g - (-t).exp()).abs())
        .fold(0.0, f64::max)
}

/// Number of maximal runs of consecutive grid steps over which `g` drops.
pub fn jump_clusters(curve: &ReturnCurve) -> usize {
    let mut clusters = 0;
    let mut in_run = false;
    for w in curve.g.windows(2) {
        let drop = w[1] < w[0];
        if drop && !in_run {
            clusters += 1;
        }
        in_run = drop;
    }
    clusters
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrivialityIndicator {
    pub l: f64,
    pub radius: f64,
    pub value: f64,
    pub half_width: f64,
    pub samples: usize,
    /// `l / mu` lies beyond the cap, so censored points were counted.
    pub censor_affected: bool,
}

/// Fraction of conditioned points with `tau > l / mu(S_r)`.
pub fn indicator_from_sample(sample: &ReturnSample, l: f64, level: f64) -> Result<TrivialityIndicator> {
    if !(l > 0.0) {
        return Err(Error::InvalidArgument("l must be positive".into()));
    }
    let threshold = l / sample.measure.estimate;
    let n = sample.taus.len();
    let count = sample.taus.iter().filter(|tau| tau.is_censored() || tau.value() as f64 > threshold).count();
    let m = MeasureEstimate::from_count(count, n, normal_quantile(level));
    Ok(TrivialityIndicator {
        l,
        radius: sample.radius,
        value: m.estimate,
        half_width: m.half_width,
        samples: n,
        censor_affected: threshold >= sample.cap as f64 && sample.taus.iter().any(Tau::is_censored),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn triviality_indicator(
    system: &SystemSpec,
    f: &Observable,
    r: f64,
    l: f64,
    seed: u64,
    n: usize,
    options: &ReturnOptions,
) -> Result<TrivialityIndicator> {
    indicator_from_sample(&return_sample(system, f, r, seed, n, options)?, l, 0.95)
}

/// Kac's identity `E[tau | S_r] mu(S_r) = 1` as seen in a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KacCheck {
    pub product: f64,
    pub stderr: f64,
    /// `|product - 1| <= 4 stderr`.
    pub consistent: bool,
    /// Censored returns make `product` a lower bound.
    pub censored: usize,
}

pub fn kac_check(sample: &ReturnSample) -> KacCheck {
    let n = sample.taus.len() as f64;
    let mu = sample.measure.estimate;
    let vals: Vec<f64> = sample.taus.iter().map(|t| t.value() as f64).collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let product = mean * mu;
    let stderr = (var / n).sqrt() * mu;
    KacCheck {
        product,
        stderr,
        consistent: (product - 1.0).abs() <= 4.0 * stderr,
        censored: sample.taus.iter().filter(|t| t.is_censored()).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_sampling_is_uniform() {
        let sys = SystemSpec::doubling();
        let f = Observable::dist_to_point(&[0.5]).unwrap();
        let s = sample_conditioned(&sys, &f, 0.1, 3, 10_000).unwrap();
        let xs: Vec<f64> = s.points.iter().map(|p| p.to_f64s()[0]).collect();
        assert!(xs.iter().all(|&x| (0.4..=0.6).contains(&x)));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "{mean}");
        assert!(s.direct);
    }

    #[test]
    fn wrapping_disc() {
        let sys = SystemSpec::cat();
        let f = Observable::dist_to_point(&[0.02, 0.99]).unwrap();
        let s = sample_conditioned(&sys, &f, 0.05, 1, 500).unwrap();
        assert!(s.points.iter().all(|p| f.evaluate(p) <= 0.05));
    }

    #[test]
    fn curve_basics() {
        let sample = ReturnSample {
            radius: 0.1,
            measure: MeasureEstimate::exact(0.5),
            cap: 10,
            taus: vec![Tau::Hit(1), Tau::Hit(2), Tau::Hit(4), Tau::Censored(10)],
            direct_sampling: true,
        };
        let c = curve_from_sample(&sample, &[0.0, 0.5, 1.0, 2.0, 6.0]).unwrap();
        assert_eq!(c.g, vec![1.0, 1.0, 0.75, 0.5, 0.25]);
        assert_eq!(c.censor_flags, vec![false, false, false, false, true]);
        let ind = indicator_from_sample(&sample, 1.0, 0.95).unwrap();
        assert_eq!(ind.value, 0.5);
        assert_eq!(jump_clusters(&c), 1);
    }

    #[test]
    fn exp_distance_examples() {
        let grid = default_t_grid();
        let mk = |g: Vec<f64>| ReturnCurve {
            radius: 0.1,
            measure: 0.2,
            t_grid: grid.clone(),
            g,
            censor_flags: vec![false; 51],
            samples: 1,
            cap: 1,
            censored: 0,
        };
        assert_eq!(exp_law_distance(&mk(grid.iter().map(|t| (-t).exp()).collect())), 0.0);
        let d = exp_law_distance(&mk(vec![1.0; 51]));
        assert!((d - (1.0 - (-5f64).exp())).abs() < 1e-15);
    }
}
