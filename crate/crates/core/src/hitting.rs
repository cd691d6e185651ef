//! Hitting times `tau(x, S_r)`, log-log exponent estimates, and the
//! dynamical Borel-Cantelli counter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::{count_le, sample_values, Observable, RadiusLadder};
use crate::par;
use crate::point::{PhasePoint, MAX_DIM};
use crate::stats::{fit_line, median, quantile, window_slopes};
use crate::system::{Orbit, PointSource, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Tau {
    Hit(u64),
    /// No hit in `1..=cap`; carries the cap.
    Censored(u64),
}

impl Tau {
    pub fn value(&self) -> u64 {
        match *self {
            Tau::Hit(n) | Tau::Censored(n) => n,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, Tau::Censored(_))
    }

    pub fn hit(&self) -> Option<u64> {
        match *self {
            Tau::Hit(n) => Some(n),
            Tau::Censored(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HittingRecord {
    pub point_id: u64,
    pub radius: f64,
    pub tau: Tau,
    pub steps_used: u64,
}

/// First `n` in `1..=cap` with `f(T^n x) <= r`.
pub fn hitting_time(system: &SystemSpec, x: &PhasePoint, f: &Observable, r: f64, cap: u64) -> Result<HittingRecord> {
    Ok(hitting_times(system, x, f, &[r], cap)?[0])
}

/// Hitting times for every radius of a decreasing list from one orbit pass.
/// Rung `k` resolves no earlier than rung `k-1`, so the records nest exactly.
pub fn hitting_times(
    system: &SystemSpec,
    x: &PhasePoint,
    f: &Observable,
    radii: &[f64],
    cap: u64,
) -> Result<Vec<HittingRecord>> {
    if cap == 0 {
        return Err(Error::InvalidArgument("cap must be at least 1".into()));
    }
    if radii.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidLadder("radii must be non-increasing".into()));
    }
    let d = system.dimension();
    f.validate(d)?;
    let mut orbit = Orbit::new(system, x)?;
    let mut buf = [0.0; MAX_DIM];
    let mut taus = vec![Tau::Censored(cap); radii.len()];
    let mut next = 0;
    let mut n = 0;
    while next < radii.len() && n < cap {
        orbit.advance()?;
        n += 1;
        orbit.write_f64(&mut buf);
        let v = f.eval(&buf[..d]);
        while next < radii.len() && v <= radii[next] {
            taus[next] = Tau::Hit(n);
            next += 1;
        }
    }
    Ok(radii
        .iter()
        .zip(taus)
        .map(|(&radius, tau)| HittingRecord {
            point_id: 0,
            radius,
            tau,
            steps_used: orbit.steps(),
        })
        .collect())
}

/// Cap from the heuristic `tau ~ 1/mu(S_r)` at the smallest rung.
pub fn default_cap(smallest_measure: f64) -> u64 {
    if smallest_measure > 0.0 {
        (50.0 / smallest_measure).ceil().min(u64::MAX as f64) as u64
    } else {
        u64::MAX
    }
}

/// Default sliding window: this fraction of the ladder, rounded up.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.8;

pub fn default_window(rungs: usize) -> usize {
    ((rungs as f64 * DEFAULT_WINDOW_FRACTION).ceil() as usize).max(2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    /// Least-squares slope over every uncensored rung.
    pub exponent: f64,
    pub r_upper: f64,
    pub r_lower: f64,
    pub window_width: usize,
    /// `(-log r, log tau)` for uncensored rungs.
    pub pairs: Vec<(f64, f64)>,
    pub censor_fraction: f64,
}

/// Fits `log tau` against `-log r`. Censored rungs are left out and counted.
/// `window = None` picks [`default_window`] of the ladder length.
pub fn exponent_from_records(records: &[HittingRecord], window: Option<usize>) -> Result<ExponentEstimate> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.tau.hit().map(|t| (-r.radius.ln(), (t as f64).ln())))
        .collect();
    if pairs.is_empty() {
        return Err(Error::AllCensored);
    }
    if pairs.len() < 2 {
        return Err(Error::DegenerateLadder { usable: pairs.len(), needed: 2 });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys).ok_or(Error::DegenerateLadder { usable: pairs.len(), needed: 2 })?;
    let width = window.unwrap_or_else(|| default_window(records.len())).clamp(2, pairs.len());
    let slopes = window_slopes(&xs, &ys, width);
    let censored = records.len() - pairs.len();
    Ok(ExponentEstimate {
        exponent: fit.slope,
        r_upper: slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        r_lower: slopes.iter().copied().fold(f64::INFINITY, f64::min),
        window_width: width,
        pairs,
        censor_fraction: censored as f64 / records.len() as f64,
    })
}

pub fn estimate_r(
    system: &SystemSpec,
    x: &PhasePoint,
    f: &Observable,
    ladder: &RadiusLadder,
    cap: u64,
    window: Option<usize>,
) -> Result<ExponentEstimate> {
    let records = hitting_times(system, x, f, ladder.radii(), cap)?;
    exponent_from_records(&records, window)
}

/// Hitting records and exponent estimates for many invariant sample points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingRun {
    pub records: Vec<HittingRecord>,
    /// One entry per point; `None` when every rung was censored.
    pub estimates: Vec<Option<ExponentEstimate>>,
}

pub fn hitting_run(
    system: &SystemSpec,
    f: &Observable,
    ladder: &RadiusLadder,
    cap: u64,
    seed: u64,
    points: usize,
    window: Option<usize>,
) -> Result<HittingRun> {
    let starts = PointSource::separate(system, seed);
    let per_point = par::try_map_indexed(points, |i| {
        let mut recs = hitting_times(system, &starts.point(i)?, f, ladder.radii(), cap)?;
        for r in &mut recs {
            r.point_id = i as u64;
        }
        let est = match exponent_from_records(&recs, window) {
            Ok(e) => Some(e),
            Err(Error::AllCensored) | Err(Error::DegenerateLadder { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok((recs, est))
    })?;
    let mut records = Vec::with_capacity(points * ladder.len());
    let mut estimates = Vec::with_capacity(points);
    for (recs, est) in per_point {
        records.extend(recs);
        estimates.push(est);
    }
    Ok(HittingRun { records, estimates })
}

/// Medians across points, the form in which almost-everywhere statements are
/// compared with data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentSummary {
    pub points: usize,
    pub fitted_points: usize,
    pub median_exponent: f64,
    pub q1_exponent: f64,
    pub q3_exponent: f64,
    pub median_upper: f64,
    pub median_lower: f64,
    pub mean_censor_fraction: f64,
}

pub fn summarize(estimates: &[Option<ExponentEstimate>]) -> ExponentSummary {
    let fitted: Vec<&ExponentEstimate> = estimates.iter().flatten().collect();
    let ex: Vec<f64> = fitted.iter().map(|e| e.exponent).collect();
    let up: Vec<f64> = fitted.iter().map(|e| e.r_upper).collect();
    let lo: Vec<f64> = fitted.iter().map(|e| e.r_lower).collect();
    let cf = fitted.iter().map(|e| e.censor_fraction).sum::<f64>() + (estimates.len() - fitted.len()) as f64;
    ExponentSummary {
        points: estimates.len(),
        fitted_points: fitted.len(),
        median_exponent: median(&ex),
        q1_exponent: quantile(&ex, 0.25),
        q3_exponent: quantile(&ex, 0.75),
        median_upper: median(&up),
        median_lower: median(&lo),
        mean_censor_fraction: if estimates.is_empty() { 0.0 } else { cf / estimates.len() as f64 },
    }
}

/// Where `mu(S_{r_i})` comes from in `E(Z_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MeasureSource {
    Exact,
    MonteCarlo { seed: u64, samples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BcCounter {
    pub k: u64,
    pub z: u64,
    pub expected: f64,
    pub ratio: f64,
}

/// Shrinking-target ladder `r_0 = 1`, `r_i = i^-beta`, with the cumulative
/// expectations `E(Z_k)` precomputed once for all points.
#[derive(Clone, Debug, PartialEq)]
pub struct BcPlan {
    pub beta: f64,
    pub k_max: u64,
    radii: Vec<f64>,
    cumulative: Vec<f64>,
    checkpoints: Vec<u64>,
}

impl BcPlan {
    pub fn new(
        system: &SystemSpec,
        f: &Observable,
        beta: f64,
        k_max: u64,
        d_upper: f64,
        source: MeasureSource,
    ) -> Result<Self> {
        let limit = 1.0 / d_upper;
        if !(beta > 0.0 && beta < limit) {
            return Err(Error::InvalidBeta { beta, limit });
        }
        if k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be positive".into()));
        }
        f.validate(system.dimension())?;
        let radii: Vec<f64> = (0..=k_max).map(|i| bc_radius(i, beta)).collect();
        let measures: Vec<f64> = match source {
            MeasureSource::Exact => radii
                .iter()
                .map(|&r| {
                    f.exact_measure(system, r)
                        .ok_or_else(|| Error::InvalidArgument(format!("no closed-form measure for {f} on {}", system.id())))
                })
                .collect::<Result<_>>()?,
            MeasureSource::MonteCarlo { seed, samples } => {
                let values = sample_values(f, system, seed, samples)?;
                radii
                    .iter()
                    .map(|&r| count_le(&values, r) as f64 / samples as f64)
                    .collect()
            }
        };
        let mut acc = 0.0;
        let cumulative = measures
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(BcPlan {
            beta,
            k_max,
            radii,
            cumulative,
            checkpoints: log_checkpoints(k_max),
        })
    }

    pub fn with_checkpoints(mut self, mut checkpoints: Vec<u64>) -> Self {
        checkpoints.retain(|&k| k <= self.k_max);
        checkpoints.sort_unstable();
        checkpoints.dedup();
        self.checkpoints = checkpoints;
        self
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    /// `E(Z_k)`.
    pub fn expected(&self, k: u64) -> f64 {
        self.cumulative[k as usize]
    }

    pub fn radius(&self, i: u64) -> f64 {
        self.radii[i as usize]
    }
}

/// `r_0 = 1` (the `0^-beta` rung is undefined), `r_i = i^-beta` otherwise.
pub fn bc_radius(i: u64, beta: f64) -> f64 {
    if i == 0 {
        1.0
    } else {
        (i as f64).powf(-beta)
    }
}

/// `1, 2, 5, 10, 20, 50, ...` up to and including `k_max`.
pub fn log_checkpoints(k_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let k = decade.saturating_mul(m);
            if k >= k_max {
                break 'outer;
            }
            out.push(k);
        }
        decade = decade.saturating_mul(10);
    }
    out.push(k_max);
    out
}

/// `Z_k(x) = #{0 <= i <= k : f(T^i x) <= r_i}` at the plan's checkpoints.
pub fn bc_counter_series(system: &SystemSpec, x: &PhasePoint, f: &Observable, plan: &BcPlan) -> Result<Vec<BcCounter>> {
    let d = system.dimension();
    f.validate(d)?;
    let mut orbit = Orbit::new(system, x)?;
    let mut buf = [0.0; MAX_DIM];
    let mut z = 0u64;
    let mut out = Vec::with_capacity(plan.checkpoints.len());
    let mut cp = plan.checkpoints.iter().peekable();
    for i in 0..=plan.k_max {
        if i > 0 {
            orbit.advance()?;
        }
        orbit.write_f64(&mut buf);
        if f.eval(&buf[..d]) <= plan.radii[i as usize] {
            z += 1;
        }
        while cp.peek() == Some(&&i) {
            cp.next();
            let expected = plan.expected(i);
            out.push(BcCounter {
                k: i,
                z,
                expected,
                ratio: z as f64 / expected,
            });
        }
        if cp.peek().is_none() {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_rational_orbit() {
        let sys = SystemSpec::doubling();
        let f = Observable::dist_to_point(&[0.0]).unwrap();
        let x = PhasePoint::rational(vec![1], 5).unwrap();
        let rec = hitting_time(&sys, &x, &f, 0.25, 100).unwrap();
        assert_eq!(rec.tau, Tau::Hit(2));
        let third = PhasePoint::rational(vec![1], 3).unwrap();
        let rec = hitting_time(&sys, &third, &f, 0.05, 100).unwrap();
        assert_eq!(rec.tau, Tau::Censored(100));
        assert_eq!(rec.steps_used, 100);
    }

    #[test]
    fn rotation_quarter() {
        let sys = SystemSpec::rotation_dyadic(1, 2).unwrap();
        let f = Observable::dist_to_point(&[0.5]).unwrap();
        let x = PhasePoint::dyadic(&[0], 1, 512).unwrap();
        assert_eq!(hitting_time(&sys, &x, &f, 0.1, 10).unwrap().tau, Tau::Hit(2));
    }

    #[test]
    fn time_zero_never_counts() {
        let sys = SystemSpec::identity(1).unwrap();
        let x = PhasePoint::float(vec![0.3]).unwrap();
        let f = Observable::dist_to(&x);
        let ladder = RadiusLadder::dyadic(1, 6).unwrap();
        let recs = hitting_times(&sys, &x, &f, ladder.radii(), 10).unwrap();
        assert!(recs.iter().all(|r| r.tau == Tau::Hit(1)));
        let est = exponent_from_records(&recs, Some(3)).unwrap();
        assert_eq!((est.r_upper, est.r_lower, est.exponent), (0.0, 0.0, 0.0));
    }

    #[test]
    fn censoring_is_reported() {
        let recs = vec![
            HittingRecord { point_id: 0, radius: 0.5, tau: Tau::Hit(2), steps_used: 9 },
            HittingRecord { point_id: 0, radius: 0.25, tau: Tau::Hit(4), steps_used: 9 },
            HittingRecord { point_id: 0, radius: 0.125, tau: Tau::Censored(9), steps_used: 9 },
        ];
        let e = exponent_from_records(&recs, None).unwrap();
        assert!((e.exponent - 1.0).abs() < 1e-12);
        assert!((e.censor_fraction - 1.0 / 3.0).abs() < 1e-12);
        let all: Vec<_> = recs.iter().map(|r| HittingRecord { tau: Tau::Censored(9), ..*r }).collect();
        assert_eq!(exponent_from_records(&all, None), Err(Error::AllCensored));
    }

    #[test]
    fn identity_counter_counts_everything() {
        let sys = SystemSpec::identity(1).unwrap();
        let x = PhasePoint::float(vec![0.3]).unwrap();
        let f = Observable::dist_to(&x);
        let plan = BcPlan::new(&SystemSpec::doubling(), &f, 0.5, 1000, 1.0, MeasureSource::Exact).unwrap();
        let series = bc_counter_series(&sys, &x, &f, &plan).unwrap();
        for c in &series {
            assert_eq!(c.z, c.k + 1);
        }
        assert_eq!(series.last().unwrap().k, 1000);
    }

    #[test]
    fn beta_range() {
        let f = Observable::dist_to_point(&[0.375]).unwrap();
        let sys = SystemSpec::doubling();
        assert!(matches!(
            BcPlan::new(&sys, &f, 1.0, 10, 1.0, MeasureSource::Exact),
            Err(Error::InvalidBeta { .. })
        ));
        let plan = BcPlan::new(&sys, &f, 0.5, 4, 1.0, MeasureSource::Exact).unwrap();
        // min(2 r_i, 1) = 1 for r_i = i^-1/2 and i <= 4.
        assert_eq!(plan.expected(4), 5.0);
        let e5 = 5.0 + 2.0 / 5f64.sqrt();
        let plan = BcPlan::new(&sys, &f, 0.5, 5, 1.0, MeasureSource::Exact).unwrap();
        assert!((plan.expected(5) - e5).abs() < 1e-12);
    }

    #[test]
    fn checkpoints() {
        assert_eq!(log_checkpoints(100), vec![1, 2, 5, 10, 20, 50, 100]);
        assert_eq!(log_checkpoints(30), vec![1, 2, 5, 10, 20, 30]);
    }
}
