//! Closed-form sanity cases, runnable from the command line.

use serde::Serialize;

use crate::error::Result;
use crate::fixed::Fraction;
use crate::hitting::{bc_counter_series, hitting_time, hitting_times, BcPlan, MeasureSource, Tau};
use crate::mixing::{estimate_correlation, fit_decay, intersection_bound_check, CorrelationSeries, DecayClass, Sampling, TestFunction};
use crate::observables::{estimate_dimension, estimate_measure, mollifier, DimensionOptions, Observable, RadiusLadder};
use crate::observed::{jacobian_rank, observed_hitting_time, pushforward_dimension, ObservationMap, DEFAULT_FD_STEP};
use crate::point::PhasePoint;
use crate::reservoir::{BitStream, ReservoirPoint};
use crate::returns::{curve_from_sample, default_t_grid, exp_law_distance, indicator_from_sample, return_sample, sample_conditioned, ReturnCurve, ReturnOptions};
use crate::system::{sample_invariant, SystemSpec};
use crate::flow::approach_series;
use crate::point::torus_dist;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String)>;

const SEED: u64 = 20;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn verdict(ok: bool, detail: impl Into<String>) -> Result<(bool, String)> {
    Ok((ok, detail.into()))
}

fn step_doubling() -> Result<(bool, String)> {
    let p = PhasePoint::dyadic(&[3], 3, 512)?;
    let q = SystemSpec::doubling().step(&p)?.to_f64s();
    verdict(q == [0.75], format!("T(3/8) = {q:?}"))
}

fn step_cat() -> Result<(bool, String)> {
    let p = PhasePoint::dyadic(&[1, 1], 1, 512)?;
    let q = SystemSpec::cat().step(&p)?.to_f64s();
    verdict(q == [0.5, 0.0], format!("T(1/2, 1/2) = {q:?}"))
}

fn step_rotation() -> Result<(bool, String)> {
    let sys = SystemSpec::rotation_dyadic(1, 2)?;
    let q = sys.step(&PhasePoint::dyadic(&[7], 3, 512)?)?.to_f64s();
    verdict(q == [0.125], format!("R(7/8) = {q:?}"))
}

fn reservoir_shift() -> Result<(bool, String)> {
    let stream = BitStream::from_bits(&[true, false, true, true, false], SEED, 0);
    let p = PhasePoint::Reservoir(ReservoirPoint::new(stream));
    let q = match SystemSpec::doubling().orbit_window(&p, 1)? {
        PhasePoint::Reservoir(r) => r,
        _ => return verdict(false, "engine changed"),
    };
    let lead: Vec<bool> = (0..4).map(|i| q.bit(i)).collect();
    verdict(lead == [false, true, true, false], format!("leading bits {lead:?}"))
}

fn window_zero() -> Result<(bool, String)> {
    let cat = SystemSpec::cat();
    let p = cat.lebesgue_point(SEED, 0)?;
    verdict(cat.orbit_window(&p, 0)? == p, "T^0 p = p")
}

fn uniform_mean() -> Result<(bool, String)> {
    let pts = sample_invariant(&SystemSpec::doubling(), SEED, 1000)?;
    let m = pts.iter().map(|p| p.to_f64s()[0]).sum::<f64>() / 1000.0;
    verdict((0.47..=0.53).contains(&m), format!("mean {m:.4}"))
}

fn cat_half() -> Result<(bool, String)> {
    let pts = sample_invariant(&SystemSpec::cat(), SEED, 1000)?;
    let frac = pts.iter().filter(|p| p.to_f64s()[0] < 0.5).count() as f64 / 1000.0;
    verdict((0.45..=0.55).contains(&frac), format!("fraction {frac:.3}"))
}

fn quotient_metric() -> Result<(bool, String)> {
    let v = Observable::dist_to_point(&[0.0])?.eval(&[0.9]);
    verdict(close(v, 0.1, 1e-12), format!("f(0.9) = {v}"))
}

fn projected_zero() -> Result<(bool, String)> {
    let v = Observable::dist_to_projected(vec![0], &[0.5])?.eval(&[0.5, 0.93]);
    verdict(v == 0.0, format!("f = {v}"))
}

fn constant_pushforward() -> Result<(bool, String)> {
    let f = Observable::pushforward(ObservationMap::Constant(vec![0.2]), &[0.2])?;
    let ok = [[0.1, 0.7], [0.9, 0.3], [0.0, 0.0]].iter().all(|x| f.eval(x) == 0.0);
    verdict(ok, "f = 0 at three points")
}

fn mollifier_values() -> Result<(bool, String)> {
    let v = [mollifier(0.1, 0.2, 0.1), mollifier(0.15, 0.2, 0.1), mollifier(0.25, 0.2, 0.1)];
    let ok = v[0] == 1.0 && close(v[1], 0.5, 1e-12) && v[2] == 0.0;
    verdict(ok, format!("{v:?}"))
}

fn interval_measure() -> Result<(bool, String)> {
    let m = Observable::dist_to_point(&[0.5])?.exact_measure(&SystemSpec::doubling(), 0.1);
    verdict(m.is_some_and(|m| close(m, 0.2, 1e-12)), format!("{m:?}"))
}

fn disc_measure() -> Result<(bool, String)> {
    let m = Observable::dist_to_point(&[0.0, 0.0])?.exact_measure(&SystemSpec::cat(), 0.1);
    verdict(m.is_some_and(|m| close(m, std::f64::consts::PI * 0.01, 1e-12)), format!("{m:?}"))
}

fn dimension_circle() -> Result<(bool, String)> {
    let f = Observable::dist_to_point(&[0.5])?;
    let d = estimate_dimension(&f, &RadiusLadder::dyadic(3, 12)?, &SystemSpec::doubling(), SEED, 1000, &DimensionOptions::default())?;
    verdict(close(d.slope, 1.0, 0.02), format!("slope {:.4}", d.slope))
}

fn dimension_torus() -> Result<(bool, String)> {
    let f = Observable::dist_to_point(&[0.3, 0.6])?;
    let d = estimate_dimension(&f, &RadiusLadder::dyadic(3, 12)?, &SystemSpec::cat(), SEED, 1000, &DimensionOptions::default())?;
    verdict(close(d.slope, 2.0, 0.05), format!("slope {:.4}", d.slope))
}

fn periodic_censored() -> Result<(bool, String)> {
    let x = PhasePoint::rational(vec![1], 3)?;
    let rec = hitting_time(&SystemSpec::doubling(), &x, &Observable::dist_to_point(&[0.0])?, 0.05, 100)?;
    verdict(rec.tau == Tau::Censored(100), format!("{:?}", rec.tau))
}

fn constant_hitting_time() -> Result<(bool, String)> {
    let sys = SystemSpec::identity(1)?;
    let x = PhasePoint::dyadic(&[1], 2, 512)?;
    let ladder = RadiusLadder::dyadic(1, 10)?;
    let recs = hitting_times(&sys, &x, &Observable::dist_to_point(&[0.25])?, ladder.radii(), 100)?;
    let ok = recs.iter().all(|r| r.tau == Tau::Hit(1));
    verdict(ok, "tau = 1 at every rung")
}

fn identity_counter() -> Result<(bool, String)> {
    let sys = SystemSpec::identity(1)?;
    let x = PhasePoint::dyadic(&[1], 2, 512)?;
    let f = Observable::dist_to_point(&[0.25])?;
    let plan = BcPlan::new(&sys, &f, 0.5, 1000, 1.0, MeasureSource::Exact)?;
    let series = bc_counter_series(&sys, &x, &f, &plan)?;
    let ok = series.iter().all(|c| c.z == c.k + 1 && c.ratio == (c.k + 1) as f64 / plan.expected(c.k));
    verdict(ok, format!("{} checkpoints", series.len()))
}

fn expected_count() -> Result<(bool, String)> {
    let plan = BcPlan::new(&SystemSpec::doubling(), &Observable::dist_to_point(&[0.375])?, 0.5, 4, 1.0, MeasureSource::Exact)?;
    let e = plan.expected(4);
    // Every term clamps to 1 since 2 i^-1/2 >= 1 for i <= 4.
    verdict(close(e, 5.0, 1e-12), format!("E(Z_4) = {e}"))
}

fn cosine_orthogonality() -> Result<(bool, String)> {
    let c = TestFunction::Cosine { coord: 0, freq: 1 };
    let s = estimate_correlation(&SystemSpec::doubling(), &c, &c, &[1], SEED, 100_000, Sampling::Iid, 0.95)?;
    verdict(s.values[0] <= s.half_widths[0], format!("{:.2e} ± {:.2e}", s.values[0], s.half_widths[0]))
}

fn constant_correlation() -> Result<(bool, String)> {
    let phi = TestFunction::Hat { center: vec![0.3], width: 0.2 };
    let s = estimate_correlation(&SystemSpec::doubling(), &phi, &TestFunction::Constant(2.0), &[0, 1, 5], SEED, 10_000, Sampling::Iid, 0.95)?;
    verdict(s.values.iter().all(|&v| v == 0.0), format!("{:?}", s.values))
}

fn synthetic_exponential() -> Result<(bool, String)> {
    let lags: Vec<u64> = (1..=20).collect();
    let vals = lags.iter().map(|&n| 2f64.powi(-(n as i32))).collect();
    let fit = fit_decay(&CorrelationSeries::synthetic(lags, vals))?;
    let ok = matches!(fit.class, DecayClass::Exponential { rate } if close(rate, 2f64.ln(), 0.05 * 2f64.ln()));
    verdict(ok, format!("{:?}", fit.class))
}

fn synthetic_polynomial() -> Result<(bool, String)> {
    let lags: Vec<u64> = (1..=20).collect();
    let vals = lags.iter().map(|&n| (n as f64).powi(-2)).collect();
    let fit = fit_decay(&CorrelationSeries::synthetic(lags, vals))?;
    let ok = matches!(fit.class, DecayClass::Polynomial { exponent } if close(exponent, 2.0, 0.1));
    verdict(ok, format!("{:?}", fit.class))
}

fn noise_inconclusive() -> Result<(bool, String)> {
    let mut s = CorrelationSeries::synthetic((1..=10).collect(), vec![1e-3; 10]);
    s.half_widths = vec![1.0; 10];
    let fit = fit_decay(&s)?;
    verdict(fit.class == DecayClass::Inconclusive, format!("{:?}", fit.class))
}

fn containment() -> Result<(bool, String)> {
    let sys = SystemSpec::doubling();
    let f = Observable::dist_to_point(&[0.375])?;
    let ladder = RadiusLadder::geometric(0.5, 0.5, 8)?;
    let lags: Vec<u64> = (1..=20).collect();
    let vals = lags.iter().map(|&n| 2f64.powi(-(n as i32))).collect();
    let fit = fit_decay(&CorrelationSeries::synthetic(lags, vals))?;
    let c = intersection_bound_check(&sys, &f, &ladder, 6, 1, &fit, SEED, 100_000, 0.95)?;
    let ok = c.lhs.estimate <= c.measure_k_prev.estimate;
    verdict(ok, format!("lhs {:.3e}, mu(S_(k-1)) {:.3e}", c.lhs.estimate, c.measure_k_prev.estimate))
}

fn conditioned_uniform() -> Result<(bool, String)> {
    let f = Observable::dist_to_point(&[0.5])?;
    let s = sample_conditioned(&SystemSpec::doubling(), &f, 0.1, SEED, 10_000)?;
    let xs: Vec<f64> = s.points.iter().map(|p| p.to_f64s()[0]).collect();
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let inside = xs.iter().all(|x| (0.4..=0.6).contains(x));
    verdict(inside && (0.49..=0.51).contains(&m), format!("mean {m:.4}"))
}

fn conditioned_postcondition() -> Result<(bool, String)> {
    let mut ok = true;
    for (id, rule) in [("cat", "dist:0.3,0.6"), ("mp:0.5", "dist:0.5")] {
        let sys = SystemSpec::from_id(id, 512)?;
        let f = Observable::parse(rule)?;
        let s = sample_conditioned(&sys, &f, 0.05, SEED, 500)?;
        ok &= s.points.iter().all(|p| f.evaluate(p) <= 0.05);
    }
    verdict(ok, "all samples satisfy f <= r")
}

fn small_return_curve() -> Result<ReturnCurve> {
    let f = Observable::dist_to_point(&[0.375])?;
    let s = return_sample(&SystemSpec::doubling(), &f, 2f64.powi(-6), SEED, 2000, &ReturnOptions::default())?;
    curve_from_sample(&s, &default_t_grid())
}

fn curve_at_zero() -> Result<(bool, String)> {
    let c = small_return_curve()?;
    verdict(c.g[0] == 1.0, format!("g(0) = {}", c.g[0]))
}

fn distance_identity() -> Result<(bool, String)> {
    let mut c = small_return_curve()?;
    c.g = c.t_grid.iter().map(|t| (-t).exp()).collect();
    let zero = exp_law_distance(&c);
    c.g = vec![1.0; c.t_grid.len()];
    let one = exp_law_distance(&c);
    verdict(zero == 0.0 && close(one, 1.0 - (-5f64).exp(), 1e-12), format!("{zero}, {one:.4}"))
}

fn markov_bound() -> Result<(bool, String)> {
    let f = Observable::dist_to_point(&[0.375])?;
    let s = return_sample(&SystemSpec::doubling(), &f, 2f64.powi(-8), SEED, 2000, &ReturnOptions::default())?;
    let ti = indicator_from_sample(&s, 20.0, 0.95)?;
    let small = indicator_from_sample(&s, 1e-9, 0.95)?;
    let ok = ti.value <= 0.05 + 3.0 * ti.half_width && small.value == 1.0;
    verdict(ok, format!("l=20: {:.4}, l->0: {}", ti.value, small.value))
}

fn observed_constant() -> Result<(bool, String)> {
    let cat = SystemSpec::cat();
    let x = cat.lebesgue_point(SEED, 0)?;
    let x0 = cat.lebesgue_point(SEED, 1)?;
    let map = ObservationMap::Constant(vec![0.4]);
    let ok = [0.1, 1e-3, 1e-9]
        .iter()
        .map(|&r| observed_hitting_time(&cat, &x, &x0, &map, r, 100))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .all(|rec| rec.tau == Tau::Hit(1));
    verdict(ok, "tau = 1 for three radii")
}

fn observed_identity() -> Result<(bool, String)> {
    let cat = SystemSpec::cat();
    let f_cap = 10_000;
    let mut ok = true;
    for i in 0..20 {
        let x = cat.lebesgue_point(SEED, 2 * i)?;
        let x0 = cat.lebesgue_point(SEED, 2 * i + 1)?;
        let a = observed_hitting_time(&cat, &x, &x0, &ObservationMap::Identity, 0.05, f_cap)?;
        let b = hitting_time(&cat, &x, &Observable::dist_to(&x0), 0.05, f_cap)?;
        ok &= a.tau == b.tau;
    }
    verdict(ok, "20 pairs agree")
}

fn pushforward_slopes() -> Result<(bool, String)> {
    let cat = SystemSpec::cat();
    let x0 = PhasePoint::dyadic(&[3, 5], 4, 512)?;
    let ladder = RadiusLadder::dyadic(3, 10)?;
    let opts = DimensionOptions::default();
    let mut slopes = vec![];
    for map in [ObservationMap::Identity, ObservationMap::Projection(vec![0]), ObservationMap::Constant(vec![0.5])] {
        slopes.push(pushforward_dimension(&cat, &map, &x0, &ladder, SEED, 1000, &opts)?.slope);
    }
    let ok = close(slopes[0], 2.0, 0.05) && close(slopes[1], 1.0, 0.02) && close(slopes[2], 0.0, 1e-12);
    verdict(ok, format!("{slopes:?}"))
}

fn rank_cases() -> Result<(bool, String)> {
    let x = [0.3, 0.6];
    let ranks = [
        jacobian_rank(&ObservationMap::Linear(vec![vec![1.0, 0.0], vec![2.0, 0.0]]), &x, DEFAULT_FD_STEP)?.rank,
        jacobian_rank(&ObservationMap::Identity, &x, DEFAULT_FD_STEP)?.rank,
        jacobian_rank(&ObservationMap::Constant(vec![0.1, 0.2]), &x, DEFAULT_FD_STEP)?.rank,
    ];
    verdict(ranks == [1, 2, 0], format!("{ranks:?}"))
}

fn single_term_minimum() -> Result<(bool, String)> {
    let cat = SystemSpec::cat();
    let x = cat.lebesgue_point(SEED, 0)?;
    let s = approach_series(&cat, &[0, 1], &x, &[0.1, 0.2], &[1], None)?;
    let want = torus_dist(&cat.step(&x)?.to_f64s(), &[0.1, 0.2]);
    verdict(s.d_n == [want], format!("d_1 = {}", s.d_n[0]))
}

fn measure_monte_carlo_range() -> Result<(bool, String)> {
    let sys = SystemSpec::from_id("mp:0.5", 512)?;
    let m = estimate_measure(&Observable::dist_to_point(&[0.5])?, 0.1, &sys, SEED, 100_000)?;
    verdict(m.estimate > 0.0 && m.estimate < 1.0 && m.half_width > 0.0, format!("{:.4} ± {:.4}", m.estimate, m.half_width))
}

fn fraction_round_trip() -> Result<(bool, String)> {
    let a = Fraction::from_dyadic(7, 3, 512)?;
    verdict(a.to_f64() == 0.875, format!("{}", a.to_f64()))
}

const CASES: &[(&str, Check)] = &[
    ("step/doubling-3/8", step_doubling),
    ("step/cat-half", step_cat),
    ("step/rotation-quarter", step_rotation),
    ("orbit/reservoir-shift", reservoir_shift),
    ("orbit/zero-steps", window_zero),
    ("sample/doubling-mean", uniform_mean),
    ("sample/cat-half-plane", cat_half),
    ("observable/quotient-metric", quotient_metric),
    ("observable/projection", projected_zero),
    ("observable/constant-pushforward", constant_pushforward),
    ("observable/mollifier", mollifier_values),
    ("measure/interval", interval_measure),
    ("measure/disc", disc_measure),
    ("measure/monte-carlo-range", measure_monte_carlo_range),
    ("dimension/circle", dimension_circle),
    ("dimension/torus", dimension_torus),
    ("hitting/periodic-censored", periodic_censored),
    ("hitting/constant-tau", constant_hitting_time),
    ("borel-cantelli/identity", identity_counter),
    ("borel-cantelli/expected-k4", expected_count),
    ("correlation/cosine-orthogonal", cosine_orthogonality),
    ("correlation/constant", constant_correlation),
    ("decay/exponential", synthetic_exponential),
    ("decay/polynomial", synthetic_polynomial),
    ("decay/noise-floor", noise_inconclusive),
    ("intersection/containment", containment),
    ("conditioned/interval-uniform", conditioned_uniform),
    ("conditioned/postcondition", conditioned_postcondition),
    ("returns/g-at-zero", curve_at_zero),
    ("returns/distance-closed-form", distance_identity),
    ("returns/markov-bound", markov_bound),
    ("observed/constant-map", observed_constant),
    ("observed/identity-map", observed_identity),
    ("observed/pushforward-slopes", pushforward_slopes),
    ("observed/rank", rank_cases),
    ("flow/single-term", single_term_minimum),
    ("fixed/dyadic", fraction_round_trip),
];

/// Runs every case; errors count as failures.
pub fn run() -> Vec<CaseResult> {
    CASES
        .iter()
        .map(|(name, check)| {
            let (passed, detail) = match check() {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            CaseResult {
                name: name.to_string(),
                passed,
                detail,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_cases_pass() {
        let failed: Vec<_> = super::run().into_iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }
}
