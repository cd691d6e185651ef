//! Fixed-seed statistical checks of the sampling layer and estimators.

use hitlab::hitting::hitting_run;
use hitlab::mixing::{estimate_correlation, Sampling, TestFunction};
use hitlab::observables::{estimate_measure, monte_carlo_measures, DimensionOptions, Observable, RadiusLadder};
use hitlab::observed::{jacobian_rank, pushforward_dimension, ObservationMap, DEFAULT_FD_STEP};
use hitlab::point::PhasePoint;
use hitlab::returns::{kac_check, return_sample, ReturnOptions};
use hitlab::system::{invariant_f64s, sample_invariant, SystemSpec};

fn lebesgue_corpus() -> Vec<SystemSpec> {
    vec![
        SystemSpec::doubling(),
        SystemSpec::cat(),
        SystemSpec::from_id("rotation:golden", 512).unwrap(),
        SystemSpec::from_id("toral:[[1,1,0],[1,2,1],[0,1,2]]", 512).unwrap(),
    ]
}

#[test]
fn preimage_of_box_has_box_measure() {
    let n = 20_000;
    for sys in lebesgue_corpus() {
        let d = sys.dimension();
        let (lo, hi) = (0.13, 0.58);
        let inside = |x: &[f64]| x.iter().all(|v| (lo..hi).contains(v));
        let hits = (0..n)
            .filter(|&i| {
                let x = sys.lebesgue_point(7, i as u64).unwrap();
                inside(&sys.step(&x).unwrap().to_f64s())
            })
            .count();
        let q = (hi - lo).powi(d as i32);
        let se = (q * (1.0 - q) / n as f64).sqrt();
        let p = hits as f64 / n as f64;
        assert!((p - q).abs() <= 3.0 * se, "{}: {p} vs {q}", sys.id());
    }
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap().install(f)
}

#[test]
fn samples_do_not_depend_on_workers() {
    for id in ["doubling", "cat", "mp:0.5"] {
        let sys = SystemSpec::from_id(id, 512).unwrap();
        let a = in_pool(1, || invariant_f64s(&sys, 11, 5000).unwrap());
        let b = in_pool(3, || invariant_f64s(&sys, 11, 5000).unwrap());
        assert_eq!(a, b, "{id}");
    }
    let cat = SystemSpec::cat();
    assert_eq!(sample_invariant(&cat, 3, 50).unwrap(), sample_invariant(&cat, 3, 50).unwrap());
}

#[test]
fn hitting_run_does_not_depend_on_workers() {
    let sys = SystemSpec::doubling();
    let f = Observable::dist_to_point(&[0.375]).unwrap();
    let ladder = RadiusLadder::dyadic(3, 10).unwrap();
    let run = |w| in_pool(w, || hitting_run(&sys, &f, &ladder, 1_000_000, 5, 40, None).unwrap());
    let (a, b) = (run(1), run(4));
    assert_eq!(a.records, b.records);
    assert_eq!(a.estimates, b.estimates);
}

#[test]
fn monte_carlo_covers_exact_measure() {
    let sys = SystemSpec::cat();
    let f = Observable::dist_to_point(&[0.3, 0.6]).unwrap();
    let r = 0.1;
    let exact = f.exact_measure(&sys, r).unwrap();
    let seeds = 60;
    let covered = (0..seeds)
        .filter(|&s| {
            let m = monte_carlo_measures(&f, &[r], &sys, s, 20_000, 0.95).unwrap()[0];
            (m.estimate - exact).abs() <= m.half_width
        })
        .count();
    assert!(covered as f64 >= 0.9 * seeds as f64, "{covered}/{seeds}");
}

#[test]
fn mollifier_mean_lies_between_measures() {
    let sys = SystemSpec::doubling();
    let f = Observable::dist_to_point(&[0.375]).unwrap();
    let (r_prev, r) = (0.05, 0.02);
    let n = 50_000;
    let xs = invariant_f64s(&sys, 9, n).unwrap();
    let vals: Vec<f64> = xs.iter().map(|&x| f.mollifier(r_prev, r, &[x])).collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let hw = 1.96 * sd / (n as f64).sqrt();
    let inner = monte_carlo_measures(&f, &[r], &sys, 10, n, 0.95).unwrap()[0];
    let outer = monte_carlo_measures(&f, &[r_prev], &sys, 10, n, 0.95).unwrap()[0];
    assert!(mean + hw + inner.half_width >= inner.estimate);
    assert!(mean - hw - outer.half_width <= outer.estimate);
}

#[test]
fn rank_matches_pushforward_dimension() {
    let cat = SystemSpec::cat();
    let maps = [
        ObservationMap::Identity,
        ObservationMap::Projection(vec![1]),
        ObservationMap::Shear(0.1),
        ObservationMap::Twist(0.1),
    ];
    let ladder = RadiusLadder::dyadic(2, 6).unwrap();
    let opts = DimensionOptions::default();
    for map in maps {
        let mut agree = 0;
        for i in 0..50 {
            let x0 = cat.lebesgue_point(31, i).unwrap();
            let rank = jacobian_rank(&map, &x0.to_f64s(), DEFAULT_FD_STEP).unwrap().rank;
            let d = pushforward_dimension(&cat, &map, &x0, &ladder, 100 + i, 100_000, &opts).unwrap();
            if (d.slope - rank as f64).abs() <= 0.25 {
                agree += 1;
            }
        }
        assert!(agree >= 45, "{map}: {agree}/50");
    }
}

#[test]
fn reseeded_correlations_agree() {
    let sys = SystemSpec::doubling();
    let phi = TestFunction::Hat { center: vec![0.37], width: 0.3 };
    let lags = [1, 2, 3];
    let trials = 40;
    let mut agree = 0;
    let mut total = 0;
    for s in 0..trials {
        let a = estimate_correlation(&sys, &phi, &phi, &lags, 2 * s, 4000, Sampling::Iid, 0.95).unwrap();
        let b = estimate_correlation(&sys, &phi, &phi, &lags, 2 * s + 1, 4000, Sampling::Iid, 0.95).unwrap();
        for i in 0..lags.len() {
            total += 1;
            if (a.signed[i] - b.signed[i]).abs() <= a.half_widths[i] + b.half_widths[i] {
                agree += 1;
            }
        }
    }
    assert!(agree as f64 >= 0.95 * total as f64, "{agree}/{total}");
}

#[test]
fn kac_holds_on_exact_targets() {
    let cases = [
        ("doubling", "dist:0.375", 2f64.powi(-8)),
        ("cat", "dist:0.3,0.6", 2f64.powi(-5)),
        ("rotation:golden", "dist:0.375", 2f64.powi(-8)),
    ];
    for (id, rule, r) in cases {
        let sys = SystemSpec::from_id(id, 512).unwrap();
        let f = Observable::parse(rule).unwrap();
        let s = return_sample(&sys, &f, r, 13, 3000, &ReturnOptions::default()).unwrap();
        let k = kac_check(&s);
        assert!(k.consistent, "{id}: {k:?}");
    }
}

#[test]
fn mp_measure_matches_birkhoff_average() {
    let sys = SystemSpec::from_id("mp:0.5", 512).unwrap();
    let f = Observable::dist_to_point(&[0.5]).unwrap();
    let m = estimate_measure(&f, 0.1, &sys, 3, 100_000).unwrap();
    // Independent oracle: time average of the indicator along a fresh orbit.
    let mut x = 0.3141f64;
    let s: f64 = 0.5;
    let (mut hits, n) = (0u64, 2_000_000u64);
    for _ in 0..10_000 {
        x = (x + x.powf(1.0 + s)) % 1.0;
    }
    for _ in 0..n {
        x = (x + x.powf(1.0 + s)) % 1.0;
        if (x - 0.5).abs() <= 0.1 {
            hits += 1;
        }
    }
    let birkhoff = hits as f64 / n as f64;
    assert!(m.estimate > 0.0 && m.estimate < 1.0);
    assert!((m.estimate - birkhoff).abs() <= 2.0 * m.half_width + 0.01, "{} vs {birkhoff}", m.estimate);
}

#[test]
fn dyadic_start_points_are_exact() {
    let p = PhasePoint::dyadic(&[5, 9], 4, 512).unwrap();
    assert_eq!(p.to_f64s(), vec![5.0 / 16.0, 9.0 / 16.0]);
}
