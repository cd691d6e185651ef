use hitlab::fixed::Fraction;
use hitlab::flow::approach_series;
use hitlab::hitting::{bc_counter_series, hitting_times, BcPlan, MeasureSource};
use hitlab::mixing::{estimate_correlation, Sampling, TestFunction};
use hitlab::observables::{ball_measure, mollifier, Observable, RadiusLadder};
use hitlab::observed::{observed_hitting_time, ObservationMap};
use hitlab::point::{torus_dist, PhasePoint};
use hitlab::returns::{curve_from_sample, indicator_from_sample, return_sample, ReturnOptions};
use hitlab::hitting::hitting_time;
use hitlab::system::SystemSpec;
use num_bigint::BigUint;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn invertible_system(which: u8) -> SystemSpec {
    match which % 3 {
        0 => SystemSpec::cat(),
        1 => SystemSpec::from_id("toral:[[1,1,0],[1,2,1],[0,1,2]]", 512).unwrap(),
        _ => SystemSpec::from_id("rotation:golden", 512).unwrap(),
    }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn forward_then_back_is_identity(which in 0u8..3, seed in any::<u64>(), k in 0u64..200) {
        let sys = invertible_system(which);
        let p = sys.lebesgue_point(seed, 0).unwrap();
        let mut q = sys.orbit_window(&p, k).unwrap();
        for _ in 0..k {
            q = sys.step_back(&q).unwrap();
        }
        prop_assert_eq!(q, p);
    }

    #[test]
    fn doubling_is_a_shift(num in any::<u64>(), k in 0u32..400) {
        let sys = SystemSpec::doubling();
        let bits = 512;
        let start = Fraction::from_numerator(&(BigUint::from(num) << 400u32), bits);
        let mut p = PhasePoint::fixed(vec![start.clone()]).unwrap();
        for _ in 0..k {
            p = sys.step(&p).unwrap();
        }
        let modulus = BigUint::from(1u8) << bits;
        let want = Fraction::from_numerator(&((start.numerator() << k) % modulus), bits);
        match p {
            PhasePoint::Fixed { coords, .. } => prop_assert_eq!(&coords[0], &want),
            other => prop_assert!(false, "engine changed: {:?}", other),
        }
    }

    #[test]
    fn rotation_jump_matches_steps(seed in any::<u64>(), k in 0u64..300) {
        let sys = SystemSpec::from_id("rotation:golden", 512).unwrap();
        let p = sys.lebesgue_point(seed, 3).unwrap();
        let mut q = p.clone();
        for _ in 0..k {
            q = sys.step(&q).unwrap();
        }
        prop_assert_eq!(sys.orbit_window(&p, k).unwrap(), q);
    }

    #[test]
    fn mollifier_brackets_indicators(v in 0.0f64..1.0, r in 0.001f64..0.4, gap in 0.001f64..0.4) {
        let r_prev = r + gap;
        let m = mollifier(v, r_prev, r);
        let inner = if v <= r { 1.0 } else { 0.0 };
        let outer = if v <= r_prev { 1.0 } else { 0.0 };
        prop_assert!(inner <= m && m <= outer);
    }

    #[test]
    fn mollifier_is_lipschitz(
        x in prop::array::uniform2(0.0f64..1.0),
        y in prop::array::uniform2(0.0f64..1.0),
        r in 0.01f64..0.2,
        gap in 0.01f64..0.2,
    ) {
        let f = Observable::dist_to_point(&[0.3, 0.6]).unwrap();
        let r_prev = r + gap;
        let lhs = (f.mollifier(r_prev, r, &x) - f.mollifier(r_prev, r, &y)).abs();
        let bound = f.lipschitz() / (r_prev - r) * torus_dist(&x, &y) + 1e-12;
        prop_assert!(lhs <= bound, "{lhs} > {bound}");
    }

    #[test]
    fn exact_measure_monotone(k in 1usize..4, a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (r, r2) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(ball_measure(k, r).unwrap() <= ball_measure(k, r2).unwrap());
    }

    #[test]
    fn hitting_times_nest(which in 0u8..3, seed in any::<u64>(), target in prop::array::uniform2(0.0f64..1.0)) {
        let (sys, f) = match which {
            0 => (SystemSpec::doubling(), Observable::dist_to_point(&target[..1]).unwrap()),
            1 => (SystemSpec::cat(), Observable::dist_to_point(&target).unwrap()),
            _ => (SystemSpec::from_id("rotation:golden", 512).unwrap(), Observable::dist_to_point(&target[..1]).unwrap()),
        };
        let ladder = RadiusLadder::dyadic(1, 10).unwrap();
        let x = sys.lebesgue_point(seed, 0).unwrap();
        let recs = hitting_times(&sys, &x, &f, ladder.radii(), 20_000).unwrap();
        for w in recs.windows(2) {
            prop_assert!(w[1].tau.value() >= w[0].tau.value());
            prop_assert!(w[1].tau.is_censored() || !w[0].tau.is_censored());
        }
    }

    #[test]
    fn counter_monotone(seed in any::<u64>(), beta in 0.1f64..0.95) {
        let sys = SystemSpec::doubling();
        let f = Observable::dist_to_point(&[0.375]).unwrap();
        let plan = BcPlan::new(&sys, &f, beta, 2000, 1.0, MeasureSource::Exact).unwrap()
            .with_checkpoints((1..=2000).step_by(7).collect());
        let x = sys.lebesgue_point(seed, 0).unwrap();
        let series = bc_counter_series(&sys, &x, &f, &plan).unwrap();
        for w in series.windows(2) {
            prop_assert!(w[1].z >= w[0].z);
            prop_assert!(w[1].expected > w[0].expected);
        }
    }

    #[test]
    fn observed_equals_hitting(seed in any::<u64>(), which in 0u8..3, r in 0.01f64..0.2) {
        let cat = SystemSpec::cat();
        let x = cat.lebesgue_point(seed, 0).unwrap();
        let x0 = cat.lebesgue_point(seed, 1).unwrap();
        let map = match which {
            0 => ObservationMap::Identity,
            1 => ObservationMap::Projection(vec![1]),
            _ => ObservationMap::Twist(0.5),
        };
        let a = observed_hitting_time(&cat, &x, &x0, &map, r, 5000).unwrap();
        let f = Observable::pushforward_from(map, &x0.to_f64s()).unwrap();
        let b = hitting_time(&cat, &x, &f, r, 5000).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn running_minimum_matches_recomputation(seed in any::<u64>(), p in prop::array::uniform2(0.0f64..1.0)) {
        let cat = SystemSpec::cat();
        let x = cat.lebesgue_point(seed, 0).unwrap();
        let grid: Vec<u64> = vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89];
        let s = approach_series(&cat, &[0, 1], &x, &p, &grid, None).unwrap();
        for (i, &n) in grid.iter().enumerate() {
            let direct = (1..=n)
                .map(|k| torus_dist(&cat.orbit_window(&x, k).unwrap().to_f64s(), &p))
                .fold(f64::INFINITY, f64::min);
            prop_assert_eq!(s.d_n[i], direct);
        }
        prop_assert!(s.d_n.windows(2).all(|w| w[1] <= w[0]));
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn return_curve_shape(seed in any::<u64>(), k in 4i32..8) {
        let f = Observable::dist_to_point(&[0.375]).unwrap();
        let s = return_sample(&SystemSpec::doubling(), &f, 2f64.powi(-k), seed, 500, &ReturnOptions::default()).unwrap();
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.125).collect();
        let c = curve_from_sample(&s, &grid).unwrap();
        prop_assert_eq!(c.g[0], 1.0);
        prop_assert!(c.g.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(c.g.iter().all(|g| (0.0..=1.0).contains(g)));
        // Off the lattice of tau * mu values the two counting rules agree.
        let mu = s.measure.estimate;
        for l in [0.3f64, 0.77, 1.9] {
            let t = (((l / mu).floor() + 0.5) * mu).max(1e-9);
            let g = curve_from_sample(&s, &[t]).unwrap().g[0];
            prop_assert_eq!(indicator_from_sample(&s, t, 0.95).unwrap().value, g);
        }
    }

    #[test]
    fn correlation_within_norm_bound(seed in any::<u64>(), c in 0.0f64..1.0, w in 0.05f64..0.5, freq in 1u32..4) {
        let phi = TestFunction::Hat { center: vec![c], width: w };
        let psi = TestFunction::Cosine { coord: 0, freq };
        let s = estimate_correlation(&SystemSpec::doubling(), &phi, &psi, &[0, 1, 2, 3], seed, 2000, Sampling::Iid, 0.95).unwrap();
        let bound = s.norm_phi.total() * s.norm_psi.total();
        for (v, h) in s.values.iter().zip(&s.half_widths) {
            prop_assert!(v - h <= bound);
        }
    }
}
