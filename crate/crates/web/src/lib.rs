//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each function returns a JSON string; the page parses it and draws.

use hitlab::flow::{approach_series, log_grid};
use hitlab::hitting::{default_cap, hitting_run, summarize};
use hitlab::returns::{curve_from_sample, default_t_grid, exp_law_distance, jump_clusters, return_sample, ReturnOptions};
use hitlab::stats::median;
use hitlab::{Observable, RadiusLadder, SystemSpec};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn target(system: &SystemSpec, coords: &str) -> Result<Observable, JsError> {
    let f = Observable::parse(&format!("dist:{coords}")).map_err(js)?;
    f.validate(system.dimension()).map_err(js)?;
    Ok(f)
}

/// Median `log tau` per rung of the ladder `2^-k_first .. 2^-k_last`, with
/// the median fitted exponents.
#[wasm_bindgen]
pub fn hitting_scan(system: &str, target_coords: &str, k_first: u32, k_last: u32, points: usize, seed: u64) -> Result<String, JsError> {
    let sys = SystemSpec::from_id(system, 512).map_err(js)?;
    let f = target(&sys, target_coords)?;
    let ladder = RadiusLadder::dyadic(k_first, k_last).map_err(js)?;
    let smallest = ladder.radii().last().copied().unwrap_or(0.0);
    let cap = match f.exact_measure(&sys, smallest) {
        Some(mu) => default_cap(mu).min(50_000_000),
        None => 10_000_000,
    };
    let run = hitting_run(&sys, &f, &ladder, cap, seed, points, None).map_err(js)?;
    let rungs = ladder.len();
    let log_tau: Vec<f64> = (0..rungs)
        .map(|k| {
            let v: Vec<f64> = run
                .records
                .iter()
                .skip(k)
                .step_by(rungs)
                .filter_map(|r| r.tau.hit())
                .map(|t| (t as f64).ln())
                .collect();
            median(&v)
        })
        .collect();
    let neg_log_r: Vec<f64> = ladder.radii().iter().map(|r| -r.ln()).collect();
    let s = summarize(&run.estimates);
    Ok(json!({
        "neg_log_r": neg_log_r,
        "median_log_tau": log_tau,
        "exponent": s.median_exponent,
        "r_upper": s.median_upper,
        "r_lower": s.median_lower,
        "dimension": sys.dimension(),
    })
    .to_string())
}

/// Empirical `g(t)` for returns to the ball of radius `r`, against `e^-t`.
#[wasm_bindgen]
pub fn return_curve(system: &str, target_coords: &str, r: f64, samples: usize, seed: u64) -> Result<String, JsError> {
    let sys = SystemSpec::from_id(system, 512).map_err(js)?;
    let f = target(&sys, target_coords)?;
    let opts = ReturnOptions {
        cap: None,
        measure_samples: 200_000,
    };
    let sample = return_sample(&sys, &f, r, seed, samples, &opts).map_err(js)?;
    let curve = curve_from_sample(&sample, &default_t_grid()).map_err(js)?;
    Ok(json!({
        "t": curve.t_grid,
        "g": curve.g,
        "distance": exp_law_distance(&curve),
        "clusters": jump_clusters(&curve),
    })
    .to_string())
}

/// Closest approach `d_n` of one cat-map orbit to `target`, for `n <= n_max`.
#[wasm_bindgen]
pub fn cat_approach(target_x: f64, target_y: f64, n_max: u64, seed: u64) -> Result<String, JsError> {
    let cat = SystemSpec::cat();
    let x = cat.lebesgue_point(seed, 0).map_err(js)?;
    let grid = log_grid(n_max.max(10), 10);
    let s = approach_series(&cat, &[0, 1], &x, &[target_x, target_y], &grid, None).map_err(js)?;
    Ok(json!({
        "n": s.n_grid,
        "d_n": s.d_n,
        "exponent": s.exponent,
        "fit_from": s.fit_from,
    })
    .to_string())
}
