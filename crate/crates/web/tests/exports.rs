//! The exports run natively too; only their error paths need a JS host.

use hitlab_web::{cat_approach, hitting_scan, return_curve};
use serde_json::Value;

fn parse(s: Result<String, wasm_bindgen::JsError>) -> Value {
    serde_json::from_str(&s.unwrap_or_else(|_| panic!("export failed"))).unwrap()
}

#[test]
fn scan_has_one_median_per_rung() {
    let v = parse(hitting_scan("doubling", "0.375", 3, 12, 40, 1));
    assert_eq!(v["median_log_tau"].as_array().unwrap().len(), 10);
    assert_eq!(v["dimension"], 1);
    let e = v["exponent"].as_f64().unwrap();
    assert!((0.7..1.3).contains(&e), "{e}");
}

#[test]
fn return_curve_starts_at_one() {
    let v = parse(return_curve("doubling", "0.375", 2f64.powi(-8), 2000, 1));
    assert_eq!(v["g"][0], 1.0);
    assert!(v["distance"].as_f64().unwrap() < 0.1);
}

#[test]
fn approach_is_non_increasing() {
    let v = parse(cat_approach(0.3, 0.6, 10_000, 1));
    let d: Vec<f64> = v["d_n"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
}
