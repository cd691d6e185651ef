//! Acceptance suite: runs the configs under `configs/` and prints one
//! PASS/FAIL line per criterion, followed by the supplementary invariants.

use std::collections::BTreeMap;
use std::path::PathBuf;

use hitlab_cli::config::Config;
use hitlab_cli::run::{run_config, ExperimentResult};
use serde_json::Value;

/// Worker counts of the main pass and of the determinism reruns.
const WORKERS: usize = 3;
const RERUN_WORKERS: usize = 1;

/// Criteria that fail for reasons recorded in the project notes. Anything
/// else failing, or any of these starting to pass, fails the test.
const KNOWN_FAILURES: &[u32] = &[3];

const CORPUS: &[&str] = &[
    "c1-doubling-hitting",
    "c2-cat-hitting",
    "c3-golden-hitting",
    "c3-liouville-hitting",
    "c3-mp-hitting",
    "c3-cat-deep-hitting",
    "c4-doubling-borel-cantelli",
    "c5-doubling-intersection",
    "c6-doubling-returns",
    "c6-golden-returns",
    "c7-cat-returns",
    "c7-liouville-returns",
    "c8-cat-projection-observed",
    "c8-cat-identity-observed",
    "c8-cat-shear-observed",
    "c8-cat-twist-observed",
    "c9-cat-flow",
    "c10-doubling-refined-hitting",
];

/// Reruns for the determinism criterion: one per experiment kind in the corpus.
const RERUNS: &[&str] = &[
    "c1-doubling-hitting",
    "c4-doubling-borel-cantelli",
    "c5-doubling-intersection",
    "c6-golden-returns",
    "c8-cat-twist-observed",
    "c9-cat-flow",
];

fn config(name: &str) -> Config {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.toml"));
    Config::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run_with(workers: usize, name: &str) -> ExperimentResult {
    let cfg = config(name);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .unwrap()
        .install(|| run_config(&cfg))
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

struct Line {
    id: String,
    pass: bool,
    detail: String,
}

fn line(id: impl Into<String>, pass: bool, detail: String) -> Line {
    Line { id: id.into(), pass, detail }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

type Results = BTreeMap<&'static str, ExperimentResult>;

fn c1(r: &Results) -> Line {
    let e = &r["c1-doubling-hitting"].summary["exponents"];
    let (up, lo) = (num(&e["median_upper"]), num(&e["median_lower"]));
    line("1", within(up, 0.85, 1.15) && within(lo, 0.85, 1.15), format!("doubling R-upper {up:.3}, R-lower {lo:.3}; want both in [0.85, 1.15]"))
}

fn c2(r: &Results) -> Line {
    let m = num(&r["c2-cat-hitting"].summary["exponents"]["median_exponent"]);
    line("2", within(m, 1.7, 2.3), format!("cat median exponent {m:.3}; want [1.7, 2.3]"))
}

/// Every run carrying both exponent and dimension estimates.
fn exponent_runs(r: &Results) -> Vec<(&'static str, f64, f64, f64, f64)> {
    r.iter()
        .filter(|(_, x)| x.summary.get("exponents").is_some() && x.summary.get("d_upper").is_some())
        .map(|(name, x)| {
            let s = &x.summary;
            (
                *name,
                num(&s["exponents"]["median_upper"]),
                num(&s["exponents"]["median_lower"]),
                num(&s["d_upper"]),
                num(&s["d_lower"]),
            )
        })
        .collect()
}

fn c3(r: &Results) -> Line {
    let runs = exponent_runs(r);
    let bad: Vec<String> = runs
        .iter()
        .filter(|(_, ru, rl, du, dl)| !(*ru >= du - 0.15 && *rl >= dl - 0.15))
        .map(|(n, ru, rl, du, dl)| format!("{n}: R {ru:.3}/{rl:.3} vs d {du:.3}/{dl:.3}"))
        .collect();
    let detail = if bad.is_empty() {
        format!("{} runs, R-upper >= d-upper - 0.15 and R-lower >= d-lower - 0.15 in all", runs.len())
    } else {
        format!("{} of {} runs below: {}", bad.len(), runs.len(), bad.join("; "))
    };
    line("3", bad.is_empty(), detail)
}

fn c4(r: &Results) -> Line {
    let s = &r["c4-doubling-borel-cantelli"].summary;
    let (band, mean) = (num(&s["fraction_in_band"]), num(&s["ratio_mean"]));
    line(
        "4",
        band >= 0.9 && within(mean, 0.95, 1.05),
        format!("{:.0}% of points in [0.8, 1.2], mean ratio {mean:.4}; want >= 90% and [0.95, 1.05]", 100.0 * band),
    )
}

fn c5(r: &Results) -> Line {
    let x = &r["c5-doubling-intersection"];
    let checks = x.data["checks"].as_array().cloned().unwrap_or_default();
    let gaps_ok = checks.iter().all(|c| c["k"].as_u64().unwrap() >= c["j"].as_u64().unwrap() + 5);
    let holds = checks.iter().filter(|c| c["holds"] == true).count();
    line(
        "5",
        checks.len() == 20 && gaps_ok && holds == checks.len(),
        format!("{holds}/{} pairs with k - j >= 5 satisfy lhs <= rhs + half-width", checks.len()),
    )
}

fn radius_entry(x: &ExperimentResult, radius: f64) -> Value {
    x.summary["radii"]
        .as_array()
        .and_then(|a| a.iter().find(|e| num(&e["radius"]) == radius).cloned())
        .unwrap_or(Value::Null)
}

fn c6(r: &Results) -> Line {
    let r10 = 2f64.powi(-10);
    let dist = num(&radius_entry(&r["c6-doubling-returns"], r10)["exp_law_distance"]);
    let clusters = radius_entry(&r["c6-golden-returns"], r10)["jump_clusters"].as_u64().unwrap_or(u64::MAX);
    line(
        "6",
        dist <= 0.1 && clusters <= 3,
        format!("doubling sup|g - e^-t| = {dist:.4} (want <= 0.1); golden jump clusters {clusters} (want <= 3)"),
    )
}

fn c7(r: &Results) -> Line {
    let mut bad = vec![];
    let mut checked = 0;
    for (name, x) in r.iter().filter(|(_, x)| x.kind == "return-stats") {
        for e in x.summary["radii"].as_array().unwrap() {
            if e["measure"]["exact"] != true {
                continue;
            }
            checked += 1;
            let kac = &e["kac"];
            if kac["consistent"] != true || kac["censored"] != 0 {
                bad.push(format!("{name} r={}: Kac product {:.4}", e["radius"], num(&kac["product"])));
            }
            for i in e["indicators"].as_array().unwrap().iter().filter(|i| num(&i["l"]) == 20.0) {
                if num(&i["value"]) > 0.05 + 3.0 * num(&i["half_width"]) {
                    bad.push(format!("{name} r={}: indicator {:.4}", e["radius"], num(&i["value"])));
                }
            }
        }
    }
    let detail = if bad.is_empty() {
        format!("{checked} exact targets: Kac within 4 stderr, indicator(l=20) <= 0.05 + 3 half-widths")
    } else {
        bad.join("; ")
    };
    line("7", bad.is_empty() && checked > 0, detail)
}

fn c8(r: &Results) -> Line {
    let observed: Vec<_> = r.iter().filter(|(_, x)| x.kind == "observed").collect();
    let checks: u64 = observed.iter().map(|(_, x)| x.summary["equality_checks"].as_u64().unwrap()).sum();
    let mismatches: u64 = observed.iter().map(|(_, x)| x.summary["equality_mismatches"].as_u64().unwrap()).sum();
    let rank: Vec<String> = observed
        .iter()
        .map(|(_, x)| format!("{} {:.2}", x.summary["map"].as_str().unwrap(), num(&x.summary["rank_agreement"])))
        .collect();
    let rank_ok = observed.iter().all(|(_, x)| num(&x.summary["rank_agreement"]) >= 0.9);
    let proj = num(&r["c8-cat-projection-observed"].summary["exponents"]["median_exponent"]);
    line(
        "8",
        mismatches == 0 && checks >= 1000 && rank_ok && (proj - 1.0).abs() <= 0.2,
        format!(
            "{mismatches} mismatches in {checks} equality checks; rank agreement {}; projection median exponent {proj:.3}",
            rank.join(", ")
        ),
    )
}

fn c9(r: &Results) -> Line {
    let s = &r["c9-cat-flow"].summary;
    let m = num(&s["median_exponent"]);
    line(
        "9",
        within(m, 0.4, 0.6),
        format!(
            "median fitted exponent {m:.3} (IQR {:.3} to {:.3}); want [0.4, 0.6]",
            num(&s["q1_exponent"]),
            num(&s["q3_exponent"])
        ),
    )
}

fn c10(r: &Results) -> Line {
    let a = &r["c1-doubling-hitting"].summary["exponents"];
    let b = &r["c10-doubling-refined-hitting"].summary["exponents"];
    let diffs: Vec<f64> = ["median_exponent", "median_upper", "median_lower"]
        .iter()
        .map(|k| (num(&a[k]) - num(&b[k])).abs())
        .collect();
    line(
        "10",
        diffs.iter().all(|d| *d <= 0.1),
        format!("refined-ladder changes: exponent {:.3}, R-upper {:.3}, R-lower {:.3}; want <= 0.1", diffs[0], diffs[1], diffs[2]),
    )
}

fn c11(r: &Results) -> Line {
    let differ: Vec<&str> = RERUNS
        .iter()
        .copied()
        .filter(|name| run_with(RERUN_WORKERS, name).data_section() != r[name].data_section())
        .collect();
    let detail = if differ.is_empty() {
        format!("{} configs byte-identical with {WORKERS} and {RERUN_WORKERS} workers", RERUNS.len())
    } else {
        format!("data sections differ: {}", differ.join(", "))
    };
    line("11", differ.is_empty(), detail)
}

/// Triviality indicators bounded away from 0 on every radius of a run force
/// R-lower <= d-upper + 0.2 on the hitting run of the same target.
fn contrapositive(r: &Results) -> Line {
    let pairs = [
        ("c6-doubling-returns", "c1-doubling-hitting"),
        ("c6-golden-returns", "c3-golden-hitting"),
        ("c7-liouville-returns", "c3-liouville-hitting"),
        ("c7-cat-returns", "c2-cat-hitting"),
    ];
    let mut parts = vec![];
    let mut ok = true;
    let mut applied = 0;
    for (ret, hit) in pairs {
        let radii = r[ret].summary["radii"].as_array().unwrap();
        let ls: Vec<f64> = radii[0]["indicators"].as_array().unwrap().iter().map(|i| num(&i["l"])).collect();
        let away = ls.iter().any(|&l| {
            radii.iter().all(|e| {
                e["indicators"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .any(|i| num(&i["l"]) == l && num(&i["value"]) - 3.0 * num(&i["half_width"]) > 0.0)
            })
        });
        if !away {
            continue;
        }
        applied += 1;
        let s = &r[hit].summary;
        let (rl, du) = (num(&s["exponents"]["median_lower"]), num(&s["d_upper"]));
        ok &= rl <= du + 0.2;
        parts.push(format!("{hit} R-lower {rl:.3} vs d-upper {du:.3}"));
    }
    line("contrapositive", ok && applied > 0, parts.join("; "))
}

/// Flow exponent against the reciprocal of the hitting exponent of the
/// matching distance observable.
fn reciprocal(r: &Results) -> Line {
    let flow = num(&r["c9-cat-flow"].summary["median_exponent"]);
    let mut parts = vec![];
    let mut ok = true;
    for hit in ["c2-cat-hitting", "c3-cat-deep-hitting"] {
        let rr = num(&r[hit].summary["exponents"]["median_exponent"]);
        ok &= (flow - 1.0 / rr).abs() <= 0.2;
        parts.push(format!("{hit}: 1/R = {:.3}", 1.0 / rr));
    }
    line("reciprocal", ok, format!("flow exponent {flow:.3}; {}", parts.join(", ")))
}

#[test]
fn acceptance() {
    let results: Results = CORPUS.iter().map(|&name| (name, run_with(WORKERS, name))).collect();
    let criteria = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11];
    let lines: Vec<Line> = criteria.iter().map(|c| c(&results)).collect();
    for l in &lines {
        println!("criterion {:>2}: {} {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let extra = [contrapositive(&results), reciprocal(&results)];
    for l in &extra {
        println!("invariant {}: {} {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id.parse().unwrap()).collect();
    println!("failing criteria: {failed:?}; known: {KNOWN_FAILURES:?}");
    assert_eq!(failed, KNOWN_FAILURES, "criterion outcomes changed");
    assert!(extra.iter().all(|l| l.pass), "supplementary invariant failed");
}
