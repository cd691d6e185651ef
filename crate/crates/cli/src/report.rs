//! Markdown summaries of persisted result files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;
use crate::run::{write_atomic, ExperimentResult, SCHEMA_VERSION};

/// Tolerance of the `R >= d - tol` comparison flagged in the table.
pub const GAN_TOLERANCE: f64 = 0.15;

pub fn load(path: &Path) -> Result<ExperimentResult, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
    match v.get("schema_version").and_then(Value::as_u64) {
        Some(n) if n == SCHEMA_VERSION as u64 => {}
        Some(n) => {
            return Err(CliError::SchemaMismatch(format!(
                "{} has schema version {n}, this build reads version {SCHEMA_VERSION}",
                path.display()
            )))
        }
        None => return Err(CliError::SchemaMismatch(format!("{} has no schema_version", path.display()))),
    }
    let mut r: ExperimentResult = serde_json::from_value(v).map_err(|e| CliError::io(path, e))?;
    let csv = crate::run::with_suffix(&strip_json(path), "csv");
    r.csv = std::fs::read_to_string(&csv).unwrap_or_default();
    Ok(r)
}

fn strip_json(path: &Path) -> PathBuf {
    match path.extension() {
        Some(e) if e == "json" => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn f(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.3}"),
        None => "-".into(),
    }
}

/// `(headline, verdict)` for one result.
fn headline(r: &ExperimentResult) -> (String, String) {
    let s = &r.summary;
    match r.kind.as_str() {
        "dimension" => (
            format!("slope {} (d-upper {}, d-lower {})", f(&s["slope"]), f(&s["d_upper"]), f(&s["d_lower"])),
            "-".into(),
        ),
        "observed" if s.get("exponents").is_none() => (
            format!(
                "equality mismatches {}, rank agreement {}",
                s["equality_mismatches"],
                f(&s["rank_agreement"])
            ),
            "-".into(),
        ),
        "hitting" | "observed" => {
            let e = &s["exponents"];
            let (ru, rl) = (e["median_upper"].as_f64(), e["median_lower"].as_f64());
            let (d_up, d_lo) = (s["d_upper"].as_f64(), s["d_lower"].as_f64());
            let gan = match (ru, rl, d_up, d_lo) {
                (Some(ru), Some(rl), Some(du), Some(dl)) => {
                    let ok = ru >= du - GAN_TOLERANCE && rl >= dl - GAN_TOLERANCE;
                    if ok { "consistent" } else { "below dimension" }.to_string()
                }
                _ => "no fits".into(),
            };
            let mut h = format!(
                "R-upper {}, R-lower {} vs d-upper {}, d-lower {}",
                f(&e["median_upper"]),
                f(&e["median_lower"]),
                f(&s["d_upper"]),
                f(&s["d_lower"])
            );
            if r.kind == "observed" {
                let _ = write!(
                    h,
                    "; equality mismatches {}, rank agreement {}",
                    s["equality_mismatches"],
                    f(&s["rank_agreement"])
                );
            }
            (h, gan)
        }
        "borel-cantelli" => (
            format!(
                "Z/E median {}, range [{}, {}]",
                f(&s["ratio_median"]),
                f(&s["ratio_min"]),
                f(&s["ratio_max"])
            ),
            format!("{:.0}% in [0.8, 1.2]", 100.0 * s["fraction_in_band"].as_f64().unwrap_or(0.0)),
        ),
        "correlation" => (format!("usable lags {}", s["usable_lags"]), decay(&s["fit"])),
        "intersection-bound" => (
            format!("{}/{} pairs hold", s["holds"], s["pairs"]),
            if s["all_hold"].as_bool() == Some(true) { "holds" } else { "violated" }.into(),
        ),
        "return-stats" => {
            let parts: Vec<String> = s["radii"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .map(|x| {
                            format!(
                                "r={} dist {} clusters {} kac {}",
                                x["radius"],
                                f(&x["exp_law_distance"]),
                                x["jump_clusters"],
                                if x["kac"]["consistent"].as_bool() == Some(true) { "ok" } else { "off" }
                            )
                        })
                        .collect()
                })
                .unwrap_or_default();
            (parts.join("; "), "-".into())
        }
        "flow-analogue" => (
            format!(
                "median exponent {} (IQR {} to {}), predicted {}",
                f(&s["median_exponent"]),
                f(&s["q1_exponent"]),
                f(&s["q3_exponent"]),
                f(&s["predicted"])
            ),
            "-".into(),
        ),
        other => (format!("unknown kind {other}"), "-".into()),
    }
}

fn decay(fit: &Value) -> String {
    if let Some(e) = fit.get("error") {
        return format!("no fit: {}", e.as_str().unwrap_or(""));
    }
    let c = &fit["class"];
    match c["class"].as_str() {
        Some("exponential") => format!("exponential, rate {}", f(&c["rate"])),
        Some("polynomial") => format!("polynomial, exponent {}", f(&c["exponent"])),
        Some(other) => other.to_string(),
        None => "-".into(),
    }
}

pub struct Report {
    pub markdown: String,
    pub csv: String,
}

pub fn build(paths: &[PathBuf]) -> Result<Report, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("report needs at least one result file".into()));
    }
    let results = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let mut md = String::from("| file | kind | system | seed | result | verdict |\n|---|---|---|---|---|---|\n");
    let mut csv = String::from("file,kind,system,seed,result,verdict\n");
    for (p, r) in paths.iter().zip(&results) {
        let (h, v) = headline(r);
        let system = r.engine["system"].as_str().unwrap_or("?");
        let seed = r.config["seed"].to_string();
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let _ = writeln!(md, "| {name} | {} | {system} | {seed} | {h} | {v} |", r.kind);
        let _ = writeln!(csv, "{},{},{},{},{},{}", quote(&name), r.kind, quote(system), seed, quote(&h), quote(&v));
    }
    Ok(Report { markdown: md, csv })
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `out` and a `.csv` companion next to it.
pub fn write(report: &Report, out: &Path) -> Result<(), CliError> {
    write_atomic(out, report.markdown.as_bytes())?;
    write_atomic(&out.with_extension("csv"), report.csv.as_bytes())
}
