//! `hitlab selftest`: the library's quick cases plus the harness's own.

use hitlab::observables::{estimate_dimension, DimensionOptions, Observable, RadiusLadder};
use hitlab::selftest::CaseResult;
use hitlab::SystemSpec;

use crate::catalog::catalog;
use crate::config::Config;
use crate::error::CliError;
use crate::report;
use crate::run::{run_config, SCHEMA_VERSION};

const DIMENSION_CONFIG: &str = r#"
kind = "dimension"
system = "doubling"
seed = 7

[dimension]
observable = "dist:0.375"
ladder = { dyadic = [3, 10] }
"#;

fn case(name: &str, f: impl FnOnce() -> Result<(), String>) -> CaseResult {
    let (passed, detail) = match f() {
        Ok(()) => (true, String::new()),
        Err(e) => (false, e),
    };
    CaseResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn delegation() -> Result<(), String> {
    let cfg = Config::parse(DIMENSION_CONFIG).map_err(|e| e.to_string())?;
    let r = run_config(&cfg).map_err(|e| e.to_string())?;
    let f = Observable::dist_to_point(&[0.375]).unwrap();
    let ladder = RadiusLadder::dyadic(3, 10).unwrap();
    let direct = estimate_dimension(&f, &ladder, &SystemSpec::doubling(), 7, 1_000_000, &DimensionOptions::default())
        .map_err(|e| e.to_string())?;
    let want = serde_json::to_value(&direct).unwrap();
    if r.data == want {
        Ok(())
    } else {
        Err("runner output differs from the direct estimate".into())
    }
}

fn determinism() -> Result<(), String> {
    let cfg = Config::parse(DIMENSION_CONFIG).map_err(|e| e.to_string())?;
    let a = run_config(&cfg).map_err(|e| e.to_string())?;
    let b = run_config(&cfg).map_err(|e| e.to_string())?;
    if a.data_section() == b.data_section() {
        Ok(())
    } else {
        Err("data sections differ".into())
    }
}

fn ladder_validation() -> Result<(), String> {
    let text = DIMENSION_CONFIG.replace("{ dyadic = [3, 10] }", "{ radii = [0.1, 0.01], gap = 0.5 }");
    let cfg = Config::parse(&text).map_err(|e| e.to_string())?;
    match run_config(&cfg) {
        Err(CliError::ConfigInvalid { field, .. }) if field.contains("ladder") => Ok(()),
        Err(e) => Err(format!("wrong error: {e}")),
        Ok(_) => Err("accepted a ladder without the gap condition".into()),
    }
}

fn report_empty() -> Result<(), String> {
    match report::build(&[]) {
        Err(CliError::Usage(_)) | Err(CliError::SchemaMismatch(_)) => Ok(()),
        Err(e) => Err(format!("wrong error: {e}")),
        Ok(_) => Err("empty report accepted".into()),
    }
}

fn report_mixed_versions() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = Config::parse(DIMENSION_CONFIG).map_err(|e| e.to_string())?;
    let mut r = run_config(&cfg).map_err(|e| e.to_string())?;
    let good = dir.path().join("a");
    r.persist(&good).map_err(|e| e.to_string())?;
    r.schema_version = SCHEMA_VERSION + 1;
    let bad = dir.path().join("b");
    r.persist(&bad).map_err(|e| e.to_string())?;
    let paths = [good.with_extension("json"), bad.with_extension("json")];
    match report::build(&paths) {
        Err(CliError::SchemaMismatch(m)) if m.contains(&(SCHEMA_VERSION + 1).to_string()) => Ok(()),
        Err(e) => Err(format!("wrong error: {e}")),
        Ok(_) => Err("mixed versions accepted".into()),
    }
}

fn catalog_contents() -> Result<(), String> {
    let c = catalog();
    let systems = c["systems"].as_array().ok_or("no systems")?;
    for id in ["doubling", "cat", "rotation:golden", "rotation:liouville", "mp:<s>"] {
        let e = systems.iter().find(|s| s["id"] == id).ok_or(format!("{id} missing"))?;
        if !e["mixing_class"].is_string() {
            return Err(format!("{id} has no mixing class"));
        }
        if id == "mp:<s>" && !e["caveat"].is_string() {
            return Err("MP entry has no float caveat".into());
        }
    }
    Ok(())
}

pub fn run() -> Vec<CaseResult> {
    let mut out = hitlab::selftest::run();
    out.push(case("cli/delegation", delegation));
    out.push(case("cli/determinism", determinism));
    out.push(case("cli/ladder-validation", ladder_validation));
    out.push(case("cli/report-empty", report_empty));
    out.push(case("cli/report-mixed-versions", report_mixed_versions));
    out.push(case("cli/catalog", catalog_contents));
    out
}
