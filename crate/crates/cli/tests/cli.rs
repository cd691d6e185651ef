use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hitlab_cli::config::Config;
use hitlab_cli::report;
use serde_json::Value;

const DIMENSION: &str = r#"
kind = "dimension"
system = "doubling"
seed = 3

[dimension]
observable = "dist:0.375"
ladder = { dyadic = [3, 10] }
"#;

const HITTING: &str = r#"
kind = "hitting"
system = "doubling"
seed = 5

[hitting]
observable = "dist:0.375"
ladder = { dyadic = [3, 10] }
points = 20
cap = 1_000_000
"#;

fn hitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitlab")).args(args).env_remove("HITLAB_WORKERS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn error_record(out: &Output) -> Value {
    let err = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str::<Value>(err.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {err}"))["error"].clone()
}

#[test]
fn catalog_lists_systems() {
    let out = hitlab(&["catalog"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = v["systems"].as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap()).collect();
    for id in ["doubling", "cat", "rotation:golden", "rotation:liouville", "mp:<s>"] {
        assert!(ids.contains(&id), "{id}");
    }
}

#[test]
fn run_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dim.toml", DIMENSION);
    let out = hitlab(&["run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("dim.result.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["config"]["seed"], 3);
    assert_eq!(json["engine"]["exact"], true);
    let csv = std::fs::read_to_string(dir.path().join("dim.result.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
    // Nothing else is left behind in the output directory.
    let mut names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["dim.result.csv", "dim.result.json", "dim.toml"]);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HITTING);
    let out = hitlab(&["--seed", "99", "--workers", "2", "--precision-bits", "256", "run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report::load(&dir.path().join("h.result.json")).unwrap();
    assert_eq!(r.config["seed"], 99);
    assert_eq!(r.engine["precision_bits"], 256);
}

#[test]
fn worker_count_does_not_change_data() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.toml", HITTING);
    let b = write(dir.path(), "b.toml", HITTING);
    assert!(hitlab(&["--workers", "1", "run", a.to_str().unwrap()]).status.success());
    assert!(hitlab(&["--workers", "4", "run", b.to_str().unwrap()]).status.success());
    let ra = report::load(&dir.path().join("a.result.json")).unwrap();
    let rb = report::load(&dir.path().join("b.result.json")).unwrap();
    assert_eq!(ra.data_section(), rb.data_section());
    assert!(!ra.csv.is_empty());
}

#[test]
fn unknown_field_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &DIMENSION.replace("observable", "observabel"));
    let out = hitlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_record(&out);
    assert_eq!(e["kind"], "config-invalid");
    assert!(e["field"].as_str().unwrap().starts_with("dimension"), "{e}");
    assert!(!dir.path().join("bad.result.json").exists());
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "noseed.toml", &DIMENSION.replace("seed = 3\n", ""));
    let out = hitlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["field"], "seed");
    // A seed on the command line completes the config.
    assert!(hitlab(&["--seed", "1", "run", cfg.to_str().unwrap()]).status.success());
}

#[test]
fn gap_violation_names_the_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let text = DIMENSION.replace("{ dyadic = [3, 10] }", "{ radii = [0.1, 0.01], gap = 0.5 }");
    let cfg = write(dir.path(), "gap.toml", &text);
    let out = hitlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["field"], "dimension.ladder");
}

#[test]
fn unknown_system_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sys.toml", &DIMENSION.replace("\"doubling\"", "\"tripling\""));
    let out = hitlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["field"], "system");
}

#[test]
fn section_must_match_kind() {
    let text = DIMENSION.replace("[dimension]", "[hitting]");
    match Config::parse(&text) {
        Err(e) => assert!(e.to_string().contains("dimension") || e.to_string().contains("hitting"), "{e}"),
        Ok(_) => panic!("mismatched section accepted"),
    }
}

#[test]
fn report_needs_input() {
    let out = hitlab(&["report"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["kind"], "usage");
}

#[test]
fn report_writes_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HITTING);
    assert!(hitlab(&["run", cfg.to_str().unwrap()]).status.success());
    let md = dir.path().join("report.md");
    let out = hitlab(&["report", dir.path().join("h.result.json").to_str().unwrap(), "--out", md.to_str().unwrap()]);
    assert!(out.status.success());
    let table = std::fs::read_to_string(&md).unwrap();
    assert!(table.contains("| h.result.json | hitting | doubling |"), "{table}");
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn report_rejects_other_versions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "h.toml", HITTING);
    assert!(hitlab(&["run", cfg.to_str().unwrap()]).status.success());
    let p = dir.path().join("h.result.json");
    let text = std::fs::read_to_string(&p).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 7");
    std::fs::write(&p, text).unwrap();
    let out = hitlab(&["report", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_record(&out);
    assert_eq!(e["kind"], "schema-mismatch");
    assert!(e["message"].as_str().unwrap().contains('7'));
}

#[test]
fn selftest_passes() {
    let out = hitlab(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("PASS cli/determinism"));
}
