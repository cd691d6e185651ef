//! Dispatch from a config to the library operations, and result files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hitlab::flow::{approach_series, log_grid};
use hitlab::hitting::{
    bc_counter_series, default_cap, hitting_run, summarize, BcCounter, BcPlan, HittingRecord, MeasureSource, Tau,
};
use hitlab::mixing::{estimate_correlation, fit_decay, intersection_bound_check, CorrelationSeries, DecayFit, Sampling, TestFunction};
use hitlab::observables::{estimate_dimension, DimensionOptions, Observable};
use hitlab::observed::{jacobian_rank, observed_hitting_time, pushforward_dimension, ObservationMap};
use hitlab::par::try_map_indexed;
use hitlab::point::{PhasePoint, MAX_DIM};
use hitlab::returns::{
    curve_from_sample, default_t_grid, exp_law_distance, indicator_from_sample, jump_clusters, kac_check, return_sample,
    ReturnOptions,
};
use hitlab::rng::{derive_seed, stream_rng};
use hitlab::stats::{mean, median, quantile};
use hitlab::system::{Orbit, PointSource, SystemSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Config, CorrelationSection, Kind, SamplingKind};
use crate::error::{at, CliError};

pub const SCHEMA_VERSION: u32 = 1;

// Seed labels for the streams the runner derives from the master seed.
const DIMENSION_STREAM: u64 = 0x100;
const MEASURE_STREAM: u64 = 0x101;
const PAIR_STREAM: u64 = 0x102;
const CHECK_STREAM: u64 = 0x103;
const EQUALITY_STREAM: u64 = 0x104;
const RANK_STREAM: u64 = 0x105;
const RETURN_STREAM: u64 = 0x106;
const RANK_SAMPLE_STREAM: u64 = 0x107;

/// Cap for the randomised observed-equality comparisons.
const EQUALITY_CAP: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub kind: String,
    pub config: Value,
    pub engine: Value,
    pub summary: Value,
    pub data: Value,
    pub wall_time_seconds: f64,
    #[serde(skip)]
    pub csv: String,
}

impl ExperimentResult {
    /// Everything except timing: the part covered by the determinism contract.
    pub fn data_section(&self) -> String {
        let mut s = serde_json::to_string(&self.summary).expect("serializable");
        s.push('\n');
        s.push_str(&serde_json::to_string(&self.data).expect("serializable"));
        s.push('\n');
        s.push_str(&self.csv);
        s
    }

    /// Writes `<base>.json` and `<base>.csv`, each through a temporary file
    /// renamed into place.
    pub fn persist(&self, base: &Path) -> Result<(PathBuf, PathBuf), CliError> {
        let json_path = with_suffix(base, "json");
        let csv_path = with_suffix(base, "csv");
        let json = serde_json::to_string_pretty(self).expect("serializable");
        write_atomic(&json_path, json.as_bytes())?;
        write_atomic(&csv_path, self.csv.as_bytes())?;
        Ok((json_path, csv_path))
    }
}

pub fn with_suffix(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

struct Outcome {
    summary: Value,
    data: Value,
    csv: String,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn system(cfg: &Config) -> Result<SystemSpec, CliError> {
    at("system", SystemSpec::from_id(&cfg.system, cfg.precision_bits))
}

fn observable(field: &str, text: &str, sys: &SystemSpec) -> Result<Observable, CliError> {
    let f = at(field, Observable::parse(text))?;
    at(field, f.validate(sys.dimension()))?;
    Ok(f)
}

fn engine(sys: &SystemSpec) -> Value {
    json!({
        "system": sys.id(),
        "dimension": sys.dimension(),
        "engine": format!("{:?}", sys.default_engine()),
        "exact": !sys.is_float_engine(),
        "precision_bits": sys.precision_bits(),
        "mixing_class": sys.mixing_class().to_string(),
        "caveat": sys.is_float_engine().then_some("float engine: orbits are double precision and not shadowed"),
    })
}

/// Runs `cfg` on the current rayon pool.
pub fn run_config(cfg: &Config) -> Result<ExperimentResult, CliError> {
    let start = Instant::now();
    let sys = system(cfg)?;
    let seed = cfg.seed()?;
    let out = match cfg.kind {
        Kind::Dimension => dimension(cfg, &sys, seed)?,
        Kind::Hitting => hitting(cfg, &sys, seed)?,
        Kind::BorelCantelli => borel_cantelli(cfg, &sys, seed)?,
        Kind::Correlation => correlation(cfg, &sys, seed)?,
        Kind::IntersectionBound => intersection(cfg, &sys, seed)?,
        Kind::ReturnStats => returns(cfg, &sys, seed)?,
        Kind::Observed => observed(cfg, &sys, seed)?,
        Kind::FlowAnalogue => flow(cfg, &sys, seed)?,
    };
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        kind: cfg.kind.name().to_string(),
        config: to_value(cfg),
        engine: engine(&sys),
        summary: out.summary,
        data: out.data,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        csv: out.csv,
    })
}

fn dimension(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.dimension.as_ref().expect("checked");
    let f = observable("dimension.observable", &sec.observable, sys)?;
    let ladder = sec.ladder.build("dimension.ladder")?;
    let opts = DimensionOptions {
        window: sec.window,
        level: sec.level,
        force_monte_carlo: sec.force_monte_carlo,
    };
    let est = estimate_dimension(&f, &ladder, sys, seed, sec.samples, &opts)?;
    let mut csv = String::from("r,measure,half_width,samples,exact\n");
    for (r, m) in est.radii.iter().zip(&est.measures) {
        let _ = writeln!(csv, "{},{},{},{},{}", num(*r), num(m.estimate), num(m.half_width), m.samples, m.exact);
    }
    Ok(Outcome {
        summary: json!({
            "observable": f.to_string(),
            "slope": est.slope,
            "slope_stderr": est.slope_stderr,
            "d_upper": est.d_upper,
            "d_lower": est.d_lower,
            "window": est.window,
        }),
        data: to_value(&est),
        csv,
    })
}

fn records_csv(records: &[HittingRecord]) -> String {
    let mut csv = String::from("point_id,r,tau,censored\n");
    for r in records {
        let _ = writeln!(csv, "{},{},{},{}", r.point_id, num(r.radius), r.tau.value(), r.tau.is_censored());
    }
    csv
}

/// Per-point fits without the raw pairs (those are in the CSV).
fn point_fits(estimates: &[Option<hitlab::hitting::ExponentEstimate>]) -> Value {
    Value::Array(
        estimates
            .iter()
            .map(|e| match e {
                Some(e) => json!({
                    "exponent": e.exponent,
                    "r_upper": e.r_upper,
                    "r_lower": e.r_lower,
                    "window_width": e.window_width,
                    "censor_fraction": e.censor_fraction,
                }),
                None => Value::Null,
            })
            .collect(),
    )
}

fn hitting(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.hitting.as_ref().expect("checked");
    let f = observable("hitting.observable", &sec.observable, sys)?;
    let ladder = sec.ladder.build("hitting.ladder")?;
    let dims = estimate_dimension(
        &f,
        &ladder,
        sys,
        derive_seed(seed, DIMENSION_STREAM),
        sec.dimension_samples,
        &DimensionOptions::default(),
    )?;
    let smallest = dims.measures.last().map(|m| m.estimate).unwrap_or(0.0);
    let cap = match sec.cap {
        Some(c) => c,
        None if smallest > 0.0 => default_cap(smallest),
        None => return Err(CliError::config("hitting.cap", "smallest rung has zero estimated measure; give a cap")),
    };
    let run = hitting_run(sys, &f, &ladder, cap, seed, sec.points, sec.window)?;
    let s = summarize(&run.estimates);
    let censored = run.records.iter().filter(|r| r.tau.is_censored()).count();
    Ok(Outcome {
        summary: json!({
            "observable": f.to_string(),
            "exponents": s,
            "d_upper": dims.d_upper,
            "d_lower": dims.d_lower,
            "d_slope": dims.slope,
            "cap": cap,
            "censored_records": censored,
            "window_width": run.estimates.iter().flatten().next().map(|e| e.window_width),
        }),
        data: json!({ "points": point_fits(&run.estimates), "dimension": dims }),
        csv: records_csv(&run.records),
    })
}

fn borel_cantelli(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.borel_cantelli.as_ref().expect("checked");
    let f = observable("borel-cantelli.observable", &sec.observable, sys)?;
    let d_upper = match sec.d_upper {
        Some(d) => d,
        None => {
            let ladder = at("borel-cantelli", hitlab::observables::RadiusLadder::dyadic(3, 12))?;
            let opts = DimensionOptions::default();
            estimate_dimension(&f, &ladder, sys, derive_seed(seed, DIMENSION_STREAM), sec.measure_samples, &opts)?.d_upper
        }
    };
    let source = if f.exact_measure(sys, 0.5).is_some() {
        MeasureSource::Exact
    } else {
        MeasureSource::MonteCarlo {
            seed: derive_seed(seed, MEASURE_STREAM),
            samples: sec.measure_samples,
        }
    };
    let mut plan = BcPlan::new(sys, &f, sec.beta, sec.k_max, d_upper, source)?;
    if let Some(cp) = &sec.checkpoints {
        plan = plan.with_checkpoints(cp.clone());
    }
    let starts = PointSource::separate(sys, seed);
    let series: Vec<Vec<BcCounter>> = try_map_indexed(sec.points, |i| bc_counter_series(sys, &starts.point(i)?, &f, &plan))?;
    let mut csv = String::from("point_id,k,z,expected,ratio\n");
    for (i, s) in series.iter().enumerate() {
        for c in s {
            let _ = writeln!(csv, "{i},{},{},{},{}", c.k, c.z, num(c.expected), num(c.ratio));
        }
    }
    let finals: Vec<f64> = series.iter().filter_map(|s| s.last().map(|c| c.ratio)).collect();
    let in_band = finals.iter().filter(|r| (0.8..=1.2).contains(*r)).count();
    Ok(Outcome {
        summary: json!({
            "observable": f.to_string(),
            "beta": sec.beta,
            "k_max": sec.k_max,
            "d_upper": d_upper,
            "measure_source": source,
            "expected_at_k_max": plan.expected(sec.k_max),
            "ratio_median": median(&finals),
            "ratio_mean": mean(&finals),
            "ratio_min": finals.iter().copied().fold(f64::INFINITY, f64::min),
            "ratio_max": finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "fraction_in_band": in_band as f64 / finals.len().max(1) as f64,
        }),
        data: json!({ "series": series }),
        csv,
    })
}

fn correlation_series(
    field: &str,
    sec: &CorrelationSection,
    sys: &SystemSpec,
    seed: u64,
) -> Result<CorrelationSeries, CliError> {
    let phi = at(&format!("{field}.phi"), TestFunction::parse(&sec.phi))?;
    let psi = at(&format!("{field}.psi"), TestFunction::parse(&sec.psi))?;
    let lags = sec.lags.clone().unwrap_or_else(|| (0..=sec.max_lag).collect());
    let sampling = match sec.sampling {
        SamplingKind::Iid => Sampling::Iid,
        SamplingKind::Stratified => Sampling::Stratified { shifts: sec.shifts },
    };
    at(field, estimate_correlation(sys, &phi, &psi, &lags, seed, sec.samples, sampling, sec.level))
}

fn fit_summary(fit: &Result<DecayFit, hitlab::Error>) -> Value {
    match fit {
        Ok(f) => json!({ "class": f.class, "lags_used": f.lags_used, "residual": f.residual, "rival_residual": f.rival_residual }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn correlation(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.correlation.as_ref().expect("checked");
    let series = correlation_series("correlation", sec, sys, seed)?;
    let fit = fit_decay(&series);
    let mut csv = String::from("lag,value,signed,half_width\n");
    for i in 0..series.lags.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            series.lags[i],
            num(series.values[i]),
            num(series.signed[i]),
            num(series.half_widths[i])
        );
    }
    Ok(Outcome {
        summary: json!({ "usable_lags": series.usable().len(), "fit": fit_summary(&fit) }),
        data: json!({ "series": series, "fit": fit.as_ref().ok() }),
        csv,
    })
}

fn intersection(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.intersection_bound.as_ref().expect("checked");
    let f = observable("intersection-bound.observable", &sec.observable, sys)?;
    let ladder = sec.ladder.build("intersection-bound.ladder")?;
    let series = correlation_series("intersection-bound.correlation", &sec.correlation, sys, seed)?;
    let fit = fit_decay(&series)?;
    let first = ladder.first_index() + 1;
    let last = ladder.first_index() + ladder.len() - 1;
    let pairs: Vec<[usize; 2]> = match &sec.pairs {
        Some(p) => p.clone(),
        None => {
            if last < first + sec.min_gap {
                return Err(CliError::config("intersection-bound.min-gap", "ladder too short for the requested gap"));
            }
            let mut rng = stream_rng(derive_seed(seed, PAIR_STREAM), 0);
            (0..sec.random_pairs)
                .map(|_| {
                    let j = rng.gen_range(first..=last - sec.min_gap);
                    let k = rng.gen_range(j + sec.min_gap..=last);
                    [k, j]
                })
                .collect()
        }
    };
    let check_seed = derive_seed(seed, CHECK_STREAM);
    let checks = pairs
        .iter()
        .enumerate()
        .map(|(i, &[k, j])| {
            intersection_bound_check(sys, &f, &ladder, k, j, &fit, derive_seed(check_seed, i as u64), sec.samples, sec.level)
                .map_err(|e| at::<()>("intersection-bound.pairs", Err(e)).unwrap_err())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from("k,j,lhs,lhs_half_width,rhs,correlation_term,holds\n");
    for c in &checks {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            c.k,
            c.j,
            num(c.lhs.estimate),
            num(c.lhs.half_width),
            num(c.rhs),
            num(c.correlation_term),
            c.holds
        );
    }
    let holds = checks.iter().filter(|c| c.holds).count();
    Ok(Outcome {
        summary: json!({
            "observable": f.to_string(),
            "pairs": checks.len(),
            "holds": holds,
            "all_hold": holds == checks.len(),
            "fit": fit_summary(&Ok(fit.clone())),
        }),
        data: json!({ "series": series, "fit": fit, "checks": checks }),
        csv,
    })
}

fn returns(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.return_stats.as_ref().expect("checked");
    let f = observable("return-stats.observable", &sec.observable, sys)?;
    if sec.radii.is_empty() || sec.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(CliError::config("return-stats.radii", "need at least one positive radius"));
    }
    let grid = sec.t_grid.clone().unwrap_or_else(default_t_grid);
    let opts = ReturnOptions {
        cap: sec.cap,
        measure_samples: sec.measure_samples,
    };
    let stream = derive_seed(seed, RETURN_STREAM);
    let mut csv = String::from("r,t,g,censor_flag\n");
    let (mut summary, mut data) = (vec![], vec![]);
    for (i, &r) in sec.radii.iter().enumerate() {
        let sample = return_sample(sys, &f, r, derive_seed(stream, i as u64), sec.samples, &opts)?;
        let curve = at("return-stats.t-grid", curve_from_sample(&sample, &grid))?;
        let indicators = sec
            .l
            .iter()
            .map(|&l| at("return-stats.l", indicator_from_sample(&sample, l, sec.level)))
            .collect::<Result<Vec<_>, _>>()?;
        let kac = kac_check(&sample);
        for ((t, g), flag) in curve.t_grid.iter().zip(&curve.g).zip(&curve.censor_flags) {
            let _ = writeln!(csv, "{},{},{},{}", num(r), num(*t), num(*g), flag);
        }
        let distance = exp_law_distance(&curve);
        let clusters = jump_clusters(&curve);
        summary.push(json!({
            "radius": r,
            "measure": sample.measure,
            "exp_law_distance": distance,
            "jump_clusters": clusters,
            "kac": kac,
            "indicators": indicators,
            "direct_sampling": sample.direct_sampling,
        }));
        data.push(json!({ "radius": r, "curve": curve, "indicators": indicators, "kac": kac }));
    }
    Ok(Outcome {
        summary: json!({ "observable": f.to_string(), "radii": summary }),
        data: Value::Array(data),
        csv,
    })
}

/// First `n` with `|F(T^n x) - F(x0)| <= r`, evaluated without the
/// observable layer.
fn direct_observed_tau(sys: &SystemSpec, x: &PhasePoint, fx0: &[f64], map: &ObservationMap, r: f64, cap: u64) -> hitlab::Result<Tau> {
    let d = sys.dimension();
    let m = map.codomain_dim(d);
    let mut orbit = Orbit::new(sys, x)?;
    let (mut buf, mut img) = ([0.0; MAX_DIM], [0.0; MAX_DIM]);
    for n in 1..=cap {
        orbit.advance()?;
        orbit.write_f64(&mut buf);
        map.apply(&buf[..d], &mut img);
        if map.image_dist(&img[..m], fx0) <= r {
            return Ok(Tau::Hit(n));
        }
    }
    Ok(Tau::Censored(cap))
}

fn observed(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.observed.as_ref().expect("checked");
    let map = at("observed.map", ObservationMap::parse(&sec.map))?;
    let d = sys.dimension();
    at("observed.map", map.validate(d))?;
    if sec.base_point.len() != d {
        return Err(CliError::config("observed.base-point", format!("need {d} coordinates")));
    }
    let f = at("observed.base-point", Observable::pushforward_from(map.clone(), &sec.base_point))?;
    let rank_ladder = sec.rank_ladder.build("observed.rank-ladder")?;
    let ladder = match &sec.ladder {
        Some(l) => Some(l.build("observed.ladder")?),
        None if sec.points == 0 => None,
        None => return Err(CliError::config("observed.ladder", "a ladder is required when points > 0")),
    };

    // The hitting part; `points = 0` keeps only the equality and rank checks.
    let mut hitting = None;
    if let (Some(ladder), true) = (&ladder, sec.points > 0) {
        let dims = estimate_dimension(
            &f,
            ladder,
            sys,
            derive_seed(seed, DIMENSION_STREAM),
            sec.dimension_samples,
            &DimensionOptions::default(),
        )?;
        let smallest = dims.measures.last().map(|m| m.estimate).unwrap_or(0.0);
        let cap = match sec.cap {
            Some(c) => c,
            None if smallest > 0.0 => default_cap(smallest),
            None => return Err(CliError::config("observed.cap", "smallest rung has zero estimated measure; give a cap")),
        };
        let run = hitting_run(sys, &f, ladder, cap, seed, sec.points, sec.window)?;
        hitting = Some((dims, cap, run));
    }

    let eq_source = PointSource::separate(sys, derive_seed(seed, EQUALITY_STREAM));
    let radii = ladder.as_ref().unwrap_or(&rank_ladder).radii();
    let m = map.codomain_dim(d);
    let mismatches: Vec<usize> = try_map_indexed(sec.equality_checks, |i| {
        let x = eq_source.point(2 * i)?;
        let x0 = eq_source.point(2 * i + 1)?;
        let r = radii[i % radii.len()];
        let a = observed_hitting_time(sys, &x, &x0, &map, r, EQUALITY_CAP)?;
        let mut fx0 = [0.0; MAX_DIM];
        map.apply(&x0.to_f64s(), &mut fx0);
        let b = direct_observed_tau(sys, &x, &fx0[..m], &map, r, EQUALITY_CAP)?;
        Ok::<_, hitlab::Error>(usize::from(a.tau != b))
    })?;
    let mismatches: usize = mismatches.iter().sum();

    let rank_source = PointSource::separate(sys, derive_seed(seed, RANK_STREAM));
    let rank_seed = derive_seed(seed, RANK_SAMPLE_STREAM);
    let rank_rows: Vec<(usize, f64)> = try_map_indexed(sec.rank_points, |i| {
        let x0 = rank_source.point(i)?;
        let rank = jacobian_rank(&map, &x0.to_f64s(), sec.fd_step)?.rank;
        let opts = DimensionOptions::default();
        let dim = pushforward_dimension(sys, &map, &x0, &rank_ladder, derive_seed(rank_seed, i as u64), sec.rank_samples, &opts)?;
        Ok::<_, hitlab::Error>((rank, dim.slope))
    })?;
    let agree = rank_rows.iter().filter(|(r, s)| (s - *r as f64).abs() <= 0.25).count();

    let mut summary = json!({
        "map": map.to_string(),
        "base_point": sec.base_point,
        "equality_checks": sec.equality_checks,
        "equality_mismatches": mismatches,
        "rank_points": rank_rows.len(),
        "rank_agreement": agree as f64 / rank_rows.len().max(1) as f64,
    });
    let mut data = json!({ "rank_vs_slope": rank_rows });
    let mut csv = String::new();
    if let Some((dims, cap, run)) = hitting {
        summary["exponents"] = to_value(&summarize(&run.estimates));
        summary["d_upper"] = json!(dims.d_upper);
        summary["d_lower"] = json!(dims.d_lower);
        summary["d_slope"] = json!(dims.slope);
        summary["cap"] = json!(cap);
        data["points"] = point_fits(&run.estimates);
        data["dimension"] = to_value(&dims);
        csv = records_csv(&run.records);
    }
    Ok(Outcome { summary, data, csv })
}

fn flow(cfg: &Config, sys: &SystemSpec, seed: u64) -> Result<Outcome, CliError> {
    let sec = cfg.flow_analogue.as_ref().expect("checked");
    let d = sys.dimension();
    if sec.coords.is_empty() || sec.coords.iter().any(|&c| c == 0 || c > d) {
        return Err(CliError::config("flow-analogue.coords", format!("coordinates must lie in 1..={d}")));
    }
    let coords: Vec<usize> = sec.coords.iter().map(|c| c - 1).collect();
    if sec.target.len() != coords.len() {
        return Err(CliError::config("flow-analogue.target", "one target value per projected coordinate"));
    }
    if sec.n_max == 0 || sec.per_decade == 0 {
        return Err(CliError::config("flow-analogue.n-max", "n-max and per-decade must be positive"));
    }
    let grid = log_grid(sec.n_max, sec.per_decade);
    let series = try_map_indexed(sec.points, |i| {
        let x = sys.lebesgue_point(seed, i as u64)?;
        approach_series(sys, &coords, &x, &sec.target, &grid, sec.fit_from)
    })
    .map_err(|e| at::<()>("flow-analogue", Err(e)).unwrap_err())?;
    let mut csv = String::from("point_id,n,d_n\n");
    for (i, s) in series.iter().enumerate() {
        for (n, dn) in s.n_grid.iter().zip(&s.d_n) {
            let _ = writeln!(csv, "{i},{n},{}", num(*dn));
        }
    }
    let ex: Vec<f64> = series.iter().filter_map(|s| s.exponent).collect();
    let tmax: Vec<f64> = series.iter().map(|s| s.tail_max_ratio).collect();
    let tmed: Vec<f64> = series.iter().map(|s| s.tail_median_ratio).collect();
    let points: Vec<Value> = series
        .iter()
        .map(|s| json!({ "exponent": s.exponent, "tail_max_ratio": s.tail_max_ratio, "tail_median_ratio": s.tail_median_ratio }))
        .collect();
    Ok(Outcome {
        summary: json!({
            "coords": sec.coords,
            "target": sec.target,
            "fit_from": series.first().map(|s| s.fit_from),
            "predicted": 1.0 / coords.len() as f64,
            "median_exponent": median(&ex),
            "q1_exponent": quantile(&ex, 0.25),
            "q3_exponent": quantile(&ex, 0.75),
            "median_tail_max_ratio": median(&tmax),
            "median_tail_median_ratio": median(&tmed),
        }),
        data: json!({ "n_grid": grid, "points": points }),
        csv,
    })
}
