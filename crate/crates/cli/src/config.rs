//! Experiment configuration files (TOML).

use std::path::Path;

use hitlab::observables::RadiusLadder;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Dimension,
    Hitting,
    BorelCantelli,
    Correlation,
    IntersectionBound,
    ReturnStats,
    Observed,
    FlowAnalogue,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Dimension => "dimension",
            Kind::Hitting => "hitting",
            Kind::BorelCantelli => "borel-cantelli",
            Kind::Correlation => "correlation",
            Kind::IntersectionBound => "intersection-bound",
            Kind::ReturnStats => "return-stats",
            Kind::Observed => "observed",
            Kind::FlowAnalogue => "flow-analogue",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub kind: Kind,
    pub system: String,
    pub seed: Option<u64>,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
    /// Base path of the result files; `.json` and `.csv` are appended.
    #[serde(default, skip_serializing)]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<DimensionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hitting: Option<HittingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub borel_cantelli: Option<BorelCantelliSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intersection_bound: Option<IntersectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_stats: Option<ReturnSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<ObservedSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_analogue: Option<FlowSection>,
}

fn default_precision() -> u32 {
    512
}
fn default_level() -> f64 {
    0.95
}
fn default_measure_samples() -> usize {
    1_000_000
}

/// Exactly one of `dyadic`, `half-dyadic`, `radii`.
#[derive(Clone, Debug, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct LadderSpec {
    /// `[k0, k1]`: radii `2^-k` for `k0 <= k <= k1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dyadic: Option<[u32; 2]>,
    /// `[k0, k1]`: radii `2^-(m/2)` for `2 k0 <= m <= 2 k1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_dyadic: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Gap constant `c` in `r_{k+1} > c r_k`, for explicit radii.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_index: Option<usize>,
}

impl LadderSpec {
    pub fn dyadic(k0: u32, k1: u32) -> Self {
        LadderSpec {
            dyadic: Some([k0, k1]),
            ..Default::default()
        }
    }

    pub fn build(&self, field: &str) -> Result<RadiusLadder, CliError> {
        let given = [self.dyadic.is_some(), self.half_dyadic.is_some(), self.radii.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(CliError::config(field, "give exactly one of dyadic, half-dyadic, radii"));
        }
        let built = if let Some([a, b]) = self.dyadic {
            RadiusLadder::dyadic(a, b)
        } else if let Some([a, b]) = self.half_dyadic {
            RadiusLadder::half_dyadic(a, b)
        } else {
            let radii = self.radii.clone().unwrap_or_default();
            let gap = self.gap.ok_or_else(|| CliError::config(&format!("{field}.gap"), "explicit radii need a gap constant"))?;
            RadiusLadder::with_first_index(radii, gap, self.first_index.unwrap_or(0))
        };
        built.map_err(|e| CliError::config(field, e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DimensionSection {
    pub observable: String,
    pub ladder: LadderSpec,
    #[serde(default = "default_measure_samples")]
    pub samples: usize,
    #[serde(default = "default_dimension_window")]
    pub window: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub force_monte_carlo: bool,
}

fn default_dimension_window() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct HittingSection {
    pub observable: String,
    pub ladder: LadderSpec,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Defaults to `50 / mu(S_r)` at the smallest rung.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default = "default_measure_samples")]
    pub dimension_samples: usize,
}

fn default_points() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BorelCantelliSection {
    pub observable: String,
    pub beta: f64,
    pub k_max: u64,
    #[serde(default = "default_bc_points")]
    pub points: usize,
    /// Upper sublevel dimension bounding `beta`; estimated on `2^-3..2^-12`
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_upper: Option<f64>,
    #[serde(default = "default_measure_samples")]
    pub measure_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
}

fn default_bc_points() -> usize {
    100
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingKind {
    #[default]
    Iid,
    Stratified,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CorrelationSection {
    pub phi: String,
    pub psi: String,
    /// Lags `0..=max-lag` unless `lags` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<u64>>,
    #[serde(default = "default_max_lag")]
    pub max_lag: u64,
    #[serde(default = "default_corr_samples")]
    pub samples: usize,
    #[serde(default)]
    pub sampling: SamplingKind,
    #[serde(default = "default_shifts")]
    pub shifts: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_max_lag() -> u64 {
    16
}
fn default_corr_samples() -> usize {
    1 << 15
}
fn default_shifts() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IntersectionSection {
    pub observable: String,
    pub ladder: LadderSpec,
    /// Explicit `[k, j]` pairs (absolute ladder indices).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
    /// Number of random pairs with `k - j >= min-gap` when `pairs` is absent.
    #[serde(default = "default_random_pairs")]
    pub random_pairs: usize,
    #[serde(default = "default_min_gap")]
    pub min_gap: usize,
    /// Correlation estimate feeding the decay envelope.
    pub correlation: CorrelationSection,
    #[serde(default = "default_measure_samples")]
    pub samples: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_random_pairs() -> usize {
    20
}
fn default_min_gap() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ReturnSection {
    pub observable: String,
    /// One or more target radii.
    pub radii: Vec<f64>,
    #[serde(default = "default_return_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    /// Defaults to `100 / mu(S_r)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(default = "default_l")]
    pub l: Vec<f64>,
    #[serde(default = "default_measure_samples")]
    pub measure_samples: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_return_samples() -> usize {
    10_000
}
fn default_l() -> Vec<f64> {
    vec![20.0]
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ObservedSection {
    pub map: String,
    /// Base point `x0`; the target is the ball around `F(x0)`.
    pub base_point: Vec<f64>,
    /// Ladder of the hitting run; may be omitted when `points = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderSpec>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default = "default_measure_samples")]
    pub dimension_samples: usize,
    /// Randomised comparisons against a direct evaluation of `|F(T^n x) - F(x0)|`.
    #[serde(default = "default_equality_checks")]
    pub equality_checks: usize,
    #[serde(default = "default_rank_points")]
    pub rank_points: usize,
    #[serde(default = "default_rank_ladder")]
    pub rank_ladder: LadderSpec,
    #[serde(default = "default_rank_samples")]
    pub rank_samples: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_equality_checks() -> usize {
    1000
}
fn default_rank_points() -> usize {
    50
}
fn default_rank_ladder() -> LadderSpec {
    LadderSpec::dyadic(2, 6)
}
fn default_rank_samples() -> usize {
    100_000
}
fn default_fd_step() -> f64 {
    hitlab::observed::DEFAULT_FD_STEP
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FlowSection {
    /// 1-based projected coordinates.
    pub coords: Vec<usize>,
    pub target: Vec<f64>,
    #[serde(default = "default_flow_points")]
    pub points: usize,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_per_decade")]
    pub per_decade: u32,
    /// Fit over `n >= fit-from`; the largest decade when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_from: Option<u64>,
}

fn default_flow_points() -> usize {
    100
}
fn default_n_max() -> u64 {
    1_000_000
}
fn default_per_decade() -> u32 {
    10
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            CliError::config(&field_of(&e, text), message)
        })?;
        cfg.check_section()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn check_section(&self) -> Result<(), CliError> {
        let present = [
            (Kind::Dimension, self.dimension.is_some()),
            (Kind::Hitting, self.hitting.is_some()),
            (Kind::BorelCantelli, self.borel_cantelli.is_some()),
            (Kind::Correlation, self.correlation.is_some()),
            (Kind::IntersectionBound, self.intersection_bound.is_some()),
            (Kind::ReturnStats, self.return_stats.is_some()),
            (Kind::Observed, self.observed.is_some()),
            (Kind::FlowAnalogue, self.flow_analogue.is_some()),
        ];
        for (kind, has) in present {
            if kind == self.kind && !has {
                return Err(CliError::config(kind.name(), "missing section for the selected kind"));
            }
            if kind != self.kind && has {
                return Err(CliError::config(kind.name(), format!("section does not match kind {}", self.kind.name())));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::config("seed", "a seed is required (config or --seed)"))
    }
}

/// Dotted key path of the table containing the error span, best effort.
fn field_of(e: &toml::de::Error, text: &str) -> String {
    let Some(span) = e.span() else {
        return String::new();
    };
    let before = &text[..span.start.min(text.len())];
    let table = before
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')))
        .map(|t| t.trim_matches(|c| c == '[' || c == ']').to_string());
    let key = text[span.start.min(text.len())..]
        .split(['=', '\n'])
        .next()
        .map(|k| k.trim().to_string())
        .filter(|k| !k.is_empty() && !k.starts_with('['));
    match (table, key) {
        (Some(t), Some(k)) => format!("{t}.{k}"),
        (Some(t), None) => t,
        (None, Some(k)) => k,
        (None, None) => String::new(),
    }
}
