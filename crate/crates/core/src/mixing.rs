//! Correlation estimates `|E[phi(T^n x) psi(x)] - E phi E psi|`, decay-rate
//! fits, and the numerical check of the two-set intersection bound.

use std::f64::consts::PI;
use std::fmt;

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::{estimate_measures, mollifier, MeasureEstimate, Observable, RadiusLadder};
use crate::par;
use crate::point::{torus_dist, MAX_DIM};
use crate::rng::{derive_seed, purpose, stream_rng};
use crate::stats::{fit_line, normal_quantile, student_quantile};
use crate::system::{Orbit, PointSource, SystemSpec};

/// Bounded Lipschitz test functions for correlation estimates.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Observable(Observable),
    /// `cos(2 pi freq x_coord)`, coordinate 0-based.
    Cosine { coord: usize, freq: u32 },
    /// Tent `max(0, 1 - |x - center| / width)` in the torus metric.
    Hat { center: Vec<f64>, width: f64 },
    Mollifier { f: Observable, r_prev: f64, r: f64 },
    Constant(f64),
}

/// `sup |phi| + Lip(phi)`, kept as separate terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipNorm {
    pub sup: f64,
    pub lipschitz: f64,
}

impl LipNorm {
    pub fn total(&self) -> f64 {
        self.sup + self.lipschitz
    }
}

impl TestFunction {
    /// `obs:<rule>`, `cos:<coord>:<freq>`, `hat:<center>:<width>`,
    /// `moll:<r_prev>:<r>:<rule>`, `const:<c>`. Coordinates are 1-based.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |reason: &str| Error::parse("test function", text, reason);
        let (head, rest) = text.split_once(':').ok_or_else(|| bad("expected <kind>:<args>"))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        match head {
            "obs" => Ok(TestFunction::Observable(Observable::parse(rest)?)),
            "cos" => {
                let (c, k) = rest.split_once(':').ok_or_else(|| bad("expected cos:<coord>:<freq>"))?;
                let coord: usize = c.trim().parse().map_err(|_| bad("bad coordinate"))?;
                let freq: u32 = k.trim().parse().map_err(|_| bad("bad frequency"))?;
                if coord == 0 {
                    return Err(bad("coordinates are 1-based"));
                }
                Ok(TestFunction::Cosine { coord: coord - 1, freq })
            }
            "hat" => {
                let (c, w) = rest.rsplit_once(':').ok_or_else(|| bad("expected hat:<center>:<width>"))?;
                let center = crate::observed::parse_floats(c).ok_or_else(|| bad("bad center"))?;
                let width = num(w)?;
                if !(width > 0.0) || center.is_empty() || center.len() > MAX_DIM {
                    return Err(bad("width must be positive"));
                }
                Ok(TestFunction::Hat { center, width })
            }
            "moll" => {
                let mut parts = rest.splitn(3, ':');
                let r_prev = num(parts.next().unwrap_or(""))?;
                let r = num(parts.next().unwrap_or(""))?;
                let f = Observable::parse(parts.next().ok_or_else(|| bad("missing rule"))?)?;
                if !(0.0 < r && r < r_prev) {
                    return Err(bad("need 0 < r < r_prev"));
                }
                Ok(TestFunction::Mollifier { f, r_prev, r })
            }
            "const" => Ok(TestFunction::Constant(num(rest)?)),
            _ => Err(bad("unknown test function")),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Observable(f) => f.eval(x),
            TestFunction::Cosine { coord, freq } => (2.0 * PI * *freq as f64 * x[*coord]).cos(),
            TestFunction::Hat { center, width } => (1.0 - torus_dist(x, center) / width).max(0.0),
            TestFunction::Mollifier { f, r_prev, r } => mollifier(f.eval(x), *r_prev, *r),
            TestFunction::Constant(c) => *c,
        }
    }

    pub fn norm(&self, dim: usize) -> LipNorm {
        let (sup, lipschitz) = match self {
            TestFunction::Observable(f) => (f.sup_bound(dim), f.lipschitz()),
            TestFunction::Cosine { freq, .. } => (1.0, 2.0 * PI * *freq as f64),
            TestFunction::Hat { width, .. } => (1.0, 1.0 / width),
            TestFunction::Mollifier { f, r_prev, r } => (1.0, f.lipschitz() / (r_prev - r)),
            TestFunction::Constant(c) => (c.abs(), 0.0),
        };
        LipNorm { sup, lipschitz }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let ok = match self {
            TestFunction::Observable(f) | TestFunction::Mollifier { f, .. } => return f.validate(dim),
            TestFunction::Cosine { coord, .. } => *coord < dim,
            TestFunction::Hat { center, .. } => center.len() == dim,
            TestFunction::Constant(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("test function {self} does not fit dimension {dim}")))
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Observable(o) => write!(f, "obs:{o}"),
            TestFunction::Cosine { coord, freq } => write!(f, "cos:{}:{freq}", coord + 1),
            TestFunction::Hat { center, width } => {
                write!(f, "hat:{}:{width}", crate::observed::join(center.iter()))
            }
            TestFunction::Mollifier { f: o, r_prev, r } => write!(f, "moll:{r_prev}:{r}:{o}"),
            TestFunction::Constant(c) => write!(f, "const:{c}"),
        }
    }
}

/// How the starting points of a correlation estimate are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Sampling {
    /// Independent invariant samples; normal half-widths.
    Iid,
    /// Randomly shifted lattices on the circle (one-dimensional Lebesgue
    /// systems only); Student half-widths from the spread across shifts.
    Stratified { shifts: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSeries {
    pub lags: Vec<u64>,
    pub values: Vec<f64>,
    /// Covariance before taking absolute values.
    pub signed: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub norm_phi: LipNorm,
    pub norm_psi: LipNorm,
    pub samples: usize,
    pub sampling: Sampling,
}

impl CorrelationSeries {
    /// A noiseless series with unit norms, for testing fits.
    pub fn synthetic(lags: Vec<u64>, values: Vec<f64>) -> Self {
        let unit = LipNorm { sup: 1.0, lipschitz: 0.0 };
        CorrelationSeries {
            half_widths: vec![0.0; values.len()],
            signed: values.clone(),
            lags,
            values,
            norm_phi: unit,
            norm_psi: unit,
            samples: 0,
            sampling: Sampling::Iid,
        }
    }

    /// Lags whose value clears the noise floor.
    pub fn usable(&self) -> Vec<usize> {
        (0..self.lags.len())
            .filter(|&i| self.values[i] > 0.0 && self.values[i] > NOISE_FLOOR * self.half_widths[i])
            .collect()
    }
}

/// Values at or below this many half-widths are treated as noise.
pub const NOISE_FLOOR: f64 = 3.0;
const CHUNK: usize = 4096;

/// Per-lag running sums of `a = phi - m_phi`, `b = psi - m_psi`, `ab`, `(ab)^2`.
#[derive(Clone)]
struct Tally {
    n: f64,
    a: Vec<f64>,
    b: f64,
    ab: Vec<f64>,
    ab2: Vec<f64>,
}

impl Tally {
    fn new(lags: usize) -> Self {
        Tally {
            n: 0.0,
            a: vec![0.0; lags],
            b: 0.0,
            ab: vec![0.0; lags],
            ab2: vec![0.0; lags],
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.n += o.n;
        self.b += o.b;
        for i in 0..self.a.len() {
            self.a[i] += o.a[i];
            self.ab[i] += o.ab[i];
            self.ab2[i] += o.ab2[i];
        }
        self
    }

    fn covariance(&self, i: usize) -> f64 {
        self.ab[i] / self.n - (self.a[i] / self.n) * (self.b / self.n)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_correlation(
    system: &SystemSpec,
    phi: &TestFunction,
    psi: &TestFunction,
    lags: &[u64],
    seed: u64,
    n: usize,
    sampling: Sampling,
    level: f64,
) -> Result<CorrelationSeries> {
    let d = system.dimension();
    phi.validate(d)?;
    psi.validate(d)?;
    if lags.is_empty() || lags.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("lags must be non-empty and strictly increasing".into()));
    }
    if n < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {n}")));
    }
    let max_lag = *lags.last().unwrap();
    // Pilot means for numerically stable centring.
    let pilot = PointSource::new(system, derive_seed(seed, purpose::PILOT), 1000);
    let (mut mp, mut mq) = (0.0, 0.0);
    let mut buf = [0.0; MAX_DIM];
    for i in 0..1000 {
        pilot.point(i)?.write_f64(&mut buf);
        mp += phi.eval(&buf[..d]);
        mq += psi.eval(&buf[..d]);
    }
    let (mp, mq) = (mp / 1000.0, mq / 1000.0);

    let tally_range = |points: &dyn Fn(usize) -> Result<crate::point::PhasePoint>, range: std::ops::Range<usize>| -> Result<Tally> {
        let mut t = Tally::new(lags.len());
        let mut buf = [0.0; MAX_DIM];
        for i in range {
            let x = points(i)?;
            let mut orbit = Orbit::new(system, &x)?;
            orbit.write_f64(&mut buf);
            let b = psi.eval(&buf[..d]) - mq;
            t.n += 1.0;
            t.b += b;
            let mut li = 0;
            for step in 0..=max_lag {
                if step > 0 {
                    orbit.advance()?;
                }
                if lags[li] == step {
                    orbit.write_f64(&mut buf);
                    let a = phi.eval(&buf[..d]) - mp;
                    t.a[li] += a;
                    t.ab[li] += a * b;
                    t.ab2[li] += (a * b) * (a * b);
                    li += 1;
                    if li == lags.len() {
                        break;
                    }
                }
            }
        }
        Ok(t)
    };

    let (signed, half_widths) = match sampling {
        Sampling::Iid => {
            let source = PointSource::new(system, seed, n);
            let get = |i: usize| source.point(i);
            let tally = par::fold_chunks(n, CHUNK, |r| tally_range(&get, r), |a, b| Ok(a?.merge(b?)))
                .expect("n > 0")?;
            let z = normal_quantile(level);
            let cov: Vec<f64> = (0..lags.len()).map(|i| tally.covariance(i)).collect();
            let hw = (0..lags.len())
                .map(|i| {
                    let m = tally.ab[i] / tally.n;
                    let var = (tally.ab2[i] / tally.n - m * m).max(0.0);
                    z * (var / tally.n).sqrt()
                })
                .collect();
            (cov, hw)
        }
        Sampling::Stratified { shifts } => {
            if system.dimension() != 1 || !system.is_lebesgue() {
                return Err(Error::InvalidArgument("stratified sampling needs a one-dimensional Lebesgue system".into()));
            }
            if shifts < 2 || n / shifts < 2 {
                return Err(Error::InvalidArgument("stratified sampling needs at least two shifts of two points".into()));
            }
            let m = n / shifts;
            let shift_seed = derive_seed(seed, purpose::INVARIANT) ^ 0x5354_5241_5449_4659;
            let per_shift = par::try_map_indexed(shifts, |s| {
                let u = stream_rng(shift_seed, s as u64).next_u64();
                let get = |j: usize| {
                    let word = ((((j as u128) << 64) + u as u128) / m as u128) as u64;
                    system.point_with_leading_words(seed, (s * m + j) as u64, &[word])
                };
                let t = tally_range(&get, 0..m)?;
                Ok::<_, Error>((0..lags.len()).map(|i| t.covariance(i)).collect::<Vec<f64>>())
            })?;
            let r = shifts as f64;
            let tq = student_quantile(level, r - 1.0);
            let mut cov = Vec::with_capacity(lags.len());
            let mut hw = Vec::with_capacity(lags.len());
            for i in 0..lags.len() {
                let mean = per_shift.iter().map(|c| c[i]).sum::<f64>() / r;
                let var = per_shift.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / (r - 1.0);
                cov.push(mean);
                hw.push(tq * (var / r).sqrt());
            }
            (cov, hw)
        }
    };
    Ok(CorrelationSeries {
        lags: lags.to_vec(),
        values: signed.iter().map(|v| v.abs()).collect(),
        signed,
        half_widths,
        norm_phi: phi.norm(d),
        norm_psi: psi.norm(d),
        samples: n,
        sampling,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "class")]
pub enum DecayClass {
    Exponential { rate: f64 },
    Polynomial { exponent: f64 },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub class: DecayClass,
    pub lags_used: Vec<u64>,
    /// Residual sum of squares of the selected model (log scale).
    pub residual: f64,
    pub rival_residual: f64,
    pub log_prefactor: f64,
    /// Largest absolute log residual; the envelope is raised by this much.
    pub log_inflation: f64,
    pub norm_product: f64,
}

impl DecayFit {
    /// Fitted envelope per unit product of Lipschitz norms, raised by the
    /// worst residual. `None` for inconclusive fits.
    pub fn envelope(&self, n: u64) -> Option<f64> {
        let c = (self.log_prefactor + self.log_inflation).exp() / self.norm_product;
        match self.class {
            DecayClass::Exponential { rate } => Some(c * (-rate * n as f64).exp()),
            DecayClass::Polynomial { exponent } => Some(c * (n.max(1) as f64).powf(-exponent)),
            DecayClass::Inconclusive => None,
        }
    }
}

/// Compares `log value ~ n` (exponential) and `log value ~ log n` (power)
/// on lags above the noise floor.
pub fn fit_decay(series: &CorrelationSeries) -> Result<DecayFit> {
    let usable: Vec<usize> = series.usable().into_iter().filter(|&i| series.lags[i] >= 1).collect();
    let norm_product = (series.norm_phi.total() * series.norm_psi.total()).max(f64::MIN_POSITIVE);
    let inconclusive = |lags_used: Vec<u64>| DecayFit {
        class: DecayClass::Inconclusive,
        lags_used,
        residual: f64::NAN,
        rival_residual: f64::NAN,
        log_prefactor: f64::NAN,
        log_inflation: f64::NAN,
        norm_product,
    };
    if usable.is_empty() {
        return Ok(inconclusive(Vec::new()));
    }
    if usable.len() < 6 {
        return Err(Error::DegenerateFit { usable: usable.len() });
    }
    let lags_used: Vec<u64> = usable.iter().map(|&i| series.lags[i]).collect();
    let n: Vec<f64> = lags_used.iter().map(|&l| l as f64).collect();
    let log_n: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let log_v: Vec<f64> = usable.iter().map(|&i| series.values[i].ln()).collect();
    let exp_fit = fit_line(&n, &log_v).ok_or(Error::DegenerateFit { usable: usable.len() })?;
    let pow_fit = fit_line(&log_n, &log_v).ok_or(Error::DegenerateFit { usable: usable.len() })?;
    let (fit, rival, class) = if exp_fit.rss <= pow_fit.rss {
        (exp_fit, pow_fit, DecayClass::Exponential { rate: -exp_fit.slope })
    } else {
        (pow_fit, exp_fit, DecayClass::Polynomial { exponent: -pow_fit.slope })
    };
    if fit.slope >= 0.0 {
        return Ok(inconclusive(lags_used));
    }
    Ok(DecayFit {
        class,
        lags_used,
        residual: fit.rss,
        rival_residual: rival.rss,
        log_prefactor: fit.intercept,
        log_inflation: fit.max_abs_residual,
        norm_product,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntersectionCheck {
    pub k: usize,
    pub j: usize,
    pub lhs: MeasureEstimate,
    pub rhs: f64,
    pub measure_k_prev: MeasureEstimate,
    pub measure_j_prev: MeasureEstimate,
    pub correlation_term: f64,
    /// `lhs <= rhs + lhs half-width`.
    pub holds: bool,
}

/// `mu(T^-k S_{r_k} ∩ T^-j S_{r_j})` against
/// `mu(S_{r_{k-1}}) mu(S_{r_{j-1}}) + 4 l^2 Phi(k-j) / ((r_{k-1}-r_k)(r_{j-1}-r_j))`.
/// Indices are absolute ladder indices.
#[allow(clippy::too_many_arguments)]
pub fn intersection_bound_check(
    system: &SystemSpec,
    f: &Observable,
    ladder: &RadiusLadder,
    k: usize,
    j: usize,
    decay: &DecayFit,
    seed: u64,
    n: usize,
    level: f64,
) -> Result<IntersectionCheck> {
    if !(k > j && j >= 1) {
        return Err(Error::InvalidArgument(format!("need k > j >= 1, got k={k}, j={j}")));
    }
    let rung = |i: usize| {
        ladder
            .radius(i)
            .ok_or_else(|| Error::InvalidLadder(format!("ladder has no rung {i}")))
    };
    let (rk, rk1, rj, rj1) = (rung(k)?, rung(k - 1)?, rung(j)?, rung(j - 1)?);
    let phi = decay.envelope((k - j) as u64).ok_or(Error::NoDecayFit)?;
    let d = system.dimension();
    f.validate(d)?;
    let prev = estimate_measures(f, &[rk1, rj1], system, seed, n, level)?;
    let source = PointSource::new(system, derive_seed(seed, purpose::CONDITIONED), n);
    let hits = par::fold_chunks(
        n,
        CHUNK,
        |range| {
            let mut hits = 0usize;
            let mut buf = [0.0; MAX_DIM];
            for i in range {
                let x = source.point(i)?;
                let mut orbit = Orbit::new(system, &x)?;
                for _ in 0..j {
                    orbit.advance()?;
                }
                orbit.write_f64(&mut buf);
                if f.eval(&buf[..d]) > rj {
                    continue;
                }
                for _ in j..k {
                    orbit.advance()?;
                }
                orbit.write_f64(&mut buf);
                if f.eval(&buf[..d]) <= rk {
                    hits += 1;
                }
            }
            Ok::<_, Error>(hits)
        },
        |a, b| Ok(a? + b?),
    )
    .expect("n > 0")?;
    let lhs = MeasureEstimate::from_count(hits, n, normal_quantile(level));
    let l = f.lipschitz();
    let correlation_term = 4.0 * l * l * phi / ((rk1 - rk) * (rj1 - rj));
    let rhs = prev[0].estimate * prev[1].estimate + correlation_term;
    Ok(IntersectionCheck {
        k,
        j,
        holds: lhs.estimate <= rhs + lhs.half_width,
        lhs,
        rhs,
        measure_k_prev: prev[0],
        measure_j_prev: prev[1],
        correlation_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_exponential() {
        let lags: Vec<u64> = (1..=20).collect();
        let values = lags.iter().map(|&n| 0.5f64.powi(n as i32)).collect();
        let fit = fit_decay(&CorrelationSeries::synthetic(lags, values)).unwrap();
        match fit.class {
            DecayClass::Exponential { rate } => assert!((rate / 2f64.ln() - 1.0).abs() < 0.05),
            c => panic!("{c:?}"),
        }
        assert!((fit.envelope(3).unwrap() - 0.125).abs() < 1e-9);
    }

    #[test]
    fn planted_power() {
        let lags: Vec<u64> = (1..=20).collect();
        let values = lags.iter().map(|&n| (n as f64).powi(-2)).collect();
        let fit = fit_decay(&CorrelationSeries::synthetic(lags, values)).unwrap();
        match fit.class {
            DecayClass::Polynomial { exponent } => assert!((exponent / 2.0 - 1.0).abs() < 0.05),
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn noise_only_is_inconclusive() {
        let mut s = CorrelationSeries::synthetic((1..=10).collect(), vec![1e-4; 10]);
        s.half_widths = vec![1e-3; 10];
        assert_eq!(fit_decay(&s).unwrap().class, DecayClass::Inconclusive);
        s.half_widths[0] = 0.0;
        assert_eq!(fit_decay(&s), Err(Error::DegenerateFit { usable: 1 }));
    }

    #[test]
    fn test_function_strings() {
        for s in ["obs:dist:0.5", "cos:1:2", "hat:0.37:0.3", "moll:0.2:0.1:dist:0.5", "const:2"] {
            assert_eq!(TestFunction::parse(s).unwrap().to_string(), s);
        }
        assert!(TestFunction::parse("cos:0:1").is_err());
        assert!(TestFunction::parse("moll:0.1:0.2:dist:0.5").is_err());
    }

    #[test]
    fn constant_has_zero_covariance() {
        let sys = SystemSpec::doubling();
        let s = estimate_correlation(
            &sys,
            &TestFunction::Cosine { coord: 0, freq: 1 },
            &TestFunction::Constant(3.0),
            &[1, 5],
            1,
            2000,
            Sampling::Iid,
            0.95,
        )
        .unwrap();
        assert!(s.values.iter().all(|v| *v < 1e-12));
    }
}
