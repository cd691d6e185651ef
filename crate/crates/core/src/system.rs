//! Catalog of measure-preserving maps of the torus and their orbit engines.

use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::{golden_numerator, liouville_numerator, Fraction};
use crate::point::{Engine, PhasePoint, MAX_DIM};
use crate::reservoir::{BitStream, ReservoirPoint, WordCursor};
use crate::rng::{derive_seed, purpose, stream_rng};

pub const DEFAULT_PRECISION_BITS: u32 = 512;

/// Square integer matrix acting on the torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_DIM || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSystem(format!(
                "toral matrix must be square with size 1..={MAX_DIM}"
            )));
        }
        let m = IntMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        };
        let det = m.determinant();
        if det.abs() != 1 {
            return Err(Error::InvalidSystem(format!(
                "toral matrix has determinant {det}, need +-1"
            )));
        }
        Ok(m)
    }

    /// The Arnold cat map `[[2,1],[1,1]]`.
    pub fn cat() -> Self {
        IntMatrix {
            n: 2,
            entries: vec![2, 1, 1, 1],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> IntMatrix {
        let mut entries = Vec::with_capacity((self.n - 1) * (self.n - 1));
        for i in (0..self.n).filter(|&i| i != skip_row) {
            for j in (0..self.n).filter(|&j| j != skip_col) {
                entries.push(self.get(i, j));
            }
        }
        IntMatrix {
            n: self.n - 1,
            entries,
        }
    }

    pub fn determinant(&self) -> i64 {
        match self.n {
            1 => self.entries[0],
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => (0..self.n)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    sign * self.get(0, j) * self.minor(0, j).determinant()
                })
                .sum(),
        }
    }

    /// Integer inverse (adjugate times the unit determinant).
    pub fn inverse(&self) -> IntMatrix {
        let det = self.determinant();
        if self.n == 1 {
            return IntMatrix {
                n: 1,
                entries: vec![det],
            };
        }
        let mut entries = vec![0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                // adj[j][i] = cofactor[i][j]
                entries[j * self.n + i] = sign * self.minor(i, j).determinant() * det;
            }
        }
        IntMatrix { n: self.n, entries }
    }

    /// Hyperbolic in dimension two: no eigenvalue on the unit circle.
    fn is_hyperbolic_2d(&self) -> bool {
        self.n == 2 && (self.get(0, 0) + self.get(1, 1)).abs() > 2
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| {
                let items: Vec<String> = r.iter().map(|v| v.to_string()).collect();
                format!("[{}]", items.join(","))
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    Doubling,
    ToralAutomorphism(IntMatrix),
    CircleRotation(Fraction),
    /// `x -> x + x^{1+s} mod 1`, iterated in double precision.
    MannevillePomeau { s: f64 },
    /// Identity map; a test double for counters that must see every index.
    Identity { dim: usize },
}

/// Decay class annotation; metadata only, estimators never read it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingClass {
    Exponential,
    Polynomial,
    None,
}

impl fmt::Display for MixingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixingClass::Exponential => "exponential",
            MixingClass::Polynomial => "polynomial",
            MixingClass::None => "none",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitBudget {
    pub max_steps: u64,
    pub precision_bits: u32,
    pub guard_bits: u32,
}

impl OrbitBudget {
    pub fn new(precision_bits: u32) -> Self {
        OrbitBudget {
            max_steps: u64::MAX,
            precision_bits,
            guard_bits: 64.min(precision_bits - 1),
        }
    }

    /// Number of doubling steps a fixed-point point can take.
    pub fn doubling_limit(&self) -> u64 {
        let usable = self.precision_bits.saturating_sub(self.guard_bits) as u64;
        usable.min(self.max_steps)
    }
}

/// Burn-in and stride of the single-orbit sampler used when no exact
/// invariant density is implemented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitSampler {
    pub burn_in: u64,
    pub stride: u64,
}

impl Default for OrbitSampler {
    fn default() -> Self {
        OrbitSampler {
            burn_in: 10_000,
            stride: 10,
        }
    }
}

/// A catalog system: map, invariant measure sampler, and orbit budget.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub budget: OrbitBudget,
    pub sampler: OrbitSampler,
    id: String,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, precision_bits: u32) -> Result<Self> {
        if precision_bits == 0 {
            return Err(Error::InvalidSystem("precision must be positive".into()));
        }
        match &kind {
            SystemKind::CircleRotation(a) if a.bits() != precision_bits => {
                return Err(Error::InvalidSystem(
                    "rotation number precision differs from system precision".into(),
                ))
            }
            SystemKind::MannevillePomeau { s } if !(*s > 0.0 && *s < 1.0) => {
                return Err(Error::InvalidSystem(format!(
                    "Manneville-Pomeau parameter {s} outside (0,1)"
                )))
            }
            SystemKind::Identity { dim } if *dim == 0 || *dim > MAX_DIM => {
                return Err(Error::InvalidSystem("identity dimension".into()))
            }
            _ => {}
        }
        let id = match &kind {
            SystemKind::Doubling => "doubling".to_string(),
            SystemKind::ToralAutomorphism(m) if *m == IntMatrix::cat() => "cat".to_string(),
            SystemKind::ToralAutomorphism(m) => format!("toral:{m}"),
            SystemKind::CircleRotation(a) => format!("rotation:{:.17}", a.to_f64()),
            SystemKind::MannevillePomeau { s } => format!("mp:{s}"),
            SystemKind::Identity { dim } => format!("identity:{dim}"),
        };
        Ok(SystemSpec {
            kind,
            budget: OrbitBudget::new(precision_bits),
            sampler: OrbitSampler::default(),
            id,
        })
    }

    pub fn doubling() -> Self {
        Self::new(SystemKind::Doubling, DEFAULT_PRECISION_BITS).expect("valid")
    }

    pub fn cat() -> Self {
        Self::new(
            SystemKind::ToralAutomorphism(IntMatrix::cat()),
            DEFAULT_PRECISION_BITS,
        )
        .expect("valid")
    }

    pub fn rotation(alpha: Fraction) -> Result<Self> {
        let bits = alpha.bits();
        Self::new(SystemKind::CircleRotation(alpha), bits)
    }

    /// Rotation by a dyadic rational `num / 2^log2_den`.
    pub fn rotation_dyadic(num: u64, log2_den: u32) -> Result<Self> {
        Self::rotation(Fraction::from_dyadic(
            num,
            log2_den,
            DEFAULT_PRECISION_BITS,
        )?)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(SystemKind::Identity { dim }, DEFAULT_PRECISION_BITS)
    }

    /// Parses a catalog id: `doubling`, `cat`, `toral:[[a,b],[c,d]]`,
    /// `rotation:<decimal|golden|liouville>`, `mp:<s>`.
    pub fn from_id(id: &str, precision_bits: u32) -> Result<Self> {
        let id = id.trim();
        let (head, arg) = match id.split_once(':') {
            Some((h, a)) => (h, Some(a.trim())),
            None => (id, None),
        };
        let mut spec = match (head, arg) {
            ("doubling", None) => Self::new(SystemKind::Doubling, precision_bits)?,
            ("cat", None) => Self::new(
                SystemKind::ToralAutomorphism(IntMatrix::cat()),
                precision_bits,
            )?,
            ("toral", Some(a)) => {
                let rows = parse_int_rows(a)
                    .ok_or_else(|| Error::parse("toral matrix", a, "expected [[a,b],[c,d]]"))?;
                Self::new(
                    SystemKind::ToralAutomorphism(IntMatrix::new(rows)?),
                    precision_bits,
                )?
            }
            ("rotation", Some(a)) => {
                let alpha = match a {
                    "golden" => Fraction::from_numerator(&golden_numerator(precision_bits), precision_bits),
                    "liouville" => Fraction::from_numerator(
                        &liouville_numerator(precision_bits, 6),
                        precision_bits,
                    ),
                    dec => parse_decimal_fraction(dec, precision_bits)?,
                };
                Self::new(SystemKind::CircleRotation(alpha), precision_bits)?
            }
            ("mp", Some(a)) => {
                let s: f64 = a
                    .parse()
                    .map_err(|_| Error::parse("Manneville-Pomeau parameter", a, "not a number"))?;
                Self::new(SystemKind::MannevillePomeau { s }, precision_bits)?
            }
            _ => return Err(Error::parse("system id", id, "unknown catalog entry")),
        };
        spec.id = id.to_string();
        Ok(spec)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            SystemKind::Doubling
            | SystemKind::CircleRotation(_)
            | SystemKind::MannevillePomeau { .. } => 1,
            SystemKind::ToralAutomorphism(m) => m.size(),
            SystemKind::Identity { dim } => *dim,
        }
    }

    pub fn mixing_class(&self) -> MixingClass {
        match &self.kind {
            SystemKind::Doubling => MixingClass::Exponential,
            SystemKind::ToralAutomorphism(m) if m.is_hyperbolic_2d() => MixingClass::Exponential,
            SystemKind::ToralAutomorphism(_) => MixingClass::None,
            SystemKind::CircleRotation(_) | SystemKind::Identity { .. } => MixingClass::None,
            SystemKind::MannevillePomeau { .. } => MixingClass::Polynomial,
        }
    }

    /// True when the invariant measure is Lebesgue (closed-form sublevel
    /// measures apply).
    pub fn is_lebesgue(&self) -> bool {
        !matches!(self.kind, SystemKind::MannevillePomeau { .. })
    }

    /// Results from this system carry the non-rigorous float caveat.
    pub fn is_float_engine(&self) -> bool {
        matches!(self.kind, SystemKind::MannevillePomeau { .. })
    }

    pub fn precision_bits(&self) -> u32 {
        self.budget.precision_bits
    }

    /// Engine used for points drawn by [`sample_invariant`].
    pub fn default_engine(&self) -> Engine {
        match &self.kind {
            SystemKind::Doubling => Engine::Reservoir,
            SystemKind::MannevillePomeau { .. } => Engine::Float,
            _ => Engine::FixedPoint,
        }
    }

    fn check_point(&self, p: &PhasePoint) -> Result<()> {
        if p.dim() != self.dimension() {
            return Err(Error::InvalidPoint(format!(
                "point of dimension {} for {}-dimensional system {}",
                p.dim(),
                self.dimension(),
                self.id
            )));
        }
        let ok = match (&self.kind, p) {
            (SystemKind::Identity { .. }, _) => true,
            (SystemKind::Doubling, PhasePoint::Float(_)) => false,
            (SystemKind::Doubling, _) => true,
            (SystemKind::ToralAutomorphism(_), PhasePoint::Fixed { .. })
            | (SystemKind::ToralAutomorphism(_), PhasePoint::Rational { .. }) => true,
            (SystemKind::CircleRotation(a), PhasePoint::Fixed { coords, .. }) => {
                coords[0].bits() == a.bits()
            }
            (SystemKind::MannevillePomeau { .. }, PhasePoint::Float(_)) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedEngine(format!(
                "{:?} point cannot be iterated by {}",
                p.engine(),
                self.id
            )))
        }
    }

    /// One application of the map.
    pub fn step(&self, p: &PhasePoint) -> Result<PhasePoint> {
        self.check_point(p)?;
        let mut q = p.clone();
        let mut scratch = Vec::new();
        self.step_in_place(&mut q, &mut scratch)?;
        Ok(q)
    }

    /// `T^n(p)`. Reservoir doubling and rotations jump directly; other
    /// engines compose `step`.
    pub fn orbit_window(&self, p: &PhasePoint, n: u64) -> Result<PhasePoint> {
        self.check_point(p)?;
        if n > self.budget.max_steps {
            return Err(Error::BudgetExhausted {
                steps: n,
                limit: self.budget.max_steps,
            });
        }
        match (&self.kind, p) {
            (SystemKind::Doubling, PhasePoint::Reservoir(r)) => {
                let mut r = r.clone();
                r.offset += n;
                Ok(PhasePoint::Reservoir(r))
            }
            (SystemKind::CircleRotation(a), PhasePoint::Fixed { coords, spent }) => {
                let mut x = coords[0].clone();
                // n * alpha by binary expansion of n, all mod 1.
                let mut power = a.clone();
                let mut k = n;
                while k > 0 {
                    if k & 1 == 1 {
                        x.add_assign_mod1(&power);
                    }
                    let p2 = power.clone();
                    power.add_assign_mod1(&p2);
                    k >>= 1;
                }
                Ok(PhasePoint::Fixed {
                    coords: vec![x],
                    spent: *spent,
                })
            }
            (SystemKind::Identity { .. }, _) => Ok(p.clone()),
            _ => {
                let mut orbit = Orbit::new(self, p)?;
                for _ in 0..n {
                    orbit.advance()?;
                }
                Ok(orbit.point())
            }
        }
    }

    fn step_in_place(&self, p: &mut PhasePoint, scratch: &mut Vec<Fraction>) -> Result<()> {
        match (&self.kind, p) {
            (SystemKind::Identity { .. }, _) => {}
            (SystemKind::Doubling, PhasePoint::Fixed { coords, spent }) => {
                let limit = self.budget.doubling_limit();
                if *spent as u64 >= limit {
                    return Err(Error::BudgetExhausted {
                        steps: *spent as u64,
                        limit,
                    });
                }
                coords[0].double_mod1();
                *spent += 1;
            }
            (SystemKind::Doubling, PhasePoint::Rational { nums, den }) => {
                nums[0] = ((nums[0] as u128 * 2) % *den as u128) as u64;
            }
            (SystemKind::Doubling, PhasePoint::Reservoir(r)) => r.offset += 1,
            (SystemKind::ToralAutomorphism(m), PhasePoint::Fixed { coords, .. }) => {
                let n = m.size();
                let bits = coords[0].bits();
                if scratch.len() != n || scratch[0].bits() != bits {
                    *scratch = vec![Fraction::zero(bits); n];
                }
                for (i, acc) in scratch.iter_mut().enumerate() {
                    acc.set_zero();
                    for (j, c) in coords.iter().enumerate() {
                        let mij = m.get(i, j);
                        if mij != 0 {
                            acc.add_scaled_mod1(c, mij);
                        }
                    }
                }
                std::mem::swap(coords, scratch);
            }
            (SystemKind::ToralAutomorphism(m), PhasePoint::Rational { nums, den }) => {
                let d = *den as i128;
                let old = nums.clone();
                for (i, slot) in nums.iter_mut().enumerate() {
                    let s: i128 = old
                        .iter()
                        .enumerate()
                        .map(|(j, &x)| m.get(i, j) as i128 * x as i128)
                        .sum();
                    *slot = s.rem_euclid(d) as u64;
                }
            }
            (SystemKind::CircleRotation(a), PhasePoint::Fixed { coords, .. }) => {
                coords[0].add_assign_mod1(a);
            }
            (SystemKind::MannevillePomeau { s }, PhasePoint::Float(v)) => {
                v[0] = mp_map(v[0], *s);
            }
            (_, p) => {
                return Err(Error::UnsupportedEngine(format!(
                    "{:?} point cannot be iterated by {}",
                    p.engine(),
                    self.id
                )))
            }
        }
        Ok(())
    }

    /// Applies the inverse map (invertible systems only).
    pub fn step_back(&self, p: &PhasePoint) -> Result<PhasePoint> {
        self.check_point(p)?;
        match (&self.kind, p) {
            (SystemKind::ToralAutomorphism(m), _) => {
                let inv = SystemSpec::new(
                    SystemKind::ToralAutomorphism(m.inverse()),
                    self.precision_bits(),
                )?;
                inv.step(p)
            }
            (SystemKind::CircleRotation(a), PhasePoint::Fixed { coords, spent }) => {
                let mut x = coords[0].clone();
                x.sub_assign_mod1(a);
                Ok(PhasePoint::Fixed {
                    coords: vec![x],
                    spent: *spent,
                })
            }
            (SystemKind::Identity { .. }, _) => Ok(p.clone()),
            _ => Err(Error::InvalidSystem(format!("{} is not invertible", self.id))),
        }
    }

    /// A Lebesgue point whose coordinates start with the 64 binary digits in
    /// `words`; the remaining digits are drawn as for [`Self::lebesgue_point`].
    pub fn point_with_leading_words(&self, seed: u64, index: u64, words: &[u64]) -> Result<PhasePoint> {
        if !self.is_lebesgue() || words.len() != self.dimension() {
            return Err(Error::InvalidSystem(format!(
                "{} cannot place {} leading words",
                self.id,
                words.len()
            )));
        }
        match self.lebesgue_point(seed, index)? {
            PhasePoint::Reservoir(_) => Ok(PhasePoint::Reservoir(ReservoirPoint::new(BitStream::with_prefix(
                vec![words[0]],
                derive_seed(seed, purpose::RESERVOIR),
                index,
            )))),
            PhasePoint::Fixed { mut coords, spent } => {
                for (c, &w) in coords.iter_mut().zip(words) {
                    c.set_top_word(w);
                }
                Ok(PhasePoint::Fixed { coords, spent })
            }
            other => Ok(other),
        }
    }

    /// Draws point `index` of an i.i.d. Lebesgue sample. Not available for
    /// systems whose sampler follows a single orbit.
    pub fn lebesgue_point(&self, seed: u64, index: u64) -> Result<PhasePoint> {
        match &self.kind {
            SystemKind::Doubling => Ok(PhasePoint::Reservoir(ReservoirPoint::new(
                BitStream::seeded(derive_seed(seed, purpose::RESERVOIR), index),
            ))),
            SystemKind::MannevillePomeau { .. } => Err(Error::InvalidSystem(
                "Manneville-Pomeau points come from the orbit sampler".into(),
            )),
            _ => {
                let mut rng = stream_rng(derive_seed(seed, purpose::INVARIANT), index);
                let bits = self.precision_bits();
                let coords = (0..self.dimension())
                    .map(|_| Fraction::random(&mut rng, bits))
                    .collect();
                PhasePoint::fixed(coords)
            }
        }
    }
}

pub(crate) fn mp_map(x: f64, s: f64) -> f64 {
    let y = x + x.powf(1.0 + s);
    let y = if y >= 1.0 { y - 1.0 } else { y };
    // Guard against landing on the neutral fixed point through round-off.
    if y <= 0.0 || y >= 1.0 {
        f64::EPSILON
    } else {
        y
    }
}

fn parse_int_rows(text: &str) -> Option<Vec<Vec<i64>>> {
    let inner = text.trim().strip_prefix('[')?.strip_suffix(']')?;
    let mut rows = Vec::new();
    for chunk in inner.split(']') {
        let chunk = chunk.trim().trim_start_matches(',').trim();
        if chunk.is_empty() {
            continue;
        }
        let body = chunk.strip_prefix('[')?;
        let row = body
            .split(',')
            .map(|v| v.trim().parse::<i64>().ok())
            .collect::<Option<Vec<_>>>()?;
        rows.push(row);
    }
    Some(rows)
}

/// Exact conversion of a decimal literal in `[0,1)` to `floor(value * 2^bits)`.
fn parse_decimal_fraction(text: &str, bits: u32) -> Result<Fraction> {
    use num_bigint::BigUint;
    let digits = text
        .strip_prefix("0.")
        .or_else(|| text.strip_prefix('.'))
        .ok_or_else(|| Error::parse("rotation number", text, "expected 0.<digits>"))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse("rotation number", text, "expected 0.<digits>"));
    }
    let num: BigUint = digits.parse().expect("digits checked");
    let den = BigUint::from(10u8).pow(digits.len() as u32);
    Ok(Fraction::from_numerator(&((num << bits as usize) / den), bits))
}

/// In-place orbit iterator. Hot loops read float coordinates through
/// [`Orbit::write_f64`] without allocating.
pub struct Orbit<'a> {
    system: &'a SystemSpec,
    point: PhasePoint,
    scratch: Vec<Fraction>,
    cursor: Option<WordCursor>,
    steps: u64,
}

impl<'a> Orbit<'a> {
    pub fn new(system: &'a SystemSpec, start: &PhasePoint) -> Result<Self> {
        system.check_point(start)?;
        let cursor = match (&system.kind, start) {
            (SystemKind::Doubling, PhasePoint::Reservoir(r)) => Some(r.stream.cursor(r.offset)),
            _ => None,
        };
        Ok(Orbit {
            system,
            point: start.clone(),
            scratch: Vec::new(),
            cursor,
            steps: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn advance(&mut self) -> Result<()> {
        if self.steps >= self.system.budget.max_steps {
            return Err(Error::BudgetExhausted {
                steps: self.steps,
                limit: self.system.budget.max_steps,
            });
        }
        if let Some(c) = self.cursor.as_mut() {
            c.advance();
            if let PhasePoint::Reservoir(r) = &mut self.point {
                r.offset += 1;
            }
        } else {
            self.system.step_in_place(&mut self.point, &mut self.scratch)?;
        }
        self.steps += 1;
        Ok(())
    }

    pub fn write_f64(&self, out: &mut [f64]) {
        match &self.cursor {
            Some(c) => out[0] = crate::reservoir::window_to_f64(c.window()),
            None => self.point.write_f64(out),
        }
    }

    pub fn point(&self) -> PhasePoint {
        self.point.clone()
    }
}

/// Index-addressable invariant sample: i.i.d. Lebesgue points are built on
/// demand, orbit-sampled points are precomputed.
pub enum PointSource<'a> {
    Lebesgue { system: &'a SystemSpec, seed: u64 },
    Orbit(Vec<f64>),
    /// One burned-in orbit per index, for callers whose per-point results
    /// must not share a future (hitting-time starts).
    SeparateOrbits { s: f64, sampler: OrbitSampler, seed: u64 },
}

impl<'a> PointSource<'a> {
    pub fn new(system: &'a SystemSpec, seed: u64, count: usize) -> Self {
        match &system.kind {
            SystemKind::MannevillePomeau { s } => PointSource::Orbit(mp_orbit_samples(*s, &system.sampler, seed, count)),
            _ => PointSource::Lebesgue { system, seed },
        }
    }

    pub fn separate(system: &'a SystemSpec, seed: u64) -> Self {
        match &system.kind {
            SystemKind::MannevillePomeau { s } => PointSource::SeparateOrbits {
                s: *s,
                sampler: system.sampler,
                seed,
            },
            _ => PointSource::Lebesgue { system, seed },
        }
    }

    pub fn point(&self, index: usize) -> Result<PhasePoint> {
        match self {
            PointSource::Lebesgue { system, seed } => system.lebesgue_point(*seed, index as u64),
            PointSource::Orbit(v) => Ok(PhasePoint::Float(vec![v[index]])),
            PointSource::SeparateOrbits { s, sampler, seed } => {
                let mut rng = stream_rng(derive_seed(*seed, purpose::MP_ORBIT), index as u64 + 1);
                let mut x: f64 = rng.gen_range(0.25..0.75);
                for _ in 0..sampler.burn_in {
                    x = mp_map(x, *s);
                }
                Ok(PhasePoint::Float(vec![x]))
            }
        }
    }
}

/// Draws `count` points distributed according to the system's invariant
/// measure. Deterministic in `seed`.
pub fn sample_invariant(system: &SystemSpec, seed: u64, count: usize) -> Result<Vec<PhasePoint>> {
    let source = PointSource::new(system, seed, count);
    (0..count).map(|i| source.point(i)).collect()
}

/// Float coordinates of the first `count` points of [`sample_invariant`],
/// flattened row by row.
pub fn invariant_f64s(system: &SystemSpec, seed: u64, count: usize) -> Result<Vec<f64>> {
    let d = system.dimension();
    match &system.kind {
        SystemKind::MannevillePomeau { s } => Ok(mp_orbit_samples(*s, &system.sampler, seed, count)),
        _ => {
            let rows = crate::par::try_map_indexed(count, |i| {
                let p = system.lebesgue_point(seed, i as u64)?;
                let mut buf = [0.0; MAX_DIM];
                p.write_f64(&mut buf);
                Ok::<_, Error>(buf)
            })?;
            Ok(rows.iter().flat_map(|b| b[..d].iter().copied()).collect())
        }
    }
}

/// Samples from a single Manneville-Pomeau orbit after burn-in.
pub(crate) fn mp_orbit_samples(s: f64, sampler: &OrbitSampler, seed: u64, count: usize) -> Vec<f64> {
    let mut rng = stream_rng(derive_seed(seed, purpose::MP_ORBIT), 0);
    let mut x: f64 = rng.gen_range(0.25..0.75);
    for _ in 0..sampler.burn_in {
        x = mp_map(x, s);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(x);
        for _ in 0..sampler.stride.max(1) {
            x = mp_map(x, s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_fixed_point_step() {
        let sys = SystemSpec::doubling();
        let p = PhasePoint::dyadic(&[3], 3, 512).unwrap();
        let q = sys.step(&p).unwrap();
        assert_eq!(q.to_f64s(), vec![0.75]);
    }

    #[test]
    fn cat_map_steps() {
        let sys = SystemSpec::cat();
        let p = PhasePoint::dyadic(&[1, 1], 1, 512).unwrap();
        let q = sys.step(&p).unwrap();
        assert_eq!(q, PhasePoint::dyadic(&[1, 0], 1, 512).unwrap());
        let r = sys.orbit_window(&p, 2).unwrap();
        assert_eq!(r, PhasePoint::dyadic(&[0, 1], 1, 512).unwrap());
        assert_eq!(sys.orbit_window(&p, 0).unwrap(), p);
    }

    #[test]
    fn rotation_step_and_jump() {
        let sys = SystemSpec::rotation_dyadic(1, 2).unwrap();
        let p = PhasePoint::dyadic(&[7], 3, 512).unwrap();
        assert_eq!(sys.step(&p).unwrap(), PhasePoint::dyadic(&[1], 3, 512).unwrap());
        let golden = SystemSpec::from_id("rotation:golden", 512).unwrap();
        let x = golden.lebesgue_point(1, 0).unwrap();
        let mut stepped = x.clone();
        for _ in 0..37 {
            stepped = golden.step(&stepped).unwrap();
        }
        assert_eq!(golden.orbit_window(&x, 37).unwrap(), stepped);
    }

    #[test]
    fn fixed_doubling_exhausts_budget() {
        let sys = SystemSpec::new(SystemKind::Doubling, 128).unwrap();
        let p = PhasePoint::dyadic(&[3], 3, 128).unwrap();
        let limit = sys.budget.doubling_limit();
        assert_eq!(limit, 64);
        let ok = sys.orbit_window(&p, limit).unwrap();
        assert!(matches!(ok, PhasePoint::Fixed { spent: 64, .. }));
        assert!(matches!(
            sys.orbit_window(&p, limit + 1),
            Err(Error::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn reservoir_jump_is_shift() {
        let sys = SystemSpec::doubling();
        let p = sys.lebesgue_point(5, 2).unwrap();
        let mut q = p.clone();
        for _ in 0..100 {
            q = sys.step(&q).unwrap();
        }
        assert_eq!(sys.orbit_window(&p, 100).unwrap(), q);
        let mut orbit = Orbit::new(&sys, &p).unwrap();
        let mut buf = [0.0; 1];
        for n in 0..300u64 {
            orbit.write_f64(&mut buf);
            assert_eq!(buf[0], sys.orbit_window(&p, n).unwrap().to_f64s()[0]);
            orbit.advance().unwrap();
        }
    }

    #[test]
    fn rational_engine() {
        let sys = SystemSpec::doubling();
        let p = PhasePoint::rational(vec![1], 5).unwrap();
        let q = sys.orbit_window(&p, 2).unwrap();
        assert_eq!(q, PhasePoint::rational(vec![4], 5).unwrap());
        let cat = SystemSpec::cat();
        let r = PhasePoint::rational(vec![1, 2], 7).unwrap();
        // (2+2, 1+2) = (4, 3) mod 7
        assert_eq!(cat.step(&r).unwrap(), PhasePoint::rational(vec![4, 3], 7).unwrap());
        let back = cat.step_back(&cat.step(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn engine_mismatch_is_reported() {
        let rot = SystemSpec::from_id("rotation:golden", 512).unwrap();
        let p = PhasePoint::rational(vec![1], 3).unwrap();
        assert!(matches!(rot.step(&p), Err(Error::UnsupportedEngine(_))));
        let mp = SystemSpec::from_id("mp:0.5", 512).unwrap();
        assert!(mp.step(&PhasePoint::dyadic(&[1], 1, 512).unwrap()).is_err());
    }

    #[test]
    fn catalog_ids() {
        for id in ["doubling", "cat", "rotation:golden", "rotation:liouville", "rotation:0.25", "mp:0.5", "toral:[[1,1],[1,0]]"] {
            let s = SystemSpec::from_id(id, 256).unwrap();
            assert_eq!(s.id(), id);
        }
        assert!(SystemSpec::from_id("toral:[[2,0],[0,1]]", 64).is_err());
        assert!(SystemSpec::from_id("mp:1.5", 64).is_err());
        assert!(SystemSpec::from_id("rotation:1.5", 64).is_err());
        assert!(SystemSpec::from_id("baker", 64).is_err());
        let quarter = SystemSpec::from_id("rotation:0.25", 64).unwrap();
        match quarter.kind {
            SystemKind::CircleRotation(a) => assert_eq!(a.to_f64(), 0.25),
            _ => unreachable!(),
        }
    }

    #[test]
    fn matrix_inverse() {
        let m = IntMatrix::new(vec![vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        let inv = m.inverse();
        for i in 0..3 {
            for j in 0..3 {
                let v: i64 = (0..3).map(|k| m.get(i, k) * inv.get(k, j)).sum();
                assert_eq!(v, (i == j) as i64);
            }
        }
    }

    #[test]
    fn mp_samples_in_range() {
        let sys = SystemSpec::from_id("mp:0.5", 64).unwrap();
        let pts = sample_invariant(&sys, 3, 100).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| {
            let v = p.to_f64s()[0];
            (0.0..1.0).contains(&v)
        }));
    }
}
