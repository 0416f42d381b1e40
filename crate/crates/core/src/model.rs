//! Coefficient vectors, noise levels and the Lp / Besov parameter spaces.
//!
//! Indices are 1-based throughout. A [`CoefficientVector`] has a declared
//! length and every coordinate beyond it is zero; sparse storage lets a
//! vector with a handful of nonzeros sit at indices far beyond anything that
//! could be allocated.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, QfeError, Result};
use crate::estimators::EstimatorSpec;
use crate::rng::{standard_normal, RandomStreamId};
use crate::sum::KahanSum;

/// Largest vector that is ever materialised densely.
pub const MAX_DENSE_LEN: u64 = 1 << 27;

/// Noise calibration `n`; each coordinate has standard deviation `n^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseLevel(f64);

impl NoiseLevel {
    pub fn new(n: f64) -> Result<Self> {
        if n > 0.0 && n.is_finite() {
            Ok(Self(n))
        } else {
            invalid(format!("noise level n must be positive and finite, got {n}"))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// Per-coordinate standard deviation `n^{-1/2}`.
    #[inline]
    pub fn sigma(self) -> f64 {
        1.0 / self.0.sqrt()
    }
}

impl TryFrom<f64> for NoiseLevel {
    type Error = QfeError;
    fn try_from(n: f64) -> Result<Self> {
        Self::new(n)
    }
}

impl From<NoiseLevel> for f64 {
    fn from(n: NoiseLevel) -> f64 {
        n.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    /// Strictly increasing 1-based indices with nonzero values.
    Sparse(Vec<(u64, f64)>),
}

/// A finite section of a mean sequence (or an observation), zero beyond
/// its length.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    len: u64,
    storage: Storage,
}

impl Default for CoefficientVector {
    fn default() -> Self {
        Self::zeros(0)
    }
}

impl CoefficientVector {
    pub fn from_dense(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("coefficient {} is not finite", i + 1));
        }
        Ok(Self {
            len: values.len() as u64,
            storage: Storage::Dense(values),
        })
    }

    pub fn zeros(len: u64) -> Self {
        Self {
            len,
            storage: Storage::Sparse(Vec::new()),
        }
    }

    /// Builds a vector of length `len` from `(index, value)` pairs. Indices
    /// must be distinct and in `1..=len`; zero values are dropped.
    pub fn sparse(len: u64, mut entries: Vec<(u64, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return invalid(format!("duplicate index {}", w[0].0));
            }
        }
        for &(i, v) in &entries {
            if i == 0 || i > len {
                return invalid(format!("index {i} outside 1..={len}"));
            }
            if !v.is_finite() {
                return invalid(format!("coefficient {i} is not finite"));
            }
        }
        entries.retain(|e| e.1 != 0.0);
        Ok(Self {
            len,
            storage: Storage::Sparse(entries),
        })
    }

    /// Declared length `N`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coordinate `i` (1-based); zero beyond the length.
    pub fn get(&self, i: u64) -> f64 {
        if i == 0 || i > self.len {
            return 0.0;
        }
        match &self.storage {
            Storage::Dense(v) => v[(i - 1) as usize],
            Storage::Sparse(e) => match e.binary_search_by_key(&i, |x| x.0) {
                Ok(pos) => e[pos].1,
                Err(_) => 0.0,
            },
        }
    }

    /// Nonzero coordinates in increasing index order.
    pub fn nonzeros(&self) -> Box<dyn Iterator<Item = (u64, f64)> + '_> {
        match &self.storage {
            Storage::Dense(v) => Box::new(
                v.iter()
                    .enumerate()
                    .filter(|(_, x)| **x != 0.0)
                    .map(|(i, &x)| (i as u64 + 1, x)),
            ),
            Storage::Sparse(e) => Box::new(e.iter().copied()),
        }
    }

    /// Number of nonzero coordinates.
    pub fn support_size(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            Storage::Sparse(e) => e.len(),
        }
    }

    /// Largest index holding a nonzero value, 0 for the zero vector.
    pub fn support_end(&self) -> u64 {
        match &self.storage {
            Storage::Dense(v) => v.iter().rposition(|x| *x != 0.0).map_or(0, |p| p as u64 + 1),
            Storage::Sparse(e) => e.last().map_or(0, |x| x.0),
        }
    }

    /// Dense view when the vector is stored densely.
    pub fn as_dense(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(v) => Some(v),
            Storage::Sparse(_) => None,
        }
    }

    /// All `N` coordinates as a dense vector.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.len > MAX_DENSE_LEN {
            return invalid(format!(
                "vector of length {} is too long to materialise",
                self.len
            ));
        }
        match &self.storage {
            Storage::Dense(v) => Ok(v.clone()),
            Storage::Sparse(e) => {
                let mut out = vec![0.0; self.len as usize];
                for &(i, v) in e {
                    out[(i - 1) as usize] = v;
                }
                Ok(out)
            }
        }
    }

    /// `c · θ`, same length and storage.
    pub fn scaled(&self, c: f64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|x| c * x).collect()),
            Storage::Sparse(e) => Storage::Sparse(
                e.iter()
                    .map(|&(i, x)| (i, c * x))
                    .filter(|e| e.1 != 0.0)
                    .collect(),
            ),
        };
        Self {
            len: self.len,
            storage,
        }
    }
}

/// `Q(θ) = Σ θᵢ²`.
pub fn quadratic_functional(theta: &CoefficientVector) -> f64 {
    theta.nonzeros().map(|(_, x)| x * x).collect::<KahanSum>().total()
}

/// Draws `Yᵢ = θᵢ + n^{-1/2} zᵢ` for `i = 1..=length` from `stream`.
pub fn sample_observation(
    theta: &CoefficientVector,
    n: NoiseLevel,
    length: u64,
    stream: RandomStreamId,
) -> Result<CoefficientVector> {
    if length < theta.len() {
        return Err(QfeError::ObservationTooShort {
            required: theta.len(),
            actual: length,
        });
    }
    if length > MAX_DENSE_LEN {
        return invalid(format!("observation length {length} exceeds {MAX_DENSE_LEN}"));
    }
    let mut rng = stream.rng();
    let sigma = n.sigma();
    let mut y: Vec<f64> = (0..length)
        .map(|_| sigma * standard_normal(&mut rng))
        .collect();
    for (i, v) in theta.nonzeros() {
        y[(i - 1) as usize] += v;
    }
    CoefficientVector::from_dense(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallKind {
    Lp,
    Besov,
}

/// An Lp ball `(Σ i^{ps}|θᵢ|^p)^{1/p} ≤ M` or a Besov ball with level norms
/// `2^{js}(Σ_k |θ_{j,k}|^p)^{1/p}` combined in `ℓ_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub kind: BallKind,
    pub p: f64,
    /// Only used for Besov balls; `f64::INFINITY` means the supremum.
    pub q: f64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl BallSpec {
    pub fn lp(p: f64, alpha: f64, m: f64) -> Result<Self> {
        Self {
            kind: BallKind::Lp,
            p,
            q: f64::INFINITY,
            alpha,
            m,
        }
        .validated()
    }

    pub fn besov(p: f64, q: f64, alpha: f64, m: f64) -> Result<Self> {
        Self {
            kind: BallKind::Besov,
            p,
            q,
            alpha,
            m,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        for (name, v) in [("p", self.p), ("alpha", self.alpha), ("M", self.m)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.q > 0.0) {
            return invalid(format!("q must be positive, got {}", self.q));
        }
        if !(self.s() > 0.0) {
            return invalid(format!(
                "smoothness s = alpha + 1/2 - 1/p must be positive, got {}",
                self.s()
            ));
        }
        Ok(self)
    }

    /// `s = α + 1/2 - 1/p`.
    pub fn s(&self) -> f64 {
        if self.p == 2.0 {
            self.alpha
        } else {
            self.alpha + 0.5 - 1.0 / self.p
        }
    }
}

/// Position `(j, k)` of a Besov coefficient, flat index `2^j + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BesovIndex {
    pub j: u32,
    pub k: u64,
}

impl BesovIndex {
    pub fn new(j: u32, k: u64) -> Result<Self> {
        if j > 62 || k >= 1u64 << j {
            return invalid(format!("invalid Besov index (j={j}, k={k})"));
        }
        Ok(Self { j, k })
    }

    pub fn flat(&self) -> u64 {
        (1u64 << self.j) + self.k
    }

    pub fn from_flat(i: u64) -> Result<Self> {
        if i == 0 {
            return invalid("flat indices start at 1");
        }
        let j = 63 - i.leading_zeros();
        Ok(Self {
            j,
            k: i - (1u64 << j),
        })
    }
}

/// Where to put a spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Position {
    Index(u64),
    Besov(BesovIndex),
}

impl Position {
    pub fn flat(&self) -> Result<u64> {
        match *self {
            Position::Index(0) => invalid("indices start at 1"),
            Position::Index(i) => Ok(i),
            Position::Besov(b) => Ok(b.flat()),
        }
    }
}

/// `(Σ w_k^r)^{1/r}` scaled by the largest weight so that a single nonzero
/// term is returned exactly and large weights cannot overflow.
fn lr_norm(weights: &[f64], r: f64) -> f64 {
    let top = weights.iter().fold(0.0f64, |a, &b| a.max(b));
    if top == 0.0 {
        return 0.0;
    }
    if r.is_infinite() {
        return top;
    }
    let sum: KahanSum = weights.iter().map(|&w| (w / top).powf(r)).collect();
    top * sum.total().powf(1.0 / r)
}

/// The ball's sequence norm of `θ`.
pub fn ball_norm(spec: &BallSpec, theta: &CoefficientVector) -> f64 {
    let s = spec.s();
    match spec.kind {
        BallKind::Lp => {
            let w: Vec<f64> = theta
                .nonzeros()
                .map(|(i, x)| (i as f64).powf(s) * x.abs())
                .collect();
            lr_norm(&w, spec.p)
        }
        BallKind::Besov => {
            let mut levels: Vec<f64> = Vec::new();
            let mut current: Option<u32> = None;
            let mut within: Vec<f64> = Vec::new();
            let close = |level: u32, within: &mut Vec<f64>, levels: &mut Vec<f64>| {
                let scale = (level as f64 * s).exp2();
                levels.push(scale * lr_norm(within, spec.p));
                within.clear();
            };
            for (i, x) in theta.nonzeros() {
                let j = 63 - i.leading_zeros();
                if current != Some(j) {
                    if let Some(prev) = current {
                        close(prev, &mut within, &mut levels);
                    }
                    current = Some(j);
                }
                within.push(x.abs());
            }
            if let Some(prev) = current {
                close(prev, &mut within, &mut levels);
            }
            lr_norm(&levels, spec.q)
        }
    }
}

/// `ball_norm(spec, θ) ≤ M`, compared exactly.
pub fn contains(spec: &BallSpec, theta: &CoefficientVector) -> bool {
    ball_norm(spec, theta) <= spec.m
}

/// The quadratically convex hull: the `p = 2` ball with smoothness `s`.
/// Balls with `p ≥ 2` are returned unchanged.
pub fn quadratic_hull(spec: &BallSpec) -> BallSpec {
    if spec.p >= 2.0 {
        return *spec;
    }
    BallSpec {
        p: 2.0,
        alpha: spec.s(),
        ..*spec
    }
}

/// Largest value `≤ h` for which `make(value)` lies in the ball.
fn saturate(spec: &BallSpec, mut h: f64, make: impl Fn(f64) -> CoefficientVector) -> f64 {
    // The closed-form height is off by at most a few ulps.
    for _ in 0..64 {
        if contains(spec, &make(h)) {
            return h;
        }
        h = h.next_down();
    }
    // Far off: shrink geometrically, then give up on exactness.
    while !contains(spec, &make(h)) && h > 0.0 {
        h *= 1.0 - 1e-12;
    }
    h
}

/// Height of the single-spike extreme point at flat index `i`.
fn spike_height(spec: &BallSpec, i: u64) -> f64 {
    let s = spec.s();
    match spec.kind {
        BallKind::Lp => spec.m * (i as f64).powf(-s),
        BallKind::Besov => {
            let j = 63 - i.leading_zeros();
            spec.m * (-(j as f64) * s).exp2()
        }
    }
}

/// A single coefficient at `position` whose height puts it on the sphere
/// of radius `M` (to the last ulp, never outside).
pub fn spike_config(spec: &BallSpec, position: Position) -> Result<CoefficientVector> {
    let i = position.flat()?;
    let h0 = spike_height(spec, i);
    let make = |h: f64| CoefficientVector::sparse(i, vec![(i, h)]).expect("valid spike");
    let h = saturate(spec, h0, make);
    CoefficientVector::sparse(i, vec![(i, h)])
}

/// `k` equal coefficients `h` at indices `start..start+k`.
fn run_vector(start: u64, k: u64, h: f64) -> CoefficientVector {
    let entries = (0..k).map(|d| (start + d, h)).collect();
    CoefficientVector::sparse(start + k - 1, entries).expect("valid run")
}

/// Largest `k ≤ cap` such that the run of `k` coefficients `h` from `start`
/// stays in the ball; 0 if not even one fits.
fn max_run(spec: &BallSpec, start: u64, h: f64, cap: u64) -> u64 {
    if cap == 0 || !contains(spec, &run_vector(start, 1, h)) {
        return 0;
    }
    // Membership is monotone in k: grow geometrically then bisect.
    let mut lo = 1u64;
    let mut hi = 2u64;
    while hi <= cap && contains(spec, &run_vector(start, hi, h)) {
        lo = hi;
        hi *= 2;
    }
    let mut hi = hi.min(cap + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if contains(spec, &run_vector(start, mid, h)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest number of equal coefficients in one multi-spike configuration.
pub const MAX_RUN: u64 = 1 << 20;
/// Length of the dense polynomially decaying configuration.
pub const DENSE_LEN: u64 = 4096;

/// Deterministic list of ball members used as a surrogate for the
/// supremum over the ball, each with a short label:
///
/// - `zero`, `spike:1` (height `M` at index 1),
/// - `block:j`: the largest spike at the first index of block `j`,
/// - `multi:j:h`: as many equal coefficients as fit at the start of block
///   `j`, with `n h² ∈ {τⱼ/2, τⱼ, 2τⱼ}` (labels `half`, `one`, `two`),
/// - `dense`: `c i^{-(s+1/p+0.01)}` scaled onto the sphere.
///
/// Blocks are `(2^{j-1}m, 2^j m]` for `j = 1..=J*+2` with `τⱼ = 2j`.
pub fn adversarial_family_labeled(
    spec: &BallSpec,
    est: &EstimatorSpec,
    n: NoiseLevel,
) -> Vec<(String, CoefficientVector)> {
    let (m, j_star) = est.family_layout();
    let mut out = vec![
        ("zero".to_string(), CoefficientVector::zeros(0)),
        (
            "spike:1".to_string(),
            spike_config(spec, Position::Index(1)).expect("index 1"),
        ),
    ];
    let blocks = j_star + 2;
    let first_index = |j: u32| -> Option<u64> {
        (m as u128)
            .checked_shl(j - 1)
            .filter(|v| *v < u64::MAX as u128)
            .map(|v| v as u64 + 1)
    };
    for j in 1..=blocks {
        if let Some(b) = first_index(j) {
            out.push((
                format!("block:{j}"),
                spike_config(spec, Position::Index(b)).expect("block start"),
            ));
        }
    }
    for j in 1..=blocks {
        let Some(b) = first_index(j) else { continue };
        let tau = 2.0 * j as f64;
        let size = ((m as u128) << (j - 1)).min(MAX_RUN as u128) as u64;
        for (label, factor) in [("half", 0.5), ("one", 1.0), ("two", 2.0)] {
            let h = (factor * tau / n.get()).sqrt();
            let k = max_run(spec, b, h, size);
            if k > 0 {
                out.push((format!("multi:{j}:{label}"), run_vector(b, k, h)));
            }
        }
    }
    // Dense: the exponent makes the weighted p-th powers summable.
    let end = (m as u128) << j_star;
    let len = end.min(DENSE_LEN as u128) as u64;
    let decay = spec.s() + 1.0 / spec.p + 0.01;
    let base: Vec<f64> = (1..=len).map(|i| (i as f64).powf(-decay)).collect();
    let base = CoefficientVector::from_dense(base).expect("finite");
    let c0 = spec.m / ball_norm(spec, &base);
    let c = saturate(spec, c0, |c| base.scaled(c));
    out.push(("dense".to_string(), base.scaled(c)));
    out
}

/// [`adversarial_family_labeled`] without the labels.
pub fn adversarial_family(
    spec: &BallSpec,
    est: &EstimatorSpec,
    n: NoiseLevel,
) -> Vec<CoefficientVector> {
    adversarial_family_labeled(spec, est, n)
        .into_iter()
        .map(|(_, v)| v)
        .collect()
}
