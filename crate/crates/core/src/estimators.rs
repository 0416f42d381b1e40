//! The estimator family: the truncated quadratic `Q̂₁`, the block-thresholded
//! `Q̂(m)` and its tuned instances `Q̂₂ … Q̂₆`, the hard-threshold variant
//! `Q̃(m)` and general diagonal quadratic rules `Σ aᵢYᵢ² + c`.
//!
//! "log" in the tuning formulas is the natural logarithm; the block index of
//! coordinate `i > m` is `⌈log₂(i/m)⌉`, computed in integer arithmetic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::{centering_std, ThresholdKind};
use crate::error::{invalid, QfeError, Result};
use crate::model::{BallSpec, CoefficientVector, NoiseLevel};
use crate::sum::KahanSum;

/// Threshold schedules never reach beyond this index.
pub const MAX_SCHEDULE_END: u64 = 1 << 62;

/// Named constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorName {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
    QTilde,
}

impl EstimatorName {
    pub const ALL: [EstimatorName; 7] = [
        Self::Q1,
        Self::Q2,
        Self::Q3,
        Self::Q4,
        Self::Q5,
        Self::Q6,
        Self::QTilde,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Q1 => "q1",
            Self::Q2 => "q2",
            Self::Q3 => "q3",
            Self::Q4 => "q4",
            Self::Q5 => "q5",
            Self::Q6 => "q6",
            Self::QTilde => "qtilde",
        }
    }
}

impl fmt::Display for EstimatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorName {
    type Err = QfeError;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == lower)
            .ok_or_else(|| {
                QfeError::InvalidArgument(format!(
                    "unknown estimator '{s}' (expected one of q1..q6, qtilde)"
                ))
            })
    }
}

/// Optional tuning inputs for [`make_estimator`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    /// `γ > 1` for `Q̂₄`.
    pub gamma: Option<f64>,
    /// `0 < r < 1` for `Q̂₆`.
    pub r: Option<f64>,
    /// Replaces the formula for `m`.
    pub m_override: Option<u64>,
    /// Truncation point for the infinite tails of `Q̂₅`, `Q̂₆`. The schedule
    /// ends at the last block boundary `2^J m` not beyond it.
    pub truncate_at: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    Soft,
    Hard,
    None,
}

impl TailKind {
    pub fn threshold_kind(self) -> Option<ThresholdKind> {
        match self {
            TailKind::Soft => Some(ThresholdKind::Soft),
            TailKind::Hard => Some(ThresholdKind::Hard),
            TailKind::None => None,
        }
    }
}

/// Quadratic part `1..=m`, then blocks `(2^{j-1}m, 2^j m]` for
/// `j = 1..=j_star` thresholded at `τ = 2j` and centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    m: u64,
    j_star: u32,
    tail_kind: TailKind,
    /// Per-block centering at unit noise; divide by `n`.
    centering_unit: Vec<f64>,
}

impl ThresholdSchedule {
    pub fn new(m: u64, j_star: u32, tail_kind: TailKind) -> Result<Self> {
        if m == 0 {
            return invalid("m must be at least 1");
        }
        let fits = (m as u128) << j_star <= MAX_SCHEDULE_END as u128;
        if j_star > 62 || !fits {
            return invalid(format!(
                "schedule end m·2^j* = {m}·2^{j_star} exceeds {MAX_SCHEDULE_END}"
            ));
        }
        let centering_unit = match tail_kind.threshold_kind() {
            Some(kind) => (1..=j_star)
                .map(|j| centering_std(kind, 2.0 * j as f64))
                .collect(),
            None if j_star > 0 => return invalid("a schedule with blocks needs a tail kind"),
            None => Vec::new(),
        };
        Ok(Self {
            m,
            j_star,
            tail_kind,
            centering_unit,
        })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn j_star(&self) -> u32 {
        self.j_star
    }

    pub fn tail_kind(&self) -> TailKind {
        self.tail_kind
    }

    /// Last thresholded index `2^{j*} m`.
    pub fn end(&self) -> u64 {
        self.m << self.j_star
    }

    /// Block `j ≥ 1` containing `i`, `None` inside the quadratic part.
    /// Blocks past `j*` are reported too.
    pub fn block_of(&self, i: u64) -> Option<u32> {
        if i <= self.m {
            return None;
        }
        // Smallest j with m·2^j ≥ i, i.e. 2^j ≥ ⌈i/m⌉.
        let q = i.div_ceil(self.m);
        Some(64 - (q - 1).leading_zeros())
    }

    /// `(first, last)` indices of block `j`.
    pub fn block_range(&self, j: u32) -> (u64, u64) {
        ((self.m << (j - 1)) + 1, self.m << j)
    }

    /// `τᵢ = 2⌈log₂(i/m)⌉` for `i > m`, 0 in the quadratic part.
    pub fn tau(&self, i: u64) -> f64 {
        self.block_of(i).map_or(0.0, |j| 2.0 * j as f64)
    }

    /// Centering of block `j ∈ 1..=j*` at noise level `n`.
    pub fn block_centering(&self, j: u32, n: NoiseLevel) -> f64 {
        self.centering_unit[(j - 1) as usize] / n.get()
    }

    /// `μ_{n,i}` or `ρ_{n,i}`; 0 outside the thresholded range.
    pub fn centering(&self, i: u64, n: NoiseLevel) -> f64 {
        match self.block_of(i) {
            Some(j) if j <= self.j_star => self.block_centering(j, n),
            _ => 0.0,
        }
    }

    /// Same blocks, other tail rule.
    pub fn with_tail(&self, tail_kind: TailKind) -> Result<Self> {
        Self::new(self.m, self.j_star, tail_kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `Σ_{i≤m} (Yᵢ² - 1/n)`.
    Quadratic { m: u64 },
    Threshold(ThresholdSchedule),
    /// `Σ aᵢ Yᵢ² + c`.
    DiagQuad { a: Vec<f64>, c: f64 },
}

/// Where an estimator came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub name: Option<EstimatorName>,
    pub ball: Option<BallSpec>,
    pub n: Option<f64>,
    pub gamma: Option<f64>,
    pub r: Option<f64>,
    /// The tail is an infinite sum truncated at the schedule end.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub provenance: Provenance,
}

impl EstimatorSpec {
    pub fn quadratic(m: u64) -> Result<Self> {
        if m == 0 {
            return invalid("m must be at least 1");
        }
        Ok(Self {
            kind: EstimatorKind::Quadratic { m },
            provenance: Provenance::default(),
        })
    }

    pub fn threshold(schedule: ThresholdSchedule) -> Self {
        Self {
            kind: EstimatorKind::Threshold(schedule),
            provenance: Provenance::default(),
        }
    }

    pub fn diag_quad(a: Vec<f64>, c: f64) -> Result<Self> {
        if a.iter().any(|x| !x.is_finite()) || !c.is_finite() {
            return invalid("diagonal rule coefficients must be finite");
        }
        Ok(Self {
            kind: EstimatorKind::DiagQuad { a, c },
            provenance: Provenance::default(),
        })
    }

    pub fn schedule(&self) -> Option<&ThresholdSchedule> {
        match &self.kind {
            EstimatorKind::Threshold(s) => Some(s),
            _ => None,
        }
    }

    /// Number of observed coordinates `estimate` needs.
    pub fn required_length(&self) -> u64 {
        match &self.kind {
            EstimatorKind::Quadratic { m } => *m,
            EstimatorKind::Threshold(s) => s.end(),
            EstimatorKind::DiagQuad { a, .. } => a.len() as u64,
        }
    }

    /// `(m, J*)` used to lay out adversarial configurations; rules without a
    /// tail count as `J* = 0`.
    pub fn family_layout(&self) -> (u64, u32) {
        match &self.kind {
            EstimatorKind::Quadratic { m } => (*m, 0),
            EstimatorKind::Threshold(s) => (s.m(), s.j_star()),
            EstimatorKind::DiagQuad { a, .. } => ((a.len() as u64).max(1), 0),
        }
    }

    /// The quadratic estimator unrolled as a diagonal rule.
    pub fn to_diag_quad(&self, n: NoiseLevel) -> Option<Self> {
        match &self.kind {
            EstimatorKind::Quadratic { m } => Some(Self {
                kind: EstimatorKind::DiagQuad {
                    a: vec![1.0; *m as usize],
                    c: -(*m as f64) / n.get(),
                },
                provenance: self.provenance.clone(),
            }),
            EstimatorKind::DiagQuad { .. } => Some(self.clone()),
            EstimatorKind::Threshold(_) => None,
        }
    }

    /// Bound on `Σ_{i > end} θᵢ²` over the provenance ball for truncated
    /// infinite tails, summing the per-block bound `M² 2^{-2js} m^{-2s}` past
    /// the schedule end. Zero otherwise.
    pub fn truncation_bias_bound(&self) -> f64 {
        match (&self.kind, &self.provenance) {
            (
                EstimatorKind::Threshold(s),
                Provenance {
                    truncated: true,
                    ball: Some(ball),
                    ..
                },
            ) => {
                let two_s = 2.0 * ball.s();
                ball.m * ball.m * (s.end() as f64).powf(-two_s) / (1.0 - (-two_s).exp2())
            }
            _ => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match (&self.provenance.name, &self.kind) {
            (Some(name), _) => name.to_string(),
            (None, EstimatorKind::Quadratic { m }) => format!("quadratic(m={m})"),
            (None, EstimatorKind::Threshold(s)) => {
                format!("threshold(m={}, j*={})", s.m(), s.j_star())
            }
            (None, EstimatorKind::DiagQuad { a, .. }) => format!("diag(len={})", a.len()),
        }
    }
}

/// `max(1, ⌊x⌋)`, treating values within `10⁻⁹` relative of an integer as
/// that integer so that e.g. `1024^{1.2}` yields 4096.
pub fn integral_m(x: f64) -> Result<u64> {
    if !(x.is_finite() && x > 0.0) {
        return invalid(format!("m formula produced {x}"));
    }
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r
    } else {
        x.floor()
    };
    if v >= MAX_SCHEDULE_END as f64 {
        return invalid(format!("m = {x} exceeds {MAX_SCHEDULE_END}"));
    }
    Ok((v as u64).max(1))
}

/// Largest `J ≥ 0` with `2^J m ≤ bound`; 0 when the first block already
/// violates the bound. Capped so that the schedule ends by
/// [`MAX_SCHEDULE_END`].
pub fn solve_j_star(m: u64, bound: f64) -> u32 {
    let mut j = 0u32;
    loop {
        let next = (m as u128) << (j + 1);
        if next > MAX_SCHEDULE_END as u128 || next as f64 > bound {
            return j;
        }
        j += 1;
    }
}

/// `J` of the longest schedule ending at or before `limit`.
fn j_for_end(m: u64, limit: u64) -> u32 {
    solve_j_star(m, limit.min(MAX_SCHEDULE_END) as f64)
}

fn need_ball(name: EstimatorName, ball: Option<&BallSpec>) -> Result<&BallSpec> {
    ball.ok_or_else(|| QfeError::InvalidArgument(format!("{name} needs a ball specification")))
}

/// Builds one of the named estimators for noise level `n`.
///
/// | name | m | tail end |
/// |---|---|---|
/// | q1 | `n / ln n` | none |
/// | q2 | `n / ln n` | `2^J m ≤ n^{1/(4s)} ln n` |
/// | q3 | `n^{p/(1+2ps)}` | as q2 |
/// | q4 | `n / ln n` | `2^J m ≤ n^γ ln n` |
/// | q5 | `n / ln n` | infinite, truncated |
/// | q6 | `n^{2-r}` | infinite, truncated |
/// | qtilde | q2's m if `α > 1/(2p)`, else q3's | as q2, hard threshold |
pub fn make_estimator(
    name: EstimatorName,
    ball: Option<&BallSpec>,
    n: NoiseLevel,
    params: EstimatorParams,
) -> Result<EstimatorSpec> {
    let nf = n.get();
    let ln_n = nf.ln();
    let parametric_m = || -> Result<u64> {
        if !(nf > 1.0) {
            return invalid(format!("{name} needs n > 1 (m = n / ln n), got {nf}"));
        }
        integral_m(nf / ln_n)
    };
    let q3_m = |ball: &BallSpec| integral_m(nf.powf(ball.p / (1.0 + 2.0 * ball.p * ball.s())));
    let standard_bound = |ball: &BallSpec| nf.powf(1.0 / (4.0 * ball.s())) * ln_n;
    let pick_m = |formula: &dyn Fn() -> Result<u64>| -> Result<u64> {
        match params.m_override {
            Some(0) => invalid("m_override must be at least 1"),
            Some(m) => Ok(m),
            None => formula(),
        }
    };

    let mut provenance = Provenance {
        name: Some(name),
        ball: ball.copied(),
        n: Some(nf),
        ..Provenance::default()
    };
    let kind = match name {
        EstimatorName::Q1 => EstimatorKind::Quadratic {
            m: pick_m(&parametric_m)?,
        },
        EstimatorName::Q2 | EstimatorName::Q3 | EstimatorName::QTilde => {
            let ball = need_ball(name, ball)?;
            let m = match name {
                EstimatorName::Q2 => pick_m(&parametric_m)?,
                EstimatorName::Q3 => pick_m(&|| q3_m(ball))?,
                _ if ball.alpha > 1.0 / (2.0 * ball.p) => pick_m(&parametric_m)?,
                _ => pick_m(&|| q3_m(ball))?,
            };
            let tail = if name == EstimatorName::QTilde {
                TailKind::Hard
            } else {
                TailKind::Soft
            };
            let j_star = solve_j_star(m, standard_bound(ball));
            EstimatorKind::Threshold(ThresholdSchedule::new(m, j_star, tail)?)
        }
        EstimatorName::Q4 => {
            let gamma = params
                .gamma
                .ok_or_else(|| QfeError::InvalidArgument("q4 needs gamma".into()))?;
            if !(gamma > 1.0 && gamma.is_finite()) {
                return invalid(format!("q4 needs gamma > 1, got {gamma}"));
            }
            provenance.gamma = Some(gamma);
            let m = pick_m(&parametric_m)?;
            let j_star = solve_j_star(m, nf.powf(gamma) * ln_n);
            EstimatorKind::Threshold(ThresholdSchedule::new(m, j_star, TailKind::Soft)?)
        }
        EstimatorName::Q5 | EstimatorName::Q6 => {
            let m = if name == EstimatorName::Q5 {
                pick_m(&parametric_m)?
            } else {
                let r = params
                    .r
                    .ok_or_else(|| QfeError::InvalidArgument("q6 needs r".into()))?;
                if !(r > 0.0 && r < 1.0) {
                    return invalid(format!("q6 needs 0 < r < 1, got {r}"));
                }
                provenance.r = Some(r);
                pick_m(&|| integral_m(nf.powf(2.0 - r)))?
            };
            let limit = params.truncate_at.unwrap_or(MAX_SCHEDULE_END);
            if limit < m {
                return invalid(format!("truncation point {limit} is below m = {m}"));
            }
            provenance.truncated = true;
            let j_star = j_for_end(m, limit);
            EstimatorKind::Threshold(ThresholdSchedule::new(m, j_star, TailKind::Soft)?)
        }
    };
    Ok(EstimatorSpec { kind, provenance })
}

pub(crate) fn check_noise(spec: &EstimatorSpec, n: NoiseLevel) -> Result<()> {
    match spec.provenance.n {
        Some(expected) if expected != n.get() => Err(QfeError::NoiseMismatch {
            expected,
            actual: n.get(),
        }),
        _ => Ok(()),
    }
}

/// Evaluates the estimator on observations `y`.
pub fn estimate(spec: &EstimatorSpec, y: &CoefficientVector, n: NoiseLevel) -> Result<f64> {
    check_noise(spec, n)?;
    let required = spec.required_length();
    if y.len() < required {
        return Err(QfeError::ObservationTooShort {
            required,
            actual: y.len(),
        });
    }
    let owned;
    let values: &[f64] = match y.as_dense() {
        Some(v) => v,
        None => {
            owned = y.to_dense()?;
            &owned
        }
    };
    Ok(estimate_slice(spec, values, n))
}

/// [`estimate`] on a slice already known to be long enough.
pub(crate) fn estimate_slice(spec: &EstimatorSpec, y: &[f64], n: NoiseLevel) -> f64 {
    let nf = n.get();
    let squares = |range: &[f64]| range.iter().map(|v| v * v).collect::<KahanSum>().total();
    match &spec.kind {
        EstimatorKind::Quadratic { m } => squares(&y[..*m as usize]) + -(*m as f64) / nf,
        EstimatorKind::DiagQuad { a, c } => {
            let sum: KahanSum = a.iter().zip(y).map(|(a, v)| a * (v * v)).collect();
            sum.total() + c
        }
        EstimatorKind::Threshold(s) => {
            let m = s.m() as usize;
            let mut total = squares(&y[..m]) + -(m as f64) / nf;
            for j in 1..=s.j_star() {
                let (lo, hi) = s.block_range(j);
                let block = &y[(lo - 1) as usize..hi as usize];
                let t = 2.0 * j as f64 / nf;
                let sum: KahanSum = match s.tail_kind() {
                    TailKind::Soft => block.iter().map(|v| (v * v - t).max(0.0)).collect(),
                    TailKind::Hard => block
                        .iter()
                        .map(|v| {
                            let v2 = v * v;
                            if v2 > t {
                                v2
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                    TailKind::None => KahanSum::new(),
                };
                total += sum.total() - block.len() as f64 * s.block_centering(j, n);
            }
            total
        }
    }
}

/// The `α` on the constraint curve `p/(1+2ps) = 2 - r` for given `p`.
pub fn omega_r_alpha(p: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return invalid(format!("r must lie in (0, 1), got {r}"));
    }
    if !(p > 0.0 && p < 2.0) {
        return invalid(format!("p must lie in (0, 2), got {p}"));
    }
    let s = (p / (2.0 - r) - 1.0) / (2.0 * p);
    if !(s > 0.0) {
        return invalid(format!("no solution with s > 0 for p = {p}, r = {r}"));
    }
    let alpha = s - 0.5 + 1.0 / p;
    if !(alpha > 0.0 && alpha < 1.0 / (2.0 * p)) {
        return invalid(format!(
            "alpha = {alpha} falls outside (0, 1/(2p)) for p = {p}, r = {r}"
        ));
    }
    Ok(alpha)
}

/// The `α` above which `Q̂₄` is fully efficient:
/// `1/(2p) + (1/(2p) - 1/2 + 1/(4γ))_+`.
pub fn q4_efficiency_region(p: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return invalid(format!("p must lie in (0, 2), got {p}"));
    }
    if !(gamma > 1.0) {
        return invalid(format!("gamma must exceed 1, got {gamma}"));
    }
    let half_p = 1.0 / (2.0 * p);
    Ok(half_p + (half_p - 0.5 + 1.0 / (4.0 * gamma)).max(0.0))
}
