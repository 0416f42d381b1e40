//! Testing `H₀: θ = 0` against `Σθᵢ² ≥ a` with the test that rejects when an
//! estimate exceeds `a/2`: empirical error rates, calibration of the
//! smallest detectable `a`, and the testing rate exponent.
//!
//! Threshold schedules can cover billions of coordinates, so the simulator
//! never materialises an observation. Per replicate it draws
//!
//! - the quadratic part as `((Z + √λ)² + χ²_{m-1}) / n`, where `λ = nΣ_{i≤m}θᵢ²`;
//! - for each block, the tail coordinates outside every alternative's
//!   support through their sufficient statistics: the number `K` of
//!   threshold exceedances is binomial and each exceedance is a normal
//!   conditioned on the tail (beyond 512 exceedances the block sum is drawn
//!   from its normal limit with the exact conditional moments);
//! - the remaining tail coordinates explicitly, with one noise draw per
//!   coordinate shared by all alternatives.

use rand_distr::{Binomial, ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::analytics::{gauss_upper_tail, moments_std, ThresholdKind};
use crate::error::{invalid, QfeError, Result};
use crate::estimators::{check_noise, EstimatorKind, EstimatorSpec};
use crate::model::{
    adversarial_family_labeled, quadratic_functional, BallSpec, CoefficientVector, NoiseLevel,
    MAX_DENSE_LEN,
};
use crate::risklab::run_replicates;
use crate::rng::{standard_normal, upper_tail_normal, RandomStreamId};
use crate::sum::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// Rejects `H₀` iff `q_hat > a/2`.
pub fn decide(q_hat: f64, a: f64) -> Result<Decision> {
    if !(a > 0.0) {
        return invalid(format!("a must be positive, got {a}"));
    }
    Ok(if q_hat > 0.5 * a {
        Decision::Reject
    } else {
        Decision::Accept
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub type1: f64,
    pub max_type2: f64,
    pub sum: f64,
    pub replicates: u64,
    pub a: f64,
    /// Acceptance rate under each alternative, in input order.
    pub type2: Vec<f64>,
}

/// Exceedance counts above this are summed through the normal limit.
pub const EXACT_EXCEEDANCES: u64 = 512;

#[derive(Debug, Clone, Copy)]
struct Block {
    /// `τ/n`
    t: f64,
    sqrt_tau: f64,
    /// Coordinates outside the explicit set.
    free: u64,
    p_exceed: f64,
    /// Mean and variance of one exceedance's contribution, unit noise.
    cond_mean: f64,
    cond_var: f64,
}

enum Mode {
    /// Quadratic part of length `m` plus thresholded blocks.
    Blocks {
        m: u64,
        kind: ThresholdKind,
        blocks: Vec<Block>,
        /// `-m/n - Σ_j |B_j| c_j`.
        shift: f64,
    },
    /// General diagonal rule, simulated coordinate by coordinate.
    Diagonal { a: Vec<f64>, c: f64 },
}

/// One alternative in simulator coordinates.
#[derive(Debug, Clone)]
struct Alt {
    /// `n Σ_{i≤m} θᵢ²` (block mode only).
    lambda: f64,
    /// `(position in the explicit set, θᵢ)`.
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct BaseDraw {
    z1: f64,
    chi: f64,
    tail: f64,
}

/// Seed-deterministic simulator of an estimator's null and alternative
/// distributions. The null draws are made once; every call to
/// [`DetectionSimulator::alternative_estimates`] replays the same streams.
pub struct DetectionSimulator<'a> {
    spec: &'a EstimatorSpec,
    n: NoiseLevel,
    replicates: u64,
    seed: u64,
    workers: usize,
    mode: Mode,
    /// Explicitly simulated coordinates (sorted) and their block.
    explicit: Vec<u64>,
    explicit_block: Vec<u32>,
    base: Vec<BaseDraw>,
    null: Vec<f64>,
}

const EXPLICIT_STREAM: u64 = 1 << 63;

impl<'a> DetectionSimulator<'a> {
    /// `supports` lists every coordinate any alternative will ever touch.
    pub fn new(
        spec: &'a EstimatorSpec,
        n: NoiseLevel,
        supports: &[&CoefficientVector],
        replicates: u64,
        seed: u64,
        workers: usize,
    ) -> Result<Self> {
        check_noise(spec, n)?;
        if replicates < 2 {
            return invalid(format!("need at least 2 replicates, got {replicates}"));
        }
        let nf = n.get();
        let (mode, explicit, explicit_block) = match &spec.kind {
            EstimatorKind::DiagQuad { a, c } => {
                if a.len() as u64 > MAX_DENSE_LEN {
                    return invalid("diagonal rule too long to simulate");
                }
                (
                    Mode::Diagonal {
                        a: a.clone(),
                        c: *c,
                    },
                    Vec::new(),
                    Vec::new(),
                )
            }
            EstimatorKind::Quadratic { m } => (
                Mode::Blocks {
                    m: *m,
                    kind: ThresholdKind::Soft,
                    blocks: Vec::new(),
                    shift: -(*m as f64) / nf,
                },
                Vec::new(),
                Vec::new(),
            ),
            EstimatorKind::Threshold(s) => {
                let kind = s.tail_kind().threshold_kind().unwrap_or(ThresholdKind::Soft);
                let j_star = if s.tail_kind().threshold_kind().is_some() {
                    s.j_star()
                } else {
                    0
                };
                let end = s.m() << j_star;
                let mut explicit: Vec<u64> = supports
                    .iter()
                    .flat_map(|v| v.nonzeros().map(|(i, _)| i))
                    .filter(|&i| i > s.m() && i <= end)
                    .collect();
                explicit.sort_unstable();
                explicit.dedup();
                let explicit_block: Vec<u32> = explicit
                    .iter()
                    .map(|&i| s.block_of(i).expect("tail index"))
                    .collect();
                let mut shift = KahanSum::new();
                shift.add(-(s.m() as f64) / nf);
                let mut blocks = Vec::with_capacity(j_star as usize);
                for j in 1..=j_star {
                    let (lo, hi) = s.block_range(j);
                    let size = hi - lo + 1;
                    let taken = explicit_block.iter().filter(|&&b| b == j).count() as u64;
                    let tau = 2.0 * j as f64;
                    let zero = moments_std(kind, 0.0, tau);
                    let p = 2.0 * gauss_upper_tail(tau.sqrt());
                    let cond_mean = zero.m1 / p;
                    let cond_var = (zero.m2 / p - cond_mean * cond_mean).max(0.0);
                    shift.add(-(size as f64) * s.block_centering(j, n));
                    blocks.push(Block {
                        t: tau / nf,
                        sqrt_tau: tau.sqrt(),
                        free: size - taken,
                        p_exceed: p,
                        cond_mean,
                        cond_var,
                    });
                }
                (
                    Mode::Blocks {
                        m: s.m(),
                        kind,
                        blocks,
                        shift: shift.total(),
                    },
                    explicit,
                    explicit_block,
                )
            }
        };
        let mut sim = Self {
            spec,
            n,
            replicates,
            seed,
            workers,
            mode,
            explicit,
            explicit_block,
            base: Vec::new(),
            null: Vec::new(),
        };
        sim.draw_base()?;
        let null_alt = Alt {
            lambda: 0.0,
            entries: Vec::new(),
        };
        sim.null = sim.run(&[null_alt])?.pop().expect("one row");
        Ok(sim)
    }

    pub fn replicates(&self) -> u64 {
        self.replicates
    }

    /// Estimates under `θ = 0`, in replicate order.
    pub fn null_estimates(&self) -> &[f64] {
        &self.null
    }

    fn draw_base(&mut self) -> Result<()> {
        let Mode::Blocks { m, kind, blocks, .. } = &self.mode else {
            return Ok(());
        };
        let chi = if *m > 1 {
            Some(ChiSquared::new((*m - 1) as f64).map_err(|e| QfeError::InvalidArgument(e.to_string()))?)
        } else {
            None
        };
        let nf = self.n.get();
        let seed = self.seed;
        let kind = *kind;
        let blocks = blocks.clone();
        let draw = |r: u64| -> Result<BaseDraw> {
            let mut rng = RandomStreamId::new(seed, r).rng();
            let z1 = standard_normal(&mut rng);
            let chi = chi.as_ref().map_or(0.0, |c| c.sample(&mut rng));
            let mut tail = KahanSum::new();
            for b in &blocks {
                if b.free == 0 {
                    continue;
                }
                let k = Binomial::new(b.free, b.p_exceed)
                    .map_err(|e| QfeError::InvalidArgument(e.to_string()))?
                    .sample(&mut rng);
                if k == 0 {
                    continue;
                }
                let unit = if k <= EXACT_EXCEEDANCES {
                    let mut s = 0.0;
                    for _ in 0..k {
                        let z = upper_tail_normal(&mut rng, b.sqrt_tau);
                        let z2 = z * z;
                        s += match kind {
                            ThresholdKind::Soft => z2 - b.sqrt_tau * b.sqrt_tau,
                            ThresholdKind::Hard => z2,
                        };
                    }
                    s
                } else {
                    let kf = k as f64;
                    kf * b.cond_mean + (kf * b.cond_var).sqrt() * standard_normal(&mut rng)
                };
                tail.add(unit / nf);
            }
            Ok(BaseDraw {
                z1,
                chi,
                tail: tail.total(),
            })
        };
        // Draws are per-replicate streams, so order of evaluation is free.
        let mut base = Vec::with_capacity(self.replicates as usize);
        let mut failure = None;
        let tails = run_replicates(self.replicates, self.workers, &|r| match draw(r) {
            Ok(b) => b.tail,
            Err(_) => f64::NAN,
        })?;
        for (r, tail) in tails.into_iter().enumerate() {
            if tail.is_nan() {
                failure = Some(draw(r as u64).err());
                break;
            }
            let mut rng = RandomStreamId::new(seed, r as u64).rng();
            let z1 = standard_normal(&mut rng);
            let chi = chi.as_ref().map_or(0.0, |c| c.sample(&mut rng));
            base.push(BaseDraw { z1, chi, tail });
        }
        if let Some(Some(e)) = failure {
            return Err(e);
        }
        self.base = base;
        Ok(())
    }

    fn to_alt(&self, theta: &CoefficientVector) -> Result<Alt> {
        let nf = self.n.get();
        match &self.mode {
            Mode::Blocks { m, .. } => {
                let mut lambda = KahanSum::new();
                let mut entries = Vec::new();
                for (i, x) in theta.nonzeros() {
                    if i <= *m {
                        lambda.add(nf * x * x);
                    } else if let Ok(pos) = self.explicit.binary_search(&i) {
                        entries.push((pos, x));
                    } else if self.explicit.last().is_some_and(|&l| i < l)
                        || self.spec.required_length() >= i
                    {
                        return invalid(format!(
                            "coordinate {i} was not declared when the simulator was built"
                        ));
                    }
                }
                Ok(Alt {
                    lambda: lambda.total(),
                    entries,
                })
            }
            Mode::Diagonal { a, .. } => {
                let entries = theta
                    .nonzeros()
                    .filter(|(i, _)| *i as usize <= a.len())
                    .map(|(i, x)| ((i - 1) as usize, x))
                    .collect();
                Ok(Alt {
                    lambda: 0.0,
                    entries,
                })
            }
        }
    }

    /// Estimates under each alternative, one row per alternative.
    pub fn alternative_estimates(&self, thetas: &[&CoefficientVector]) -> Result<Vec<Vec<f64>>> {
        let alts = thetas
            .iter()
            .map(|t| self.to_alt(t))
            .collect::<Result<Vec<_>>>()?;
        self.run(&alts)
    }

    fn run(&self, alts: &[Alt]) -> Result<Vec<Vec<f64>>> {
        let k = alts.len();
        if k == 0 {
            return Ok(Vec::new());
        }
        let nf = self.n.get();
        let sigma = self.n.sigma();
        let seed = self.seed;
        // Flattened replicate-major results: index r * k + a.
        let per_rep = |r: u64| -> Vec<f64> {
            match &self.mode {
                Mode::Diagonal { a, c } => {
                    let mut rng = RandomStreamId::new(seed, r).rng();
                    let z: Vec<f64> = (0..a.len()).map(|_| standard_normal(&mut rng)).collect();
                    let null: KahanSum = a
                        .iter()
                        .zip(&z)
                        .map(|(ai, zi)| {
                            let y = sigma * zi;
                            ai * (y * y)
                        })
                        .collect();
                    let null = null.total();
                    alts.iter()
                        .map(|alt| {
                            let mut d = 0.0;
                            for &(pos, x) in &alt.entries {
                                let y0 = sigma * z[pos];
                                let y = x + y0;
                                d += a[pos] * (y * y - y0 * y0);
                            }
                            null + d + c
                        })
                        .collect()
                }
                Mode::Blocks { kind, blocks, shift, .. } => {
                    let b = self.base[r as usize];
                    let g = |y: f64, t: f64| -> f64 {
                        let y2 = y * y;
                        match kind {
                            ThresholdKind::Soft => (y2 - t).max(0.0),
                            ThresholdKind::Hard => {
                                if y2 > t {
                                    y2
                                } else {
                                    0.0
                                }
                            }
                        }
                    };
                    let mut z = Vec::new();
                    let mut s0 = 0.0;
                    if !self.explicit.is_empty() {
                        let mut rng = RandomStreamId::new(seed, r | EXPLICIT_STREAM).rng();
                        z = (0..self.explicit.len())
                            .map(|_| sigma * standard_normal(&mut rng))
                            .collect();
                        let sum: KahanSum = z
                            .iter()
                            .zip(&self.explicit_block)
                            .map(|(y, &j)| g(*y, blocks[(j - 1) as usize].t))
                            .collect();
                        s0 = sum.total();
                    }
                    alts.iter()
                        .map(|alt| {
                            let root = alt.lambda.sqrt();
                            let quad = ((b.z1 + root) * (b.z1 + root) + b.chi) / nf;
                            let mut d = 0.0;
                            for &(pos, x) in &alt.entries {
                                let t = blocks[(self.explicit_block[pos] - 1) as usize].t;
                                d += g(x + z[pos], t) - g(z[pos], t);
                            }
                            quad + shift + b.tail + s0 + d
                        })
                        .collect()
                }
            }
        };
        // run_replicates returns scalars; gather rows through an index trick.
        let mut rows = vec![Vec::with_capacity(self.replicates as usize); k];
        let flat = collect_rows(self.replicates, self.workers, &per_rep)?;
        for rep in flat {
            for (row, v) in rows.iter_mut().zip(rep) {
                row.push(v);
            }
        }
        Ok(rows)
    }
}

fn collect_rows<F>(replicates: u64, workers: usize, f: &F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Vec<f64> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers != 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| QfeError::InvalidArgument(format!("thread pool: {e}")))?;
            return Ok(pool.install(|| (0..replicates).into_par_iter().map(f).collect()));
        }
    }
    let _ = workers;
    Ok((0..replicates).map(f).collect())
}

fn rate(estimates: &[f64], a: f64, reject: bool) -> f64 {
    let half = 0.5 * a;
    let count = estimates.iter().filter(|&&q| (q > half) == reject).count();
    count as f64 / estimates.len() as f64
}

fn outcome(null: &[f64], alts: &[Vec<f64>], a: f64, replicates: u64) -> TestOutcome {
    let type1 = rate(null, a, true);
    let type2: Vec<f64> = alts.iter().map(|row| rate(row, a, false)).collect();
    let max_type2 = type2.iter().copied().fold(0.0, f64::max);
    TestOutcome {
        type1,
        max_type2,
        sum: type1 + max_type2,
        replicates,
        a,
        type2,
    }
}

/// Empirical type I error at `θ = 0` and the largest type II error over the
/// alternatives, each alternative required to satisfy `Q(θ) ≥ a`.
pub fn error_rates(
    spec: &EstimatorSpec,
    n: NoiseLevel,
    a: f64,
    alternatives: &[CoefficientVector],
    replicates: u64,
    master_seed: u64,
) -> Result<TestOutcome> {
    error_rates_with_workers(spec, n, a, alternatives, replicates, master_seed, 0)
}

pub fn error_rates_with_workers(
    spec: &EstimatorSpec,
    n: NoiseLevel,
    a: f64,
    alternatives: &[CoefficientVector],
    replicates: u64,
    master_seed: u64,
    workers: usize,
) -> Result<TestOutcome> {
    if !(a > 0.0) {
        return invalid(format!("a must be positive, got {a}"));
    }
    if replicates < 100 {
        return invalid(format!("need at least 100 replicates, got {replicates}"));
    }
    for (k, alt) in alternatives.iter().enumerate() {
        let q = quadratic_functional(alt);
        if q < a {
            return invalid(format!(
                "alternative {k} has Q = {q} below a = {a}"
            ));
        }
    }
    let refs: Vec<&CoefficientVector> = alternatives.iter().collect();
    let sim = DetectionSimulator::new(spec, n, &refs, replicates, master_seed, workers)?;
    let rows = sim.alternative_estimates(&refs)?;
    Ok(outcome(sim.null_estimates(), &rows, a, replicates))
}

/// Result of the bisection for the smallest detectable `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Smallest bisection point found with error sum `≤ γ`.
    pub a: f64,
    /// Largest point known to violate, or the bracket's lower end if even
    /// that passes.
    pub lower: f64,
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub gamma: f64,
    pub outcome: TestOutcome,
}

pub const CALIBRATION_ITERATIONS: u32 = 20;

/// Geometric bisection over `[n⁻², M²]` for the smallest `a` whose error sum
/// is at most `γ`. Alternatives at level `a` are the adversarial-family
/// members with `Q(θ) ≥ a`, shrunk onto `Q(θ) = a`; members below `a` are
/// dropped.
pub fn calibrate_a(
    spec: &EstimatorSpec,
    n: NoiseLevel,
    gamma: f64,
    ball: &BallSpec,
    replicates: u64,
    master_seed: u64,
) -> Result<Calibration> {
    calibrate_a_with_workers(spec, n, gamma, ball, replicates, master_seed, 0)
}

pub fn calibrate_a_with_workers(
    spec: &EstimatorSpec,
    n: NoiseLevel,
    gamma: f64,
    ball: &BallSpec,
    replicates: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Calibration> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return invalid(format!("gamma must lie in (0, 1), got {gamma}"));
    }
    if replicates < 100 {
        return invalid(format!("need at least 100 replicates, got {replicates}"));
    }
    let family: Vec<(CoefficientVector, f64)> = adversarial_family_labeled(ball, spec, n)
        .into_iter()
        .map(|(_, v)| {
            let q = quadratic_functional(&v);
            (v, q)
        })
        .filter(|(_, q)| *q > 0.0)
        .collect();
    let supports: Vec<&CoefficientVector> = family.iter().map(|(v, _)| v).collect();
    let sim = DetectionSimulator::new(spec, n, &supports, replicates, master_seed, workers)?;

    let evaluate = |a: f64| -> Result<TestOutcome> {
        let alts: Vec<CoefficientVector> = family
            .iter()
            .filter(|(_, q)| *q >= a)
            .map(|(v, q)| v.scaled((a / q).sqrt()))
            .collect();
        let refs: Vec<&CoefficientVector> = alts.iter().collect();
        let rows = sim.alternative_estimates(&refs)?;
        Ok(outcome(sim.null_estimates(), &rows, a, replicates))
    };

    let lo0 = 1.0 / (n.get() * n.get());
    let hi0 = ball.m * ball.m;
    if !(lo0 < hi0) {
        return invalid(format!("empty bracket [{lo0}, {hi0}]"));
    }
    let top = evaluate(hi0)?;
    if top.sum > gamma {
        return Err(QfeError::Calibration(format!(
            "error sum {} exceeds gamma = {gamma} even at a = M² = {hi0}",
            top.sum
        )));
    }
    let bottom = evaluate(lo0)?;
    if bottom.sum <= gamma {
        return Ok(Calibration {
            a: lo0,
            lower: lo0,
            bracket: (lo0, hi0),
            iterations: 0,
            gamma,
            outcome: bottom,
        });
    }
    let (mut lo, mut hi, mut best) = (lo0, hi0, top);
    for _ in 0..CALIBRATION_ITERATIONS {
        let mid = (lo * hi).sqrt();
        let out = evaluate(mid)?;
        if out.sum <= gamma {
            hi = mid;
            best = out;
        } else {
            lo = mid;
        }
    }
    Ok(Calibration {
        a: hi,
        lower: lo,
        bracket: (lo0, hi0),
        iterations: CALIBRATION_ITERATIONS,
        gamma,
        outcome: best,
    })
}

/// `1 - p/(2(1+2ps))`, the exponent of the optimal detection boundary
/// `n^{-r}` for `p < 2`, `α ≤ 1/(2p)`.
pub fn testing_exponent(p: f64, alpha: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return invalid(format!("the testing exponent needs 0 < p < 2, got {p}"));
    }
    if !(alpha > 0.0 && alpha <= 1.0 / (2.0 * p)) {
        return invalid(format!(
            "the testing exponent needs 0 < alpha <= 1/(2p) = {}, got {alpha}",
            1.0 / (2.0 * p)
        ));
    }
    let s = alpha + 0.5 - 1.0 / p;
    if !(s > 0.0) {
        return invalid(format!("s = alpha + 1/2 - 1/p must be positive, got {s}"));
    }
    Ok(1.0 - p / (2.0 * (1.0 + 2.0 * p * s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{make_estimator, EstimatorName, TailKind, ThresholdSchedule};

    #[test]
    fn decide_boundary() {
        assert_eq!(decide(0.3, 0.5).unwrap(), Decision::Reject);
        assert_eq!(decide(0.25, 0.5).unwrap(), Decision::Accept);
        assert_eq!(decide(-1.0, 1e-9).unwrap(), Decision::Accept);
        assert!(decide(1.0, 0.0).is_err());
    }

    #[test]
    fn testing_exponent_examples() {
        assert!((testing_exponent(1.5, 0.25).unwrap() - 0.4).abs() < 1e-15);
        assert!(testing_exponent(1.5, 0.5).is_err());
    }

    #[test]
    fn null_matches_explicit_simulation_in_distribution() {
        // Small schedule: sufficient-statistic null vs full simulation.
        let s = ThresholdSchedule::new(8, 3, TailKind::Soft).unwrap();
        let spec = EstimatorSpec::threshold(s);
        let n = NoiseLevel::new(50.0).unwrap();
        let sim = DetectionSimulator::new(&spec, n, &[], 20_000, 5, 1).unwrap();
        let null = sim.null_estimates();
        let mean = null.iter().sum::<f64>() / null.len() as f64;
        let var = null.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / null.len() as f64;
        let exact = crate::risklab::exact_risk(&spec, &CoefficientVector::zeros(0), n).unwrap();
        let se = (exact.variance / null.len() as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean} se {se}");
        assert!((var / exact.variance - 1.0).abs() < 0.05, "{var} vs {}", exact.variance);
    }

    #[test]
    fn alternative_mean_matches_exact() {
        let ball = BallSpec::lp(1.5, 0.25, 1.0).unwrap();
        let n = NoiseLevel::new(256.0).unwrap();
        let spec = make_estimator(EstimatorName::Q3, Some(&ball), n, Default::default()).unwrap();
        let fam = adversarial_family_labeled(&ball, &spec, n);
        let pick: Vec<CoefficientVector> = fam
            .iter()
            .filter(|(l, _)| l == "multi:1:two" || l == "block:2" || l == "dense")
            .map(|(_, v)| v.clone())
            .collect();
        assert_eq!(pick.len(), 3);
        let refs: Vec<&CoefficientVector> = pick.iter().collect();
        let sim = DetectionSimulator::new(&spec, n, &refs, 4000, 11, 1).unwrap();
        let rows = sim.alternative_estimates(&refs).unwrap();
        for (theta, row) in pick.iter().zip(&rows) {
            let r = crate::risklab::exact_risk(&spec, theta, n).unwrap();
            let mean = row.iter().sum::<f64>() / row.len() as f64;
            let want = quadratic_functional(theta) + r.bias;
            let se = (r.variance / row.len() as f64).sqrt();
            assert!((mean - want).abs() < 5.0 * se, "{mean} vs {want} (se {se})");
        }
    }
}
