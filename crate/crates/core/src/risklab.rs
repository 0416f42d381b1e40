//! Exact and Monte Carlo risk, worst-case sweeps over the adversarial
//! family, log-log rate fits, the rate-exponent table and the brute-force
//! check that a diagonal rule's worst case over a ball equals that over its
//! quadratic hull.

use serde::{Deserialize, Serialize};

use crate::analytics::{centering_std, moments_std};
use crate::error::{invalid, QfeError, Result};
use crate::estimators::{check_noise, estimate_slice, EstimatorKind, EstimatorSpec, TailKind};
use crate::model::{
    adversarial_family_labeled, quadratic_functional, BallKind, BallSpec, CoefficientVector,
    NoiseLevel, MAX_DENSE_LEN,
};
use crate::rng::{standard_normal, RandomStreamId};
use crate::sum::KahanSum;

/// Bias and variance contributed by one block of coordinates. Block 0 is
/// the quadratic part (or the whole coefficient range of a diagonal rule),
/// blocks `1..=J*` the thresholded blocks and `J*+1` everything beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockContribution {
    pub block: u32,
    pub bias: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub bias: f64,
    pub variance: f64,
    pub risk: f64,
    /// Zero for exact evaluation.
    pub std_error: f64,
    /// Zero for exact evaluation.
    pub replicates: u64,
    pub per_block: Vec<BlockContribution>,
    pub truncation_bias_bound: f64,
}

#[derive(Default)]
struct BlockAcc {
    bias: KahanSum,
    variance: KahanSum,
}

impl BlockAcc {
    fn add(&mut self, bias: f64, variance: f64) {
        self.bias.add(bias);
        self.variance.add(variance);
    }
}

fn finish(blocks: Vec<(u32, BlockAcc)>, truncation_bias_bound: f64) -> RiskReport {
    let per_block: Vec<BlockContribution> = blocks
        .into_iter()
        .map(|(block, acc)| BlockContribution {
            block,
            bias: acc.bias.total(),
            variance: acc.variance.total(),
        })
        .collect();
    let bias: KahanSum = per_block.iter().map(|b| b.bias).collect();
    let variance: KahanSum = per_block.iter().map(|b| b.variance).collect();
    let bias = bias.total();
    let variance = variance.total();
    RiskReport {
        bias,
        variance,
        risk: bias * bias + variance,
        std_error: 0.0,
        replicates: 0,
        per_block,
        truncation_bias_bound,
    }
}

/// Exact bias, variance and mean squared error of the estimator at `θ`.
///
/// Coordinates are independent, so both sums run over coordinates. Tail
/// coordinates with `θᵢ = 0` have zero mean gap and share one variance per
/// block, so the cost is `O(J* + |support|)` however long the schedule is.
pub fn exact_risk(
    spec: &EstimatorSpec,
    theta: &CoefficientVector,
    n: NoiseLevel,
) -> Result<RiskReport> {
    check_noise(spec, n)?;
    let nf = n.get();
    let n2 = nf * nf;
    match &spec.kind {
        EstimatorKind::Quadratic { m } => {
            let mut quad = BlockAcc::default();
            let mut beyond = BlockAcc::default();
            for (i, x) in theta.nonzeros() {
                if i <= *m {
                    quad.add(0.0, 4.0 * x * x / nf);
                } else {
                    beyond.add(-x * x, 0.0);
                }
            }
            quad.variance.add(2.0 * *m as f64 / n2);
            Ok(finish(vec![(0, quad), (1, beyond)], 0.0))
        }
        EstimatorKind::DiagQuad { a, c } => {
            let mut quad = BlockAcc::default();
            let mut beyond = BlockAcc::default();
            let a_sum: KahanSum = a.iter().copied().collect();
            let a2_sum: KahanSum = a.iter().map(|x| x * x).collect();
            quad.add(a_sum.total() / nf + c, 2.0 * a2_sum.total() / n2);
            for (i, x) in theta.nonzeros() {
                let x2 = x * x;
                match a.get((i - 1) as usize) {
                    Some(&ai) => quad.add((ai - 1.0) * x2, 4.0 * ai * ai * x2 / nf),
                    None => beyond.add(-x2, 0.0),
                }
            }
            Ok(finish(vec![(0, quad), (1, beyond)], 0.0))
        }
        EstimatorKind::Threshold(s) => {
            let kind = match s.tail_kind().threshold_kind() {
                Some(k) => k,
                None => {
                    return exact_risk(
                        &EstimatorSpec {
                            kind: EstimatorKind::Quadratic { m: s.m() },
                            provenance: spec.provenance.clone(),
                        },
                        theta,
                        n,
                    )
                }
            };
            let j_star = s.j_star();
            let mut blocks: Vec<(u32, BlockAcc)> =
                (0..=j_star + 1).map(|j| (j, BlockAcc::default())).collect();
            let mut support_in_block = vec![0u64; j_star as usize + 1];
            blocks[0].1.variance.add(2.0 * s.m() as f64 / n2);
            // Runs of equal coefficients in one block share their moments.
            let mut memo: Option<(u32, f64, f64, f64)> = None;
            for (i, x) in theta.nonzeros() {
                match s.block_of(i) {
                    None => blocks[0].1.add(0.0, 4.0 * x * x / nf),
                    Some(j) if j > j_star => blocks[j_star as usize + 1].1.add(-x * x, 0.0),
                    Some(j) => {
                        support_in_block[j as usize] += 1;
                        let (bias, var) = match memo {
                            Some((mj, mx, b, v)) if mj == j && mx == x => (b, v),
                            _ => {
                                let tau = 2.0 * j as f64;
                                let mom = moments_std(kind, x * nf.sqrt(), tau);
                                let c = centering_std(kind, tau);
                                let b = (mom.m1 - c) / nf - x * x;
                                let v = mom.variance() / n2;
                                memo = Some((j, x, b, v));
                                (b, v)
                            }
                        };
                        blocks[j as usize].1.add(bias, var);
                    }
                }
            }
            for j in 1..=j_star {
                let (lo, hi) = s.block_range(j);
                let zeros = (hi - lo + 1) - support_in_block[j as usize];
                if zeros > 0 {
                    let v0 = moments_std(kind, 0.0, 2.0 * j as f64).variance() / n2;
                    blocks[j as usize].1.variance.add(zeros as f64 * v0);
                }
            }
            Ok(finish(blocks, spec.truncation_bias_bound()))
        }
    }
}

/// Monte Carlo risk with the default worker count.
pub fn mc_risk(
    spec: &EstimatorSpec,
    theta: &CoefficientVector,
    n: NoiseLevel,
    replicates: u64,
    master_seed: u64,
) -> Result<RiskReport> {
    mc_risk_with_workers(spec, theta, n, replicates, master_seed, 0)
}

/// Monte Carlo risk over `replicates` independent observations.
///
/// Replicate `r` draws its observation from stream `(master_seed, r)` and
/// the errors are reduced in replicate order, so the report is identical
/// for any worker count. `workers = 0` uses all available cores.
pub fn mc_risk_with_workers(
    spec: &EstimatorSpec,
    theta: &CoefficientVector,
    n: NoiseLevel,
    replicates: u64,
    master_seed: u64,
    workers: usize,
) -> Result<RiskReport> {
    check_noise(spec, n)?;
    if replicates < 2 {
        return invalid(format!("need at least 2 replicates, got {replicates}"));
    }
    let len = spec.required_length();
    if len > MAX_DENSE_LEN {
        return invalid(format!(
            "estimator reads {len} coordinates, too many to simulate"
        ));
    }
    let len_usize = len as usize;
    let mut mean = vec![0.0; len_usize];
    for (i, x) in theta.nonzeros() {
        if i <= len {
            mean[(i - 1) as usize] = x;
        }
    }
    let q = quadratic_functional(theta);
    let sigma = n.sigma();
    let one = |r: u64| -> f64 {
        let mut rng = RandomStreamId::new(master_seed, r).rng();
        let y: Vec<f64> = mean
            .iter()
            .map(|&t| t + sigma * standard_normal(&mut rng))
            .collect();
        estimate_slice(spec, &y, n) - q
    };
    let errors = run_replicates(replicates, workers, &one)?;
    Ok(summarise(&errors))
}

fn summarise(errors: &[f64]) -> RiskReport {
    let r = errors.len() as f64;
    let mean: KahanSum = errors.iter().copied().collect();
    let sq: KahanSum = errors.iter().map(|e| e * e).collect();
    let bias = mean.total() / r;
    let risk = sq.total() / r;
    let dev: KahanSum = errors
        .iter()
        .map(|e| {
            let d = e * e - risk;
            d * d
        })
        .collect();
    let sd = (dev.total() / (r - 1.0)).sqrt();
    RiskReport {
        bias,
        variance: (risk - bias * bias).max(0.0),
        risk,
        std_error: sd / r.sqrt(),
        replicates: errors.len() as u64,
        per_block: Vec::new(),
        truncation_bias_bound: 0.0,
    }
}

/// Evaluates `f(r)` for `r = 0..replicates`, returned in replicate order.
pub(crate) fn run_replicates<F>(replicates: u64, workers: usize, f: &F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> f64 + Sync,
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

/// The adversarial-family member with the largest exact risk, its label and
/// its report. Ties go to the earlier member.
pub fn worst_case_risk_labeled(
    spec: &EstimatorSpec,
    ball: &BallSpec,
    n: NoiseLevel,
) -> Result<(String, CoefficientVector, RiskReport)> {
    let mut best: Option<(String, CoefficientVector, RiskReport)> = None;
    for (label, theta) in adversarial_family_labeled(ball, spec, n) {
        let report = exact_risk(spec, &theta, n)?;
        if best.as_ref().is_none_or(|b| report.risk > b.2.risk) {
            best = Some((label, theta, report));
        }
    }
    Ok(best.expect("family is never empty"))
}

/// Maximum exact risk over the adversarial family and its maximiser.
pub fn worst_case_risk(
    spec: &EstimatorSpec,
    ball: &BallSpec,
    n: NoiseLevel,
) -> Result<(CoefficientVector, RiskReport)> {
    worst_case_risk_labeled(spec, ball, n).map(|(_, t, r)| (t, r))
}

/// Truncated quadratic rule with `m_q = ⌊n^{2/(1+4s)}⌋`, the rate-optimal
/// quadratic reference.
pub fn quadratic_reference(ball: &BallSpec, n: NoiseLevel) -> Result<EstimatorSpec> {
    let m = crate::estimators::integral_m(n.get().powf(2.0 / (1.0 + 4.0 * ball.s())))?;
    EstimatorSpec::quadratic(m)
}

/// Least-squares fit of `ln risk` against `ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return invalid(format!("need at least 3 points, got {}", points.len()));
    }
    if let Some(&(n, r)) = points
        .iter()
        .find(|(n, r)| !(*n > 0.0 && *r > 0.0 && n.is_finite() && r.is_finite()))
    {
        return invalid(format!("points must be positive, got ({n}, {r})"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return invalid("all n values coincide");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}

/// `(r*, r_Q*)`: exponents of the minimax rate and of the minimax rate
/// among quadratic rules, `n^{-r}`.
pub fn table1_exponents(p: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(p > 0.0 && p.is_finite() && alpha > 0.0 && alpha.is_finite()) {
        return invalid(format!("need p > 0 and alpha > 0, got p = {p}, alpha = {alpha}"));
    }
    if p >= 2.0 {
        let r = (8.0 * alpha / (1.0 + 4.0 * alpha)).min(1.0);
        return Ok((r, r));
    }
    let s = alpha + 0.5 - 1.0 / p;
    if !(s > 0.0) {
        return invalid(format!("s = alpha + 1/2 - 1/p must be positive, got {s}"));
    }
    let r_q = (8.0 * s / (1.0 + 4.0 * s)).min(1.0);
    let r = if alpha > 1.0 / (2.0 * p) {
        1.0
    } else {
        (4.0 * p * s + 2.0 - p) / (1.0 + 2.0 * p * s)
    };
    Ok((r, r_q))
}

/// Outcome of the ball-versus-hull brute force comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullCheck {
    pub sup_ball: f64,
    pub sup_hull: f64,
    pub sup_vertices: f64,
    /// Certified bound on how far a grid maximum can sit below the true
    /// supremum of the same set.
    pub tolerance: f64,
    pub grid_points: f64,
    /// `sup_ball ≤ sup_hull ≤ sup_vertices` (up to rounding) and
    /// `sup_vertices - sup_ball ≤ tolerance`.
    pub holds: bool,
}

/// Limit on enumerated grid cells (all but the last coordinate).
pub const HULL_GRID_LIMIT: f64 = 2e8;

/// Exact risk of `Σ aᵢYᵢ² + c` at `θ`, with `x = θ²` given per coordinate.
fn diag_risk(a: &[f64], c: f64, x: &[f64], n: f64) -> f64 {
    let mut bias = c;
    let mut var = 0.0;
    for (ai, xi) in a.iter().zip(x) {
        bias += (ai - 1.0) * xi + ai / n;
        var += 4.0 * ai * ai * xi / n + 2.0 * ai * ai / (n * n);
    }
    bias * bias + var
}

/// Compares the maximum risk of a diagonal rule over a grid of
/// `ball ∩ R^dim` with that over the same grid of the quadratic hull and
/// with the maximum over `{0, spikes}`.
///
/// Risk depends on `θ` only through `θᵢ²` and is convex in those, so within
/// each line of the grid along the last coordinate only the two end points
/// can be maximal; the enumeration visits exactly those.
pub fn hull_sup_equality(
    a: &[f64],
    c: f64,
    ball: &BallSpec,
    dim: usize,
    grid_step: f64,
    n: NoiseLevel,
) -> Result<HullCheck> {
    if ball.kind != BallKind::Lp || !(ball.p < 2.0) {
        return invalid("hull check needs an Lp ball with p < 2");
    }
    if dim == 0 || dim > 6 {
        return invalid(format!("dim must lie in 1..=6, got {dim}"));
    }
    if a.len() != dim {
        return invalid(format!("need {dim} coefficients, got {}", a.len()));
    }
    if !(grid_step > 0.0 && grid_step <= 1e-2) {
        return invalid(format!("grid step must lie in (0, 0.01], got {grid_step}"));
    }
    let nf = n.get();
    let s = ball.s();
    let p = ball.p;
    let mm = ball.m;
    // Per-coordinate weights and box: |θᵢ| ≤ hᵢ = M i^{-s} in both sets.
    let w_ball: Vec<f64> = (1..=dim).map(|i| (i as f64).powf(p * s)).collect();
    let w_hull: Vec<f64> = (1..=dim).map(|i| (i as f64).powf(2.0 * s)).collect();
    let h: Vec<f64> = (1..=dim).map(|i| mm * (i as f64).powf(-s)).collect();
    let steps: Vec<u64> = h.iter().map(|hi| (hi / grid_step).floor() as u64).collect();
    let cells: f64 = steps[..dim - 1].iter().map(|k| (k + 1) as f64).product();
    if cells > HULL_GRID_LIMIT {
        return Err(QfeError::GridTooLarge {
            points: cells,
            limit: HULL_GRID_LIMIT,
        });
    }
    let budget_ball = mm.powf(p);
    let budget_hull = mm * mm;

    let sup_over = |weights: &[f64], power: f64, budget: f64| -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut idx = vec![0u64; dim - 1];
        let mut x = vec![0.0; dim];
        let last = dim - 1;
        loop {
            let mut used = 0.0;
            for (d, &k) in idx.iter().enumerate() {
                let t = k as f64 * grid_step;
                used += weights[d] * t.powf(power);
                x[d] = t * t;
            }
            if used <= budget {
                // Largest grid value of the last coordinate that still fits.
                let room = (budget - used) / weights[last];
                let mut k = ((room.powf(1.0 / power) / grid_step).floor() as u64).min(steps[last]);
                while k > 0 && used + weights[last] * (k as f64 * grid_step).powf(power) > budget {
                    k -= 1;
                }
                while k < steps[last]
                    && used + weights[last] * ((k + 1) as f64 * grid_step).powf(power) <= budget
                {
                    k += 1;
                }
                for kk in [0, k] {
                    let t = kk as f64 * grid_step;
                    x[last] = t * t;
                    best = best.max(diag_risk(a, c, &x, nf));
                }
            }
            // Odometer over the first dim-1 coordinates.
            let mut d = 0;
            loop {
                if d == dim - 1 {
                    return best;
                }
                idx[d] += 1;
                if idx[d] <= steps[d] {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    };
    let sup_ball = sup_over(&w_ball, p, budget_ball);
    let sup_hull = sup_over(&w_hull, 2.0, budget_hull);

    let mut sup_vertices = diag_risk(a, c, &vec![0.0; dim], nf);
    for i in 0..dim {
        let mut x = vec![0.0; dim];
        x[i] = h[i] * h[i];
        sup_vertices = sup_vertices.max(diag_risk(a, c, &x, nf));
    }

    // |∂R/∂θᵢ| ≤ 4|B| |aᵢ - 1| hᵢ + 8 aᵢ² hᵢ / n on the box.
    let a_sum: f64 = a.iter().sum();
    let b_max = (a_sum / nf + c).abs()
        + a.iter().zip(&h).map(|(ai, hi)| (ai - 1.0).abs() * hi * hi).sum::<f64>();
    let tolerance: f64 = a
        .iter()
        .zip(&h)
        .map(|(ai, hi)| (4.0 * b_max * (ai - 1.0).abs() * hi + 8.0 * ai * ai * hi / nf) * grid_step)
        .sum();
    let slack = 1e-12 * sup_vertices.abs().max(1.0);
    let holds = sup_ball <= sup_hull + slack
        && sup_hull <= sup_vertices + slack
        && sup_vertices - sup_ball <= tolerance + slack;
    Ok(HullCheck {
        sup_ball,
        sup_hull,
        sup_vertices,
        tolerance,
        grid_points: cells * 2.0,
        holds,
    })
}

/// The variance bound
/// `2m/n² + 4Σ_{i≤m}θᵢ²/n + 6Σ_{m<i≤2^{J*}m}θᵢ²/n + Σ_j 2^{j-1}m (4√(2j)+18)/(n² e^j)`
/// for a soft-threshold estimator.
pub fn variance_bound_53(
    spec: &EstimatorSpec,
    theta: &CoefficientVector,
    n: NoiseLevel,
) -> Result<f64> {
    let s = match spec.schedule() {
        Some(s) if s.tail_kind() == TailKind::Soft => s,
        _ => return invalid("the variance bound applies to soft-threshold estimators"),
    };
    let nf = n.get();
    let n2 = nf * nf;
    let mut head = KahanSum::new();
    let mut tail = KahanSum::new();
    for (i, x) in theta.nonzeros() {
        if i <= s.m() {
            head.add(x * x);
        } else if i <= s.end() {
            tail.add(x * x);
        }
    }
    let mut blocks = KahanSum::new();
    for j in 1..=s.j_star() {
        let size = (s.m() << (j - 1)) as f64;
        let jf = j as f64;
        blocks.add(size * (4.0 * (2.0 * jf).sqrt() + 18.0) / (n2 * jf.exp()));
    }
    Ok(2.0 * s.m() as f64 / n2 + 4.0 * head.total() / nf + 6.0 * tail.total() / nf + blocks.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{make_estimator, EstimatorName, ThresholdSchedule};

    fn nl(n: f64) -> NoiseLevel {
        NoiseLevel::new(n).unwrap()
    }

    #[test]
    fn diag_quad_example() {
        let mut a = vec![1.0; 10];
        a.resize(10, 1.0);
        let spec = EstimatorSpec::diag_quad(a, -0.1).unwrap();
        let mut th = vec![0.0; 10];
        th[0] = 1.0;
        let theta = CoefficientVector::from_dense(th).unwrap();
        let r = exact_risk(&spec, &theta, nl(100.0)).unwrap();
        assert!(r.bias.abs() < 1e-15);
        assert!((r.variance - 0.042).abs() < 1e-15);
        assert!((r.risk - 0.042).abs() < 1e-15);
    }

    #[test]
    fn threshold_zero_theta() {
        let s = ThresholdSchedule::new(4, 3, TailKind::Soft).unwrap();
        let spec = EstimatorSpec::threshold(s.clone());
        let n = nl(10.0);
        let r = exact_risk(&spec, &CoefficientVector::zeros(0), n).unwrap();
        assert_eq!(r.bias, 0.0);
        let mut want = 2.0 * 4.0 / 100.0;
        for j in 1..=3u32 {
            let (lo, hi) = s.block_range(j);
            let v = moments_std(crate::analytics::ThresholdKind::Soft, 0.0, 2.0 * j as f64)
                .variance()
                / 100.0;
            want += (hi - lo + 1) as f64 * v;
        }
        assert!((r.variance - want).abs() < 1e-15);
        assert_eq!(r.per_block.len(), 5);
    }

    #[test]
    fn q1_worst_case_is_first_truncated_spike() {
        // At n = 1000 truncation bias beats the variance of a spike at 1.
        let ball = BallSpec::lp(1.25, 0.5, 1.0).unwrap();
        let n = nl(1000.0);
        let spec = make_estimator(EstimatorName::Q1, Some(&ball), n, Default::default()).unwrap();
        let m = spec.required_length() as f64;
        let (label, theta, r) = worst_case_risk_labeled(&spec, &ball, n).unwrap();
        assert_eq!(label, "block:1");
        assert_eq!(theta.nonzeros().next().unwrap().0, spec.required_length() + 1);
        let q = quadratic_functional(&theta);
        assert!((r.risk - (q * q + 2.0 * m / 1e6)).abs() < 1e-15);
    }

    #[test]
    fn rate_fit_examples() {
        let pts = [(1024.0, 2f64.powf(-8.0)), (4096.0, 2f64.powf(-9.6)), (16384.0, 2f64.powf(-11.2))];
        let f = rate_fit(&pts).unwrap();
        assert!((f.slope + 0.8).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(rate_fit(&pts[..2]).is_err());
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn table1_examples() {
        let (r, rq) = table1_exponents(1.5, 0.25).unwrap();
        assert!((r - 0.8).abs() < 1e-15 && (rq - 0.5).abs() < 1e-15);
        let (r, rq) = table1_exponents(1.25, 0.5).unwrap();
        assert_eq!(r, 1.0);
        assert!((rq - 1.6 / 1.8).abs() < 1e-15);
        let (r, rq) = table1_exponents(3.0, 0.2).unwrap();
        assert!((r - 1.6 / 1.8).abs() < 1e-15 && r == rq);
        assert!(table1_exponents(1.0, 0.4).is_err());
    }

    #[test]
    fn variance_bound_worked_example() {
        let s = ThresholdSchedule::new(4, 2, TailKind::Soft).unwrap();
        let spec = EstimatorSpec::threshold(s);
        let v = variance_bound_53(&spec, &CoefficientVector::zeros(0), nl(10.0)).unwrap();
        let want = 0.08
            + 4.0 * (4.0 * 2f64.sqrt() + 18.0) / (100.0 * 1f64.exp())
            + 8.0 * (4.0 * 2.0 + 18.0) / (100.0 * 2f64.exp());
        assert!((v - want).abs() < 1e-15);
        assert!((v - 0.709_612_201_979_255_1).abs() < 1e-12);
    }

    #[test]
    fn hull_one_dimension_coincides() {
        let ball = BallSpec::lp(1.0, 1.2, 1.0).unwrap();
        let h = hull_sup_equality(&[0.7], 0.1, &ball, 1, 1e-3, nl(10.0)).unwrap();
        assert_eq!(h.sup_ball, h.sup_hull);
        assert!(h.holds);
    }

    #[test]
    fn hull_zero_rule_peaks_at_first_spike() {
        let ball = BallSpec::lp(1.0, 1.2, 1.0).unwrap();
        let h = hull_sup_equality(&[0.0; 3], 0.0, &ball, 3, 1e-2, nl(10.0)).unwrap();
        assert_eq!(h.sup_vertices, 1.0);
        assert_eq!(h.sup_ball, 1.0);
        assert!(h.holds);
    }
}
