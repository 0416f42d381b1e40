//! Computable ingredients of the lower bound: the sparse mixture prior over
//! `k`-spike vertices, its chi-square affinity to pure noise, the
//! constrained risk inequality, and the rate exponents of the lower bound.

use std::collections::HashMap;
use std::f64::consts::E;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{quadratic_functional, BallSpec, CoefficientVector, NoiseLevel, MAX_DENSE_LEN};
use crate::rng::RandomStreamId;

/// `4 e^{e-1}`, the limit of the affinity bound.
pub const AFFINITY_LIMIT: f64 = 22.299_766_099_043_52;

/// Uniform mixture over vectors with `k` spikes of height `n^{-1/2}` among
/// the first `m` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub m: u64,
    pub k: u64,
    pub n: NoiseLevel,
}

impl MixtureSpec {
    /// `k` defaults to `⌊√m⌋`, the largest spike count for which
    /// `(1 - k/m)^{-k} ≤ 4` holds for every `m ≥ 4`.
    pub fn new(m: u64, k: Option<u64>, n: NoiseLevel) -> Result<Self> {
        if m == 0 {
            return invalid("m must be at least 1");
        }
        let k = k.unwrap_or_else(|| m.isqrt());
        if k == 0 || k > m {
            return invalid(format!("need 1 <= k <= m, got k = {k}, m = {m}"));
        }
        Ok(Self { m, k, n })
    }

    pub fn height(&self) -> f64 {
        self.n.sigma()
    }
}

/// The vertex with spikes of height `n^{-1/2}` on `support`.
pub fn theta_km_vertex(spec: &MixtureSpec, support: &[u64]) -> Result<CoefficientVector> {
    if support.len() as u64 != spec.k {
        return invalid(format!(
            "support has {} indices, expected k = {}",
            support.len(),
            spec.k
        ));
    }
    if let Some(&i) = support.iter().find(|&&i| i == 0 || i > spec.m) {
        return invalid(format!("index {i} outside 1..={}", spec.m));
    }
    let h = spec.height();
    CoefficientVector::sparse(spec.m, support.iter().map(|&i| (i, h)).collect())
}

/// Draws a uniformly random `k`-subset of `1..=m` (partial Fisher–Yates on a
/// sparse permutation) and returns its vertex.
pub fn sample_mixture(spec: &MixtureSpec, stream: RandomStreamId) -> Result<CoefficientVector> {
    if spec.m > MAX_DENSE_LEN {
        return invalid(format!("m = {} is too large to sample", spec.m));
    }
    let mut rng = stream.rng();
    // Positions that have been swapped away from the identity.
    let mut moved: HashMap<u64, u64> = HashMap::new();
    let mut support = Vec::with_capacity(spec.k as usize);
    for t in 0..spec.k {
        let j = rng.random_range(t..spec.m);
        let at_j = *moved.get(&j).unwrap_or(&j);
        let at_t = *moved.get(&t).unwrap_or(&t);
        moved.insert(j, at_t);
        support.push(at_j + 1);
    }
    theta_km_vertex(spec, &support)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Log-weights `ln C(k,j) + ln C(m-k,k-j)` of the hypergeometric law of the
/// overlap `J` of two random `k`-subsets of `1..=m`, with their support.
fn overlap_log_weights(m: u64, k: u64) -> (u64, Vec<f64>) {
    let lo = (2 * k).saturating_sub(m);
    let w = (lo..=k)
        .map(|j| ln_choose(k, j) + ln_choose(m - k, k - j))
        .collect();
    (lo, w)
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// `P(J = j)` for `j = 0..=k`.
///
/// Normalised by the sum of the weights (which equals `C(m,k)` exactly) so
/// that rounding in the log-gamma differences cancels.
pub fn hypergeometric_pmf(m: u64, k: u64) -> Result<Vec<f64>> {
    if k > m {
        return invalid(format!("need k <= m, got k = {k}, m = {m}"));
    }
    let (lo, w) = overlap_log_weights(m, k);
    let norm = log_sum_exp(w.iter().copied());
    let mut out = vec![0.0; k as usize + 1];
    for (d, lw) in w.iter().enumerate() {
        out[lo as usize + d] = (lw - norm).exp();
    }
    Ok(out)
}

/// `∫ g²/f = E e^J` for the `k`-of-`m` mixture `g` against pure noise `f`.
pub fn chi_square_affinity(m: u64, k: u64) -> Result<f64> {
    if k > m {
        return invalid(format!("need k <= m, got k = {k}, m = {m}"));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let (lo, w) = overlap_log_weights(m, k);
    let num = log_sum_exp(w.iter().enumerate().map(|(d, lw)| lw + (lo + d as u64) as f64));
    let den = log_sum_exp(w.iter().copied());
    Ok((num - den).exp())
}

/// `4 (1 + (e-1) k/m)^k`, valid when `m ≥ 4` and `(1 - k/m)^{-k} ≤ 4`.
pub fn affinity_bound(m: u64, k: u64) -> Result<f64> {
    if m < 4 {
        return invalid(format!("the bound needs m >= 4, got {m}"));
    }
    if k == 0 || k >= m {
        return invalid(format!("need 1 <= k < m, got k = {k}, m = {m}"));
    }
    let ratio = k as f64 / m as f64;
    let guard = (1.0 - ratio).powf(-(k as f64));
    if guard > 4.0 {
        return invalid(format!(
            "(1 - k/m)^-k = {guard} exceeds 4 for m = {m}, k = {k}"
        ));
    }
    Ok(affinity_bound_formula(m, k))
}

/// The right-hand side `4 (1 + (e-1) k/m)^k` without any precondition.
pub fn affinity_bound_formula(m: u64, k: u64) -> f64 {
    4.0 * (1.0 + (E - 1.0) * k as f64 / m as f64).powf(k as f64)
}

/// `Δ² - 2Δ √(affinity · ε²)`: the risk at the alternative implied by risk
/// at most `ε²` at the null. May be negative.
pub fn cri_lower_bound(delta: f64, eps2: f64, affinity: f64) -> Result<f64> {
    if !(delta >= 0.0 && eps2 >= 0.0 && affinity >= 1.0) {
        return invalid(format!(
            "need delta >= 0, eps2 >= 0, affinity >= 1; got {delta}, {eps2}, {affinity}"
        ));
    }
    Ok(delta * delta - 2.0 * delta * (affinity * eps2).sqrt())
}

fn smoothness(p: f64, alpha: f64) -> Result<f64> {
    if !(p > 0.0 && alpha > 0.0) {
        return invalid(format!("need p > 0 and alpha > 0, got {p}, {alpha}"));
    }
    let s = alpha + 0.5 - 1.0 / p;
    if !(s > 0.0) {
        return invalid(format!("s = alpha + 1/2 - 1/p must be positive, got {s}"));
    }
    Ok(s)
}

/// Exponent `r` of the lower bound `n^{-r}`: 1 in the parametric regime,
/// `2 - p/(1+2ps)` when `p < 2` and `α ≤ 1/(2p)`, and `min(1, 8α/(1+4α))`
/// for `p ≥ 2`.
pub fn minimax_lower_exponent(p: f64, alpha: f64) -> Result<f64> {
    let s = smoothness(p, alpha)?;
    if p >= 2.0 {
        return Ok((8.0 * alpha / (1.0 + 4.0 * alpha)).min(1.0));
    }
    if alpha > 1.0 / (2.0 * p) {
        Ok(1.0)
    } else {
        Ok(2.0 - p / (1.0 + 2.0 * p * s))
    }
}

/// `1 / I(θ) = 4 Q(θ) / n`.
pub fn information_bound(theta: &CoefficientVector, n: NoiseLevel) -> f64 {
    4.0 * quadratic_functional(theta) / n.get()
}

/// `m = ⌊c n^{p/(1+2ps)}⌋`, the first-block length at which the mixture
/// vertices stay inside the ball.
pub fn mixture_block_length(ball: &BallSpec, n: NoiseLevel, c: f64) -> Result<u64> {
    let x = c * n.get().powf(ball.p / (1.0 + 2.0 * ball.p * ball.s()));
    if !(x >= 1.0 && x.is_finite()) {
        return invalid(format!("mixture block length {x} is below 1"));
    }
    Ok(x.floor() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affinity_limit_constant() {
        assert!((AFFINITY_LIMIT - 4.0 * (E - 1.0).exp()).abs() < 1e-13);
    }

    #[test]
    fn affinity_small_case() {
        let a = chi_square_affinity(4, 2).unwrap();
        let want = (1.0 + 4.0 * E + E * E) / 6.0;
        assert!((a - want).abs() < 1e-14);
        assert_eq!(chi_square_affinity(10, 0).unwrap(), 1.0);
        assert!(chi_square_affinity(3, 4).is_err());
    }

    #[test]
    fn bound_small_case() {
        let b = affinity_bound(4, 2).unwrap();
        assert!((b - 4.0 * (1.0 + (E - 1.0) / 2.0).powi(2)).abs() < 1e-13);
        assert!((b - 13.825_620).abs() < 1e-6);
        assert!(affinity_bound(3, 1).is_err());
        // (1 - 3/5)^-3 = 15.6: the guard refuses.
        assert!(affinity_bound(5, 3).is_err());
    }

    #[test]
    fn pmf_small_case() {
        let p = hypergeometric_pmf(4, 2).unwrap();
        for (got, want) in p.iter().zip([1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn cri_examples() {
        assert_eq!(cri_lower_bound(1.0, 0.0, 1.0).unwrap(), 1.0);
        let v = cri_lower_bound(0.1, 1e-5, 22.299703).unwrap();
        assert!((v - 0.007_013_4).abs() < 1e-6);
        assert!(cri_lower_bound(0.1, 1e-5, 0.5).is_err());
    }

    #[test]
    fn vertex_and_mixture() {
        let n = NoiseLevel::new(100.0).unwrap();
        let spec = MixtureSpec::new(4, Some(2), n).unwrap();
        let v = theta_km_vertex(&spec, &[1, 3]).unwrap();
        assert_eq!(v.to_dense().unwrap(), vec![0.1, 0.0, 0.1, 0.0]);
        assert!((quadratic_functional(&v) - 0.02).abs() < 1e-17);
        assert!(theta_km_vertex(&spec, &[1]).is_err());
        assert!(theta_km_vertex(&spec, &[1, 5]).is_err());

        let all = MixtureSpec::new(5, Some(5), n).unwrap();
        let v = sample_mixture(&all, RandomStreamId::new(3, 0)).unwrap();
        assert_eq!(v.support_size(), 5);
        let a = sample_mixture(&spec, RandomStreamId::new(9, 1)).unwrap();
        let b = sample_mixture(&spec, RandomStreamId::new(9, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lower_exponent_examples() {
        assert!((minimax_lower_exponent(1.5, 0.25).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(minimax_lower_exponent(1.0, 0.6).unwrap(), 1.0);
        assert!(minimax_lower_exponent(1.0, 0.4).is_err());
    }

    #[test]
    fn information_bound_examples() {
        let n = NoiseLevel::new(100.0).unwrap();
        let v = CoefficientVector::from_dense(vec![3.0, 4.0]).unwrap();
        assert_eq!(information_bound(&v, n), 1.0);
        assert_eq!(information_bound(&CoefficientVector::zeros(3), n), 0.0);
    }
}
