//! Moments of thresholded squared Gaussians and the single-coordinate
//! bias/variance bounds for the soft-thresholded estimator of `θ²`.
//!
//! For `X ~ N(θ, 1/n)` and a threshold `t = τ/n` the soft statistic is
//! `(X² - t)_+` and the hard one `X² 1{X² > t}`. Both are evaluated in
//! standardised units `ν = θ√n`, `τ = tn` and scaled back by `1/n`
//! (first moment) and `1/n²` (second moment), which makes the centering
//! constants obey their scale law exactly.

mod normal;
mod quadrature;

pub use normal::{gauss_upper_tail, mills_ratio, std_normal_pdf};
pub use quadrature::{integrate, MAX_SUBDIVISIONS};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::NoiseLevel;

/// Which thresholding rule a tail term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    /// `(X² - t)_+`
    Soft,
    /// `X² 1{X² > t}`
    Hard,
}

/// First and second moment of a thresholded statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMoments {
    pub m1: f64,
    pub m2: f64,
}

impl ThresholdMoments {
    pub fn variance(&self) -> f64 {
        (self.m2 - self.m1 * self.m1).max(0.0)
    }

    fn scaled(self, n: f64) -> Self {
        Self {
            m1: self.m1 / n,
            m2: self.m2 / (n * n),
        }
    }
}

/// Moments for unit noise: `X = ν + Z`, threshold `τ` on `X²`.
pub(crate) fn moments_std(kind: ThresholdKind, nu: f64, tau: f64) -> ThresholdMoments {
    let a = tau.sqrt();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    // Upper region X > a and lower region -X > a, each as W = (±X) - a > 0.
    for d in [-nu - a, nu - a] {
        let p = normal::positive_part_moments(d);
        match kind {
            ThresholdKind::Soft => {
                m1 += p[2] + 2.0 * a * p[1];
                m2 += p[4] + 4.0 * a * p[3] + 4.0 * a * a * p[2];
            }
            ThresholdKind::Hard => {
                let a2 = a * a;
                m1 += p[2] + 2.0 * a * p[1] + a2 * p[0];
                m2 += p[4] + 4.0 * a * p[3] + 6.0 * a2 * p[2] + 4.0 * a2 * a * p[1] + a2 * a2 * p[0];
            }
        }
    }
    ThresholdMoments { m1, m2 }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return invalid(format!("threshold must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

/// `E(X² - t)_+` and `E((X² - t)_+)²` for `X ~ N(θ, 1/n)`.
pub fn soft_moments(theta: f64, n: NoiseLevel, t: f64) -> Result<ThresholdMoments> {
    check_threshold(t)?;
    let n = n.get();
    Ok(moments_std(ThresholdKind::Soft, theta * n.sqrt(), t * n).scaled(n))
}

/// `E X² 1{X² > t}` and `E X⁴ 1{X² > t}` for `X ~ N(θ, 1/n)`.
pub fn hard_moments(theta: f64, n: NoiseLevel, t: f64) -> Result<ThresholdMoments> {
    check_threshold(t)?;
    let n = n.get();
    Ok(moments_std(ThresholdKind::Hard, theta * n.sqrt(), t * n).scaled(n))
}

pub fn threshold_moments(
    kind: ThresholdKind,
    theta: f64,
    n: NoiseLevel,
    t: f64,
) -> Result<ThresholdMoments> {
    match kind {
        ThresholdKind::Soft => soft_moments(theta, n, t),
        ThresholdKind::Hard => hard_moments(theta, n, t),
    }
}

/// Mean of the thresholded statistic under `θ = 0` at unit noise.
pub(crate) fn centering_std(kind: ThresholdKind, tau: f64) -> f64 {
    moments_std(kind, 0.0, tau).m1
}

/// The centering constant `μ_n(τ)` (soft) or `ρ_n(τ)` (hard): the mean of the
/// thresholded statistic at `θ = 0` with threshold `τ/n`.
///
/// For the soft rule this equals `(2√τ φ(√τ) - 2(τ-1) Φ̃(√τ)) / n`.
pub fn centering_constant(n: NoiseLevel, tau: f64, kind: ThresholdKind) -> Result<f64> {
    match kind {
        ThresholdKind::Soft if !(tau >= 1.0) => {
            invalid(format!("soft centering needs tau >= 1, got {tau}"))
        }
        ThresholdKind::Hard if !(tau >= 0.0) => {
            invalid(format!("hard centering needs tau >= 0, got {tau}"))
        }
        _ if !tau.is_finite() => invalid("tau must be finite"),
        _ => Ok(centering_std(kind, tau) / n.get()),
    }
}

/// Slack allowed on every comparison in the soft-threshold moment audit.
pub const LEMMA1_SLACK: f64 = 1e-12;

/// Mean, bias and variance of the centered soft-threshold estimate of `θ²`
/// at one coordinate, next to their analytic bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub theta: f64,
    pub n: f64,
    pub tau: f64,
    pub mu0: f64,
    pub bias: f64,
    pub variance: f64,
    pub bound_mu0: f64,
    pub bound_bias: f64,
    pub bound_var: f64,
    pub all_bounds_hold: bool,
}

/// Evaluates `μ₀`, the bias and the variance of `(X² - τ/n)_+ - μ₀` as an
/// estimate of `θ²`, and checks
///
/// - `|μ₀| ≤ 4 / (√(2π) n √τ e^{τ/2})`
/// - `|bias| ≤ min(2τ/n, θ²)`
/// - `variance ≤ 6θ²/n + (4√τ + 18) / (n² e^{τ/2})`
pub fn lemma1_check(theta: f64, n: NoiseLevel, tau: f64) -> Result<Lemma1Report> {
    if !(tau >= 1.0) || !tau.is_finite() {
        return invalid(format!("tau must be >= 1, got {tau}"));
    }
    if !theta.is_finite() {
        return invalid("theta must be finite");
    }
    let nf = n.get();
    let c = centering_std(ThresholdKind::Soft, tau);
    let mom = moments_std(ThresholdKind::Soft, theta * nf.sqrt(), tau);
    let mu0 = c / nf;
    let bias = (mom.m1 - c) / nf - theta * theta;
    let variance = mom.variance() / (nf * nf);

    let e_half = (0.5 * tau).exp();
    let bound_mu0 = 4.0 * normal::INV_SQRT_2PI / (nf * tau.sqrt() * e_half);
    let bound_bias = (2.0 * tau / nf).min(theta * theta);
    let bound_var = 6.0 * theta * theta / nf + (4.0 * tau.sqrt() + 18.0) / (nf * nf * e_half);
    let all_bounds_hold = mu0.abs() <= bound_mu0 + LEMMA1_SLACK
        && bias.abs() <= bound_bias + LEMMA1_SLACK
        && variance <= bound_var + LEMMA1_SLACK;
    Ok(Lemma1Report {
        theta,
        n: nf,
        tau,
        mu0,
        bias,
        variance,
        bound_mu0,
        bound_bias,
        bound_var,
        all_bounds_hold,
    })
}

/// The default audit grid: `τ ∈ {1,2,4,8,16}`, `√n θ ∈ {0, 0.1, …, 5}`,
/// `n ∈ {1, 10², 10⁴}`; 765 points.
pub fn lemma1_default_grid() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let taus = vec![1.0, 2.0, 4.0, 8.0, 16.0];
    let nus = (0..=50).map(|k| k as f64 / 10.0).collect();
    let ns = vec![1.0, 100.0, 10_000.0];
    (taus, nus, ns)
}

/// Runs [`lemma1_check`] at every `(τ, ν, n)` with `θ = ν / √n`.
pub fn lemma1_audit(taus: &[f64], nus: &[f64], ns: &[f64]) -> Result<Vec<Lemma1Report>> {
    let mut out = Vec::with_capacity(taus.len() * nus.len() * ns.len());
    for &tau in taus {
        for &nu in nus {
            for &n in ns {
                let noise = NoiseLevel::new(n)?;
                out.push(lemma1_check(nu / n.sqrt(), noise, tau)?);
            }
        }
    }
    Ok(out)
}

/// Brute-force integral of the thresholded statistic (raised to `power`)
/// against the `N(θ, 1/n)` density over `θ ± 12/√n`.
pub fn quad_oracle(
    theta: f64,
    n: NoiseLevel,
    t: f64,
    kind: ThresholdKind,
    power: u32,
) -> Result<f64> {
    check_threshold(t)?;
    if !(power == 1 || power == 2) {
        return invalid(format!("power must be 1 or 2, got {power}"));
    }
    let sigma = n.sigma();
    let a = t.sqrt();
    let target = move |x: f64| -> f64 {
        let x2 = x * x;
        let g = match kind {
            ThresholdKind::Soft => (x2 - t).max(0.0),
            ThresholdKind::Hard => {
                if x2 > t {
                    x2
                } else {
                    0.0
                }
            }
        };
        if power == 1 {
            g
        } else {
            g * g
        }
    };
    let f = |z: f64| target(theta + sigma * z) * std_normal_pdf(z);
    let breaks = [(a - theta) / sigma, (-a - theta) / sigma];
    integrate(f, -12.0, 12.0, &breaks, 1e-13, f64::MIN_POSITIVE)
}
