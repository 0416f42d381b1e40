//! Browser bindings. Each exported function takes plain numbers and strings
//! and returns a JSON document; the `*_json` functions underneath are plain
//! Rust so they can be tested natively.

use qfe_core::bounds::{affinity_bound_formula, chi_square_affinity, cri_lower_bound, AFFINITY_LIMIT};
use qfe_core::risklab::{quadratic_reference, table1_exponents, worst_case_risk_labeled};
use qfe_core::{make_estimator, BallSpec, EstimatorName, EstimatorSpec, NoiseLevel};
use serde_json::json;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn estimator(name: &str, ball: &BallSpec, n: NoiseLevel) -> Result<EstimatorSpec, String> {
    if name.eq_ignore_ascii_case("qref") {
        return quadratic_reference(ball, n).map_err(|e| e.to_string());
    }
    let parsed: EstimatorName = name.parse().map_err(|e: qfe_core::QfeError| e.to_string())?;
    let params = qfe_core::EstimatorParams {
        gamma: (parsed == EstimatorName::Q4).then_some(1.5),
        r: (parsed == EstimatorName::Q6).then_some(0.5),
        ..Default::default()
    };
    make_estimator(parsed, Some(ball), n, params).map_err(|e| e.to_string())
}

/// Worst-case exact risk over the adversarial family at `n = 2^k` for each
/// `k` in `log2_lo..=log2_hi`, plus the fitted log-log slope.
pub fn risk_curve_json(
    name: &str,
    p: f64,
    alpha: f64,
    radius: f64,
    log2_lo: u32,
    log2_hi: u32,
) -> Out {
    if log2_lo > log2_hi || log2_hi > 40 {
        return Err(format!("need log2_lo <= log2_hi <= 40, got {log2_lo}..{log2_hi}"));
    }
    let ball = BallSpec::lp(p, alpha, radius).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for k in log2_lo..=log2_hi {
        let n = NoiseLevel::new(2f64.powi(k as i32)).map_err(|e| e.to_string())?;
        let spec = estimator(name, &ball, n)?;
        let (label, _, r) = worst_case_risk_labeled(&spec, &ball, n).map_err(|e| e.to_string())?;
        points.push((n.get(), r.risk));
        rows.push(json!({
            "n": n.get(),
            "risk": r.risk,
            "n_risk_over_4m2": r.risk * n.get() / (4.0 * radius * radius),
            "worst": label,
        }));
    }
    let slope = if points.len() >= 2 {
        Some(qfe_core::risklab::rate_fit(&points).map_err(|e| e.to_string())?.slope)
    } else {
        None
    };
    let (r_star, _) = table1_exponents(p, alpha).map_err(|e| e.to_string())?;
    Ok(json!({ "rows": rows, "slope": slope, "minimax_slope": -r_star }).to_string())
}

/// `r*` and `r_q*` over `alpha = lo, lo + step, ...`; `null` where the ball
/// is not compact.
pub fn rates_json(p: f64, lo: f64, hi: f64, step: f64) -> Out {
    if !(step > 0.0 && lo > 0.0 && hi >= lo && (hi - lo) / step <= 10_000.0) {
        return Err("need 0 < lo <= hi and a step giving at most 10^4 points".into());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let rows: Vec<_> = (0..count)
        .map(|k| {
            let alpha = lo + k as f64 * step;
            match table1_exponents(p, alpha) {
                Ok((r, rq)) => json!({ "alpha": alpha, "r_star": r, "r_q_star": rq }),
                Err(_) => json!({ "alpha": alpha, "r_star": null, "r_q_star": null }),
            }
        })
        .collect();
    Ok(json!({ "p": p, "rows": rows }).to_string())
}

/// Chi-square affinity of the `k`-of-`m` spike mixture, its closed-form
/// bound, and the constrained-risk lower bound with `ε² = c m / n²`.
pub fn lower_bound_json(m: u32, k: u32, n: f64, c: f64) -> Out {
    let (m, k) = (m as u64, k as u64);
    if !(n > 0.0) || !(c >= 0.0) {
        return Err("need n > 0 and c >= 0".into());
    }
    let affinity = chi_square_affinity(m, k).map_err(|e| e.to_string())?;
    let delta = k as f64 / n;
    let eps2 = c * m as f64 / (n * n);
    let cri = cri_lower_bound(delta, eps2, affinity).map_err(|e| e.to_string())?;
    Ok(json!({
        "affinity": affinity,
        "bound": affinity_bound_formula(m, k),
        "limit": AFFINITY_LIMIT,
        "delta": delta,
        "eps2": eps2,
        "lower_bound": cri,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn risk_curve(
    name: &str,
    p: f64,
    alpha: f64,
    radius: f64,
    log2_lo: u32,
    log2_hi: u32,
) -> Result<String, JsValue> {
    risk_curve_json(name, p, alpha, radius, log2_lo, log2_hi).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rates(p: f64, lo: f64, hi: f64, step: f64) -> Result<String, JsValue> {
    rates_json(p, lo, hi, step).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn lower_bound(m: u32, k: u32, n: f64, c: f64) -> Result<String, JsValue> {
    lower_bound_json(m, k, n, c).map_err(|e| JsValue::from_str(&e))
}
