use qfe_wasm::{lower_bound_json, rates_json, risk_curve_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn risk_curve_reports_slope() {
    let v = parse(&risk_curve_json("q3", 1.5, 0.25, 1.0, 10, 20).unwrap());
    assert_eq!(v["rows"].as_array().unwrap().len(), 11);
    let slope = v["slope"].as_f64().unwrap();
    assert!((slope + 0.8).abs() < 0.1, "{slope}");
    assert!((v["minimax_slope"].as_f64().unwrap() + 0.8).abs() < 1e-12);
}

#[test]
fn risk_curve_rejects_bad_input() {
    assert!(risk_curve_json("q9", 1.5, 0.25, 1.0, 10, 12).is_err());
    assert!(risk_curve_json("q2", 1.5, 0.1, 1.0, 10, 12).is_err());
    assert!(risk_curve_json("q2", 1.5, 0.5, 1.0, 12, 10).is_err());
}

#[test]
fn rates_mark_noncompact_balls() {
    let v = parse(&rates_json(1.25, 0.05, 0.8, 0.05).unwrap());
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    assert!(rows[0]["r_star"].is_null());
    assert_eq!(rows[15]["r_star"].as_f64(), Some(1.0));
}

#[test]
fn lower_bound_small_case() {
    let v = parse(&lower_bound_json(4, 2, 100.0, 0.001).unwrap());
    assert!((v["affinity"].as_f64().unwrap() - 3.2103639).abs() < 1e-6);
    assert!(lower_bound_json(4, 5, 100.0, 0.001).is_err());
}
