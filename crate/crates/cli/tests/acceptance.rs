//! Acceptance checks, one status line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so that the timing budgets
//! are measured without other tests competing for cores. Exits nonzero if
//! any criterion fails.

use std::time::{Duration, Instant};

use qfe_core::analytics::{
    centering_constant, hard_moments, lemma1_audit, lemma1_default_grid, quad_oracle,
    soft_moments, ThresholdKind,
};
use qfe_core::bounds::{affinity_bound_formula, chi_square_affinity, cri_lower_bound};
use qfe_core::detect::{calibrate_a_with_workers, decide, DetectionSimulator, Decision};
use qfe_core::model::adversarial_family;
use qfe_core::risklab::{
    exact_risk, hull_sup_equality, mc_risk_with_workers, quadratic_reference, rate_fit,
    worst_case_risk_labeled,
};
use qfe_core::{
    make_estimator, quadratic_functional, BallSpec, CoefficientVector, EstimatorName,
    EstimatorParams, EstimatorSpec, NoiseLevel, RandomStreamId,
};
use rand::Rng;

struct Verdict {
    pass: bool,
    summary: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self {
            pass,
            summary: summary.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

fn nl(n: f64) -> NoiseLevel {
    NoiseLevel::new(n).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b.abs().max(a.abs())).abs()
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    rate_fit(points).unwrap().slope
}

fn threshold_bound_audit() -> Verdict {
    let t = Instant::now();
    let (taus, nus, ns) = lemma1_default_grid();
    let reports = lemma1_audit(&taus, &nus, &ns).unwrap();
    let elapsed = t.elapsed();
    let failed = reports.iter().filter(|r| !r.all_bounds_hold).count();
    let pass = reports.len() == 765 && failed == 0 && elapsed < Duration::from_secs(1);
    Verdict::new(
        pass,
        format!(
            "single-coordinate bounds: {} points, {failed} failures, {}",
            reports.len(),
            secs(elapsed)
        ),
    )
}

fn closed_form_vs_quadrature() -> Verdict {
    let t = Instant::now();
    let mut rng = RandomStreamId::new(20_240_601, 0).rng();
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for _ in 0..1000 {
        let kind = if rng.random_bool(0.5) {
            ThresholdKind::Soft
        } else {
            ThresholdKind::Hard
        };
        let n = 10f64.powf(rng.random_range(0.0..4.0));
        let tau = rng.random_range(1.0..16.0);
        let nu = rng.random_range(0.0..6.0);
        let theta = nu / n.sqrt();
        let t_ = tau / n;
        let closed = match kind {
            ThresholdKind::Soft => soft_moments(theta, nl(n), t_).unwrap(),
            ThresholdKind::Hard => hard_moments(theta, nl(n), t_).unwrap(),
        };
        let c = centering_constant(nl(n), tau, kind).unwrap();
        let checks = [
            (closed.m1, quad_oracle(theta, nl(n), t_, kind, 1).unwrap()),
            (closed.m2, quad_oracle(theta, nl(n), t_, kind, 2).unwrap()),
            (c, quad_oracle(0.0, nl(n), t_, kind, 1).unwrap()),
        ];
        for (k, (a, b)) in checks.iter().enumerate() {
            let e = rel(*a, *b);
            if e > worst {
                worst = e;
                worst_at = format!("{kind:?} n={n:.4} tau={tau:.4} nu={nu:.4} quantity {k}");
            }
        }
    }
    let elapsed = t.elapsed();
    let pass = worst <= 1e-9 && elapsed < Duration::from_secs(10);
    Verdict::new(
        pass,
        format!(
            "closed forms vs quadrature: 1000 tuples, max relative error {worst:.3e}, {}",
            secs(elapsed)
        ),
    )
    .note(format!("worst case: {worst_at}"))
}

fn exact_vs_monte_carlo() -> Verdict {
    let t = Instant::now();
    let balls = [
        BallSpec::lp(1.5, 0.6, 1.0).unwrap(),
        BallSpec::lp(2.0, 0.5, 1.0).unwrap(),
        BallSpec::lp(1.25, 0.9, 0.8).unwrap(),
        BallSpec::besov(1.5, 2.0, 0.7, 1.0).unwrap(),
    ];
    let mut rng = RandomStreamId::new(7, 0).rng();
    let mut worst_z = 0.0f64;
    let mut failures = Vec::new();
    let mut first: Option<(EstimatorSpec, CoefficientVector, NoiseLevel)> = None;
    for case in 0..20 {
        let ball = balls[rng.random_range(0..balls.len())];
        let n = nl([32.0, 64.0, 128.0, 256.0][rng.random_range(0..4)]);
        let which = rng.random_range(0..6);
        let (name, params) = match which {
            0 => (EstimatorName::Q1, EstimatorParams::default()),
            1 => (EstimatorName::Q2, EstimatorParams::default()),
            2 => (EstimatorName::Q3, EstimatorParams::default()),
            3 => (
                EstimatorName::Q4,
                EstimatorParams {
                    gamma: Some(1.2),
                    ..Default::default()
                },
            ),
            4 => (EstimatorName::QTilde, EstimatorParams::default()),
            _ => (
                EstimatorName::Q5,
                EstimatorParams {
                    truncate_at: Some(512),
                    ..Default::default()
                },
            ),
        };
        let spec = make_estimator(name, Some(&ball), n, params).unwrap();
        let family = adversarial_family(&ball, &spec, n);
        let theta = family[rng.random_range(0..family.len())].scaled(rng.random_range(0.3..1.0));
        let exact = exact_risk(&spec, &theta, n).unwrap();
        let mc = mc_risk_with_workers(&spec, &theta, n, 100_000, 1000 + case, 0).unwrap();
        let z = (mc.risk - exact.risk).abs() / mc.std_error;
        worst_z = worst_z.max(z);
        if !(z <= 4.0) {
            failures.push(format!(
                "case {case}: {} n={} exact {} mc {} se {}",
                spec.label(),
                n.get(),
                exact.risk,
                mc.risk,
                mc.std_error
            ));
        }
        if first.is_none() {
            first = Some((spec, theta, n));
        }
    }
    let (spec, theta, n) = first.unwrap();
    let one = mc_risk_with_workers(&spec, &theta, n, 100_000, 99, 1).unwrap();
    let eight = mc_risk_with_workers(&spec, &theta, n, 100_000, 99, 8).unwrap();
    let same = [
        (one.risk, eight.risk),
        (one.bias, eight.bias),
        (one.variance, eight.variance),
        (one.std_error, eight.std_error),
    ]
    .iter()
    .all(|(a, b)| a.to_bits() == b.to_bits())
        && one == eight;
    let mut v = Verdict::new(
        failures.is_empty() && same,
        format!(
            "exact vs Monte Carlo: 20 cases at 1e5 replicates, max |z| = {worst_z:.2}, 1 vs 8 workers {}, {}",
            if same { "bit-identical" } else { "DIFFER" },
            secs(t.elapsed())
        ),
    );
    for f in failures {
        v = v.note(f);
    }
    v
}

fn efficiency_constant(name: EstimatorName, balls: &[BallSpec]) -> (bool, Vec<String>) {
    let n = nl(65536.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for ball in balls {
        let spec = make_estimator(name, Some(ball), n, Default::default()).unwrap();
        let (label, _, r) = worst_case_risk_labeled(&spec, ball, n).unwrap();
        let ratio = r.risk * n.get() / (4.0 * ball.m * ball.m);
        pass &= (0.9..=1.3).contains(&ratio);
        parts.push(format!(
            "p={} alpha={}: n*risk/(4M^2) = {ratio:.4} at {label}",
            ball.p, ball.alpha
        ));
    }
    (pass, parts)
}

fn parametric_efficiency() -> Verdict {
    let ball = BallSpec::lp(1.25, 0.5, 1.0).unwrap();
    let (pass, parts) = efficiency_constant(EstimatorName::Q2, &[ball]);
    Verdict::new(pass, format!("q2 efficiency at n=2^16: {}", parts.join("; ")))
}

fn elbow_separation() -> Verdict {
    let t = Instant::now();
    let ball = BallSpec::lp(1.5, 0.25, 1.0).unwrap();
    let mut thresh = Vec::new();
    let mut quad = Vec::new();
    for e in (10..=20).step_by(2) {
        let n = nl((1u64 << e) as f64);
        let q3 = make_estimator(EstimatorName::Q3, Some(&ball), n, Default::default()).unwrap();
        thresh.push((n.get(), worst_case_risk_labeled(&q3, &ball, n).unwrap().2.risk));
        let qr = quadratic_reference(&ball, n).unwrap();
        quad.push((n.get(), worst_case_risk_labeled(&qr, &ball, n).unwrap().2.risk));
    }
    let (s3, sq) = (slope(&thresh), slope(&quad));
    let elapsed = t.elapsed();
    let pass = (s3 + 0.8).abs() <= 0.1 && (sq + 0.5).abs() <= 0.1 && elapsed < Duration::from_secs(120);
    Verdict::new(
        pass,
        format!(
            "rate elbow: q3 slope {s3:.4} (target -0.8), quadratic slope {sq:.4} (target -0.5), {}",
            secs(elapsed)
        ),
    )
}

fn hull_equality() -> Verdict {
    let t = Instant::now();
    let ball = BallSpec::lp(1.0, 1.2, 1.0).unwrap();
    let mut rng = RandomStreamId::new(31, 0).rng();
    let mut failed = 0;
    let mut widest = 0.0f64;
    for _ in 0..10 {
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
        let c = rng.random_range(-0.1..0.1);
        let h = hull_sup_equality(&a, c, &ball, 3, 1e-3, nl(100.0)).unwrap();
        widest = widest.max((h.sup_vertices - h.sup_ball) / h.tolerance);
        if !h.holds {
            failed += 1;
        }
    }
    Verdict::new(
        failed == 0,
        format!(
            "ball vs hull maximum risk: 10 rules, {failed} failures, largest gap {widest:.3} of tolerance, {}",
            secs(t.elapsed())
        ),
    )
}

fn lower_bound_machinery() -> Verdict {
    let small = chi_square_affinity(4, 2).unwrap();
    let small_ok = (small - 3.210_363_9).abs() <= 1e-6;
    let cap = 22.299_703 + 1e-6;
    let sweep = |k_of: &dyn Fn(u64) -> u64| {
        let mut chain = 0;
        let mut cap_hits = 0;
        let mut first = None;
        for m in 4..=10_000u64 {
            let k = k_of(m);
            let aff = chi_square_affinity(m, k).unwrap();
            let bound = affinity_bound_formula(m, k);
            let bad_chain = aff > bound;
            let bad_cap = bound > cap;
            chain += bad_chain as usize;
            cap_hits += bad_cap as usize;
            if (bad_chain || bad_cap) && first.is_none() {
                first = Some((m, k, aff, bound));
            }
        }
        (chain, cap_hits, first)
    };
    let ceil_k = |m: u64| {
        let r = m.isqrt();
        if r * r == m {
            r
        } else {
            r + 1
        }
    };
    let (chain, cap_hits, first) = sweep(&ceil_k);
    let (f_chain, f_cap, _) = sweep(&|m: u64| m.isqrt());
    let cri = cri_lower_bound(0.1, 1e-5, 22.299_703).unwrap();
    let cri_ok = (cri - 0.007_013_4).abs() <= 1e-6;
    let pass = small_ok && chain == 0 && cap_hits == 0 && cri_ok;
    let mut v = Verdict::new(
        pass,
        format!(
            "affinity(4,2) = {small:.7}; k = ceil(sqrt m), m in 4..=10^4: {chain} affinity>bound, {cap_hits} bound>22.299703; cri example = {cri:.7}"
        ),
    );
    if let Some((m, k, aff, bound)) = first {
        v = v.note(format!(
            "first violation m={m}, k={k}: affinity {aff:.4}, 4(1+(e-1)k/m)^k = {bound:.4}"
        ));
    }
    v.note(format!(
        "with k = floor(sqrt m): {f_chain} affinity>bound, {f_cap} bound>22.299703"
    ))
}

fn figure_curves() -> Verdict {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = qfe_lab::run(
        ["qfe-lab", "rates", "--p", "1.25", "--alpha", "0.05:0.80:0.01"],
        &mut out,
        &mut err,
    );
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    let p = 1.25f64;
    let mut mismatches = 0;
    let mut r_kink = None;
    let mut rq_kink = None;
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        let alpha: f64 = f[0].parse().unwrap();
        let s = alpha + 0.5 - 1.0 / p;
        if s <= 0.0 {
            mismatches += (!f[1].is_empty() || !f[2].is_empty()) as usize;
            continue;
        }
        let (r, rq): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        let want_r = if alpha > 1.0 / (2.0 * p) {
            1.0
        } else {
            (4.0 * p * s + 2.0 - p) / (1.0 + 2.0 * p * s)
        };
        let want_rq = (8.0 * s / (1.0 + 4.0 * s)).min(1.0);
        mismatches += (r.to_bits() != want_r.to_bits()) as usize;
        mismatches += (rq.to_bits() != want_rq.to_bits()) as usize;
        if r == 1.0 && r_kink.is_none() {
            r_kink = Some(alpha);
        }
        if rq == 1.0 && rq_kink.is_none() {
            rq_kink = Some(alpha);
        }
    }
    let pass = code == 0
        && rows.len() == 76
        && mismatches == 0
        && r_kink == Some(0.4)
        && rq_kink == Some(0.55);
    Verdict::new(
        pass,
        format!(
            "rates --p 1.25: {} rows, {mismatches} formula mismatches, r* reaches 1 at {r_kink:?}, r_q* at {rq_kink:?}",
            rows.len()
        ),
    )
}

fn detection() -> Verdict {
    let t = Instant::now();
    let boundary = decide(0.3, 0.5).unwrap() == Decision::Reject
        && decide(0.25, 0.5).unwrap() == Decision::Accept
        && [1e-12, 1.0, 1e9]
            .iter()
            .all(|&a| decide(-1.0, a).unwrap() == Decision::Accept);

    let ball = BallSpec::lp(1.5, 0.25, 1.0).unwrap();
    let n = nl(1024.0);
    let spec = make_estimator(EstimatorName::Q3, Some(&ball), n, Default::default()).unwrap();
    let alts: Vec<CoefficientVector> = adversarial_family(&ball, &spec, n)
        .into_iter()
        .filter(|v| quadratic_functional(v) > 0.0)
        .collect();
    let refs: Vec<&CoefficientVector> = alts.iter().collect();
    let sim = DetectionSimulator::new(&spec, n, &refs, 10_000, 5, 1).unwrap();
    let rows = sim.alternative_estimates(&refs).unwrap();
    let mut monotone = true;
    let mut prev: Option<(usize, Vec<usize>)> = None;
    for k in 0..60 {
        let a = 1e-4 * 1.25f64.powi(k);
        let t1 = sim.null_estimates().iter().filter(|&&q| q > a / 2.0).count();
        let t2: Vec<usize> = rows
            .iter()
            .map(|r| r.iter().filter(|&&q| q <= a / 2.0).count())
            .collect();
        if let Some((p1, p2)) = &prev {
            monotone &= t1 <= *p1 && t2.iter().zip(p2).all(|(x, y)| x >= y);
        }
        prev = Some((t1, t2));
    }

    let mut points = Vec::new();
    for e in [10, 12, 14, 16] {
        let n = nl((1u64 << e) as f64);
        let spec = make_estimator(EstimatorName::Q3, Some(&ball), n, Default::default()).unwrap();
        let c = calibrate_a_with_workers(&spec, n, 0.1, &ball, 10_000, 2024, 1).unwrap();
        points.push((n.get(), c.a));
    }
    let s = slope(&points);
    let elapsed = t.elapsed();
    let pass = boundary && monotone && (s + 0.4).abs() <= 0.15 && elapsed < Duration::from_secs(300);
    Verdict::new(
        pass,
        format!(
            "detection: boundary {}, pathwise monotone {}, calibrated slope {s:.4} (target -0.4), {} on one thread",
            if boundary { "ok" } else { "WRONG" },
            if monotone { "ok" } else { "VIOLATED" },
            secs(elapsed)
        ),
    )
    .note(format!(
        "a_n: {}",
        points
            .iter()
            .map(|(n, a)| format!("n={n} a={a:.5}"))
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn full_efficiency_regimes() -> Verdict {
    let balls = [
        BallSpec::lp(1.25, 0.5, 1.0).unwrap(),
        BallSpec::lp(2.5, 0.3, 1.0).unwrap(),
    ];
    let (pass, parts) = efficiency_constant(EstimatorName::Q5, &balls);
    Verdict::new(pass, format!("q5 efficiency at n=2^16: {}", parts.join("; ")))
}

fn main() {
    // libtest flags such as --nocapture may be passed; nothing to parse.
    let criteria: [(u32, fn() -> Verdict); 10] = [
        (1, threshold_bound_audit),
        (2, closed_form_vs_quadrature),
        (3, exact_vs_monte_carlo),
        (4, parametric_efficiency),
        (5, elbow_separation),
        (6, hull_equality),
        (7, lower_bound_machinery),
        (8, figure_curves),
        (9, detection),
        (10, full_efficiency_regimes),
    ];
    let mut failed = 0;
    for (k, check) in criteria {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {k:>2}: {}  {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.summary
        );
        for note in &v.notes {
            println!("              {note}");
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
