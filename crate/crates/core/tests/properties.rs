use proptest::prelude::*;
use qfe_core::analytics::{hard_moments, soft_moments};
use qfe_core::bounds::{chi_square_affinity, hypergeometric_pmf};
use qfe_core::detect::DetectionSimulator;
use qfe_core::risklab::mc_risk_with_workers;
use qfe_core::*;

fn nl(n: f64) -> NoiseLevel {
    NoiseLevel::new(n).unwrap()
}

fn lp_ball() -> impl Strategy<Value = BallSpec> {
    (1.0f64..3.0, 0.05f64..1.2, 0.5f64..2.0).prop_map(|(p, a, m)| BallSpec::lp(p, a + (1.0 / p - 0.5).max(0.0), m).unwrap())
}

fn coefficients() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ball_norm_is_homogeneous(ball in lp_ball(), v in coefficients(), c in -5.0f64..5.0) {
        let theta = CoefficientVector::from_dense(v).unwrap();
        let lhs = ball_norm(&ball, &theta.scaled(c));
        let rhs = c.abs() * ball_norm(&ball, &theta);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn besov_norm_is_homogeneous(p in 1.0f64..3.0, q in 1.0f64..3.0, v in coefficients(), c in 0.1f64..5.0) {
        let ball = BallSpec::besov(p, q, 0.7, 1.0).unwrap();
        let theta = CoefficientVector::from_dense(v).unwrap();
        let lhs = ball_norm(&ball, &theta.scaled(c));
        let rhs = c * ball_norm(&ball, &theta);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn hull_is_idempotent_and_contains_ball(ball in lp_ball(), v in coefficients()) {
        let hull = quadratic_hull(&ball);
        prop_assert_eq!(quadratic_hull(&hull), hull);
        let theta = CoefficientVector::from_dense(v).unwrap();
        // Put θ on the ball's boundary, then it must sit in the hull.
        let norm = ball_norm(&ball, &theta);
        prop_assume!(norm > 0.0);
        let on_sphere = theta.scaled(ball.m / norm * (1.0 - 1e-12));
        prop_assert!(contains(&ball, &on_sphere));
        prop_assert!(ball_norm(&hull, &on_sphere) <= hull.m * (1.0 + 1e-12));
    }

    #[test]
    fn moments_are_even_in_theta(theta in -3.0f64..3.0, tau in 0.0f64..30.0, n in 1.0f64..1e4) {
        let t = tau / n;
        for f in [soft_moments, hard_moments] {
            let a = f(theta, nl(n), t).unwrap();
            let b = f(-theta, nl(n), t).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.m1 >= 0.0 && a.variance() >= 0.0);
        }
    }

    #[test]
    fn moments_grow_with_signal(x in 0.0f64..4.0, dx in 0.01f64..2.0, tau in 1.0f64..20.0) {
        let n = nl(1.0);
        let lo = soft_moments(x, n, tau).unwrap().m1;
        let hi = soft_moments(x + dx, n, tau).unwrap().m1;
        prop_assert!(hi >= lo);
        // Hard thresholding keeps the threshold itself, so its mean dominates.
        prop_assert!(hard_moments(x, n, tau).unwrap().m1 >= lo);
    }

    #[test]
    fn schedule_blocks_are_consistent(m in 1u64..5000, j_star in 0u32..20, i in 1u64..100_000_000) {
        let s = ThresholdSchedule::new(m, j_star, TailKind::Soft).unwrap();
        prop_assert_eq!(s.end(), m << j_star);
        match s.block_of(i) {
            None => prop_assert!(i <= m),
            Some(j) => {
                let (lo, hi) = s.block_range(j);
                prop_assert!(lo <= i && i <= hi);
                prop_assert_eq!(lo, (m << (j - 1)) + 1);
                prop_assert_eq!(hi, m << j);
                if j <= j_star {
                    prop_assert_eq!(s.tau(i), 2.0 * j as f64);
                }
            }
        }
    }

    #[test]
    fn quadratic_matches_its_diagonal_unrolling(m in 1u64..200, v in coefficients(), n in 1.0f64..1e4) {
        let q = EstimatorSpec::quadratic(m).unwrap();
        let d = q.to_diag_quad(nl(n)).unwrap();
        let theta = CoefficientVector::from_dense(v).unwrap();
        let a = exact_risk(&q, &theta, nl(n)).unwrap();
        let b = exact_risk(&d, &theta, nl(n)).unwrap();
        prop_assert!((a.risk - b.risk).abs() <= 1e-12 * a.risk.max(1e-300));
        let y = CoefficientVector::from_dense(theta.to_dense().unwrap().into_iter().chain(std::iter::repeat(0.5)).take(m as usize + 3).collect()).unwrap();
        let ea = estimate(&q, &y, nl(n)).unwrap();
        let eb = estimate(&d, &y, nl(n)).unwrap();
        prop_assert!((ea - eb).abs() <= 1e-12 * ea.abs().max(1.0));
    }

    #[test]
    fn hypergeometric_pmf_sums_to_one(m in 4u64..10_000) {
        let k = m.isqrt();
        let total: f64 = hypergeometric_pmf(m, k).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(chi_square_affinity(m, k).unwrap() >= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_ignores_worker_count(seed in any::<u64>(), which in 0usize..3) {
        let ball = BallSpec::lp(1.5, 0.5, 1.0).unwrap();
        let n = nl(256.0);
        let name = [EstimatorName::Q1, EstimatorName::Q2, EstimatorName::QTilde][which];
        let spec = make_estimator(name, Some(&ball), n, Default::default()).unwrap();
        let theta = spike_config(&ball, Position::Index(3)).unwrap();
        let one = mc_risk_with_workers(&spec, &theta, n, 500, seed, 1).unwrap();
        let many = mc_risk_with_workers(&spec, &theta, n, 500, seed, 4).unwrap();
        prop_assert_eq!(one, many);
    }

    #[test]
    fn detection_errors_are_monotone_in_a(seed in any::<u64>()) {
        let ball = BallSpec::lp(1.5, 0.25, 1.0).unwrap();
        let n = nl(1024.0);
        let spec = make_estimator(EstimatorName::Q3, Some(&ball), n, Default::default()).unwrap();
        let alts: Vec<CoefficientVector> = model::adversarial_family(&ball, &spec, n)
            .into_iter()
            .filter(|v| quadratic_functional(v) > 0.0)
            .collect();
        let refs: Vec<&CoefficientVector> = alts.iter().collect();
        let sim = DetectionSimulator::new(&spec, n, &refs, 300, seed, 1).unwrap();
        let null = sim.null_estimates();
        let rows = sim.alternative_estimates(&refs).unwrap();
        let grid: Vec<f64> = (0..30).map(|k| 1e-4 * 1.4f64.powi(k)).collect();
        let mut prev: Option<(usize, Vec<usize>)> = None;
        for a in grid {
            let t1 = null.iter().filter(|&&q| detect::decide(q, a).unwrap() == detect::Decision::Reject).count();
            let t2: Vec<usize> = rows
                .iter()
                .map(|r| r.iter().filter(|&&q| detect::decide(q, a).unwrap() == detect::Decision::Accept).count())
                .collect();
            if let Some((p1, p2)) = &prev {
                prop_assert!(t1 <= *p1);
                prop_assert!(t2.iter().zip(p2).all(|(x, y)| x >= y));
            }
            prev = Some((t1, t2));
        }
    }
}
