//! Adaptive Gauss–Kronrod (7/15) integration.
//!
//! Used only as an independent check on the closed-form moments, so it is
//! deliberately plain: global adaptive bisection of the interval with the
//! largest error estimate until the summed estimate meets the tolerance.

use crate::error::{QfeError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Interval cap; exceeding it means the integrand is not what we think it is.
pub const MAX_SUBDIVISIONS: usize = 4000;

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Piece {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]`, splitting first at the given interior
/// breakpoints, until the summed error estimate is below
/// `rel_tol · |result| + abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);

    let mut pieces: Vec<Piece> = edges.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= rel_tol * value.abs() + abs_tol {
            return Ok(value);
        }
        if pieces.len() >= MAX_SUBDIVISIONS {
            return Err(QfeError::QuadratureNoConvergence {
                subdivisions: pieces.len(),
                error,
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one piece");
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval exhausted at machine resolution.
            return Err(QfeError::QuadratureNoConvergence {
                subdivisions: pieces.len() + 1,
                error,
            });
        }
        pieces.push(gk15(&f, p.a, mid));
        pieces.push(gk15(&f, mid, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| x.powi(6) - 3.0 * x, -1.0, 2.0, &[], 1e-15, 0.0).unwrap();
        let want = (128.0 + 1.0) / 7.0 - 1.5 * (4.0 - 1.0);
        assert!((v - want).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_with_breakpoint() {
        let v = integrate(|x: f64| x.abs(), -1.0, 3.0, &[0.0], 1e-14, 0.0).unwrap();
        assert!((v - 5.0).abs() < 1e-13);
    }

    #[test]
    fn non_convergence_is_reported() {
        // An endpoint singularity never meets a zero absolute tolerance.
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &[], 0.0, 0.0);
        assert!(matches!(r, Err(QfeError::QuadratureNoConvergence { .. })));
    }
}
