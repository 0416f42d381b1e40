//! Parsers for the textual inputs shared by several subcommands.

use clap::Args;
use qfe_core::model::adversarial_family_labeled;
use qfe_core::{
    make_estimator, spike_config, BallSpec, CoefficientVector, EstimatorName, EstimatorParams,
    EstimatorSpec, NoiseLevel, Position,
};
use serde::{Deserialize, Serialize};

use crate::config::list_or_scalar;
use crate::Invalid;

pub type Parsed<T> = Result<T, Invalid>;

fn bad<T>(msg: impl std::fmt::Display) -> Parsed<T> {
    Err(Invalid::msg(msg))
}

/// A number, also accepting `2^k`.
pub fn number(text: &str) -> Parsed<f64> {
    let t = text.trim();
    let v = match t.split_once('^') {
        Some((b, e)) => match (b.trim().parse::<f64>(), e.trim().parse::<f64>()) {
            (Ok(b), Ok(e)) => b.powf(e),
            _ => return bad(format!("cannot read `{t}` as a number")),
        },
        None => match t.parse::<f64>() {
            Ok(v) => v,
            Err(_) => return bad(format!("cannot read `{t}` as a number")),
        },
    };
    if !v.is_finite() {
        return bad(format!("`{t}` is not finite"));
    }
    Ok(v)
}

pub fn integer(text: &str) -> Parsed<u64> {
    let v = number(text)?;
    if v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(63) {
        return bad(format!("`{text}` is not a nonnegative integer"));
    }
    Ok(v as u64)
}

/// Comma-separated numbers.
pub fn number_list(text: &str) -> Parsed<Vec<f64>> {
    let out = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(number)
        .collect::<Parsed<Vec<_>>>()?;
    if out.is_empty() {
        return bad("empty list");
    }
    Ok(out)
}

/// `lo:hi:step` with the step counted in decimal units so that grid points
/// land on their decimal values, or a comma-separated list.
pub fn grid(text: &str) -> Parsed<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let decimals = |s: &str| s.split_once('.').map_or(0, |(_, f)| f.len());
            let d = decimals(lo).max(decimals(hi)).max(decimals(step)) as i32;
            let scale = 10f64.powi(d);
            let to_units = |s: &str| -> Parsed<i64> {
                let v = number(s)? * scale;
                if (v - v.round()).abs() > 1e-6 {
                    return bad(format!("`{s}` is not a decimal number"));
                }
                Ok(v.round() as i64)
            };
            let (a, b, h) = (to_units(lo)?, to_units(hi)?, to_units(step)?);
            if h <= 0 || b < a {
                return bad(format!("grid `{text}` needs lo <= hi and step > 0"));
            }
            let count = (b - a) / h + 1;
            if count > 1_000_000 {
                return bad(format!("grid `{text}` has too many points"));
            }
            Ok((0..count).map(|k| (a + k * h) as f64 / scale).collect())
        }
        _ => number_list(text),
    }
}

pub fn noise(v: f64) -> Parsed<NoiseLevel> {
    NoiseLevel::new(v).map_err(Invalid::from)
}

/// Ball flags. A ball is present iff `p` is given; `besov_q` switches to a
/// Besov ball.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BallArgs {
    /// Ball exponent p
    #[arg(long)]
    pub p: Option<f64>,
    /// Ball smoothness alpha
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Ball radius M
    #[arg(long)]
    pub radius: Option<f64>,
    /// Besov q; selects a Besov ball instead of an Lp ball
    #[arg(long)]
    pub besov_q: Option<f64>,
}

impl BallArgs {
    pub fn ball(&self) -> Parsed<Option<BallSpec>> {
        let Some(p) = self.p else {
            if self.alpha.is_some() || self.besov_q.is_some() {
                return bad("a ball needs --p");
            }
            return Ok(None);
        };
        let Some(alpha) = self.alpha else {
            return bad("a ball needs --alpha");
        };
        let m = self.radius.unwrap_or(1.0);
        let spec = match self.besov_q {
            Some(q) => BallSpec::besov(p, q, alpha, m),
            None => BallSpec::lp(p, alpha, m),
        };
        spec.map(Some).map_err(Invalid::from)
    }

    pub fn require(&self) -> Parsed<BallSpec> {
        self.ball()?
            .ok_or_else(|| Invalid::msg("this command needs a ball (--p, --alpha)"))
    }
}

/// Estimator flags.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EstimatorArgs {
    /// q1..q6, qtilde, or qref (truncated quadratic with m = n^{2/(1+4s)})
    #[arg(long)]
    pub estimator: Option<String>,
    /// Tail exponent for q4
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Rate parameter for q6
    #[arg(long)]
    pub r: Option<f64>,
    /// Override the quadratic block length m
    #[arg(long)]
    pub m: Option<u64>,
    /// Truncation point for q5/q6
    #[arg(long)]
    pub truncate_at: Option<u64>,
}

impl EstimatorArgs {
    pub fn build(
        &self,
        default: &str,
        ball: Option<&BallSpec>,
        n: NoiseLevel,
    ) -> Parsed<EstimatorSpec> {
        let name = self.estimator.as_deref().unwrap_or(default);
        if name.eq_ignore_ascii_case("qref") {
            let Some(ball) = ball else {
                return bad("qref needs a ball");
            };
            return qfe_core::risklab::quadratic_reference(ball, n).map_err(Invalid::from);
        }
        let parsed: EstimatorName = name.parse().map_err(Invalid::from)?;
        let params = EstimatorParams {
            gamma: self.gamma,
            r: self.r,
            m_override: self.m,
            truncate_at: self.truncate_at,
        };
        make_estimator(parsed, ball, n, params).map_err(Invalid::from)
    }
}

/// Coefficient vector descriptions:
///
/// - `zero`
/// - `spike:i:h`, height `h` at index `i`
/// - `ball-spike:i`, the largest spike at `i` inside the ball
/// - `family:LABEL`, a member of the estimator's adversarial family
/// - `values:x1,x2,...`
pub fn theta(
    text: &str,
    ball: Option<&BallSpec>,
    spec: &EstimatorSpec,
    n: NoiseLevel,
) -> Parsed<CoefficientVector> {
    let t = text.trim();
    let (head, rest) = t.split_once(':').unwrap_or((t, ""));
    match head {
        "zero" if rest.is_empty() => Ok(CoefficientVector::zeros(0)),
        "spike" => {
            let Some((i, h)) = rest.split_once(':') else {
                return bad(format!("expected spike:i:h, got `{t}`"));
            };
            let i = integer(i)?;
            let h = number(h)?;
            if i == 0 {
                return bad("indices start at 1");
            }
            CoefficientVector::sparse(i, vec![(i, h)]).map_err(Invalid::from)
        }
        "ball-spike" => {
            let Some(ball) = ball else {
                return bad("ball-spike needs a ball");
            };
            spike_config(ball, Position::Index(integer(rest)?)).map_err(Invalid::from)
        }
        "family" => {
            let Some(ball) = ball else {
                return bad("family members need a ball");
            };
            adversarial_family_labeled(ball, spec, n)
                .into_iter()
                .find(|(l, _)| l == rest)
                .map(|(_, v)| v)
                .ok_or_else(|| Invalid::msg(format!("no family member labelled `{rest}`")))
        }
        "values" => CoefficientVector::from_dense(number_list(rest)?).map_err(Invalid::from),
        _ => bad(format!(
            "cannot read theta `{t}`; use zero, spike:i:h, ball-spike:i, family:LABEL or values:..."
        )),
    }
}

/// `n` given as one value or a list.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct NoiseArgs {
    /// Noise level n, or a comma-separated list (2^k accepted)
    #[arg(long = "n")]
    #[serde(default, deserialize_with = "list_or_scalar")]
    pub n: Option<String>,
}

impl NoiseArgs {
    pub fn list(&self) -> Parsed<Vec<NoiseLevel>> {
        let Some(text) = &self.n else {
            return bad("missing --n");
        };
        number_list(text)?.into_iter().map(noise).collect()
    }

    pub fn single(&self) -> Parsed<NoiseLevel> {
        let l = self.list()?;
        if l.len() != 1 {
            return bad("expected a single --n");
        }
        Ok(l[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_grid_hits_decimal_points() {
        let g = grid("0.05:0.80:0.01").unwrap();
        assert_eq!(g.len(), 76);
        assert_eq!(g[35], 0.4);
        assert_eq!(g[50], 0.55);
        assert_eq!(g[75], 0.8);
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(number("2^16").unwrap(), 65536.0);
        assert_eq!(number_list("2^10, 100").unwrap(), vec![1024.0, 100.0]);
        assert!(number("2^").is_err());
        assert!(integer("1.5").is_err());
    }
}
