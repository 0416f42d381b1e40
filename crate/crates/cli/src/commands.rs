use std::fmt::Write as _;

use anyhow::Context;
use clap::Args;
use qfe_core::analytics::{lemma1_audit, lemma1_default_grid};
use qfe_core::bounds::{
    affinity_bound, affinity_bound_formula, chi_square_affinity, cri_lower_bound,
    hypergeometric_pmf, AFFINITY_LIMIT,
};
use qfe_core::detect::{calibrate_a_with_workers, error_rates_with_workers};
use qfe_core::model::adversarial_family;
use qfe_core::risklab::{
    exact_risk, hull_sup_equality, mc_risk_with_workers, rate_fit, table1_exponents,
    worst_case_risk_labeled,
};
use qfe_core::{quadratic_functional, CoefficientVector, RandomStreamId};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{list_or_scalar, merge};
use crate::inputs::{self, BallArgs, EstimatorArgs, NoiseArgs};
use crate::{header, num, AuditFailure, Cli, Command, Invalid};

type Out<'a> = &'a mut String;

pub(crate) fn dispatch(cli: &Cli, out: Out) -> anyhow::Result<()> {
    let file = cli.config.as_deref();
    let workers = cli.workers.unwrap_or(0);
    match &cli.command {
        Command::Risk(a) => risk(&merge(a, file)?, workers, out),
        Command::Sweep(a) => sweep(&merge(a, file)?, out),
        Command::Rates(a) => rates(&merge(a, file)?, out),
        Command::LemmaCheck(a) => lemma_check(&merge(a, file)?, out),
        Command::HullCheck(a) => hull_check(&merge(a, file)?, out),
        Command::LowerBound(a) => lower_bound(&merge(a, file)?, out),
        Command::Detect(a) => detect(&merge(a, file)?, workers, out),
        Command::Fit(a) => fit(&merge(a, file)?, out),
    }
}

fn json_line(out: Out, value: &serde_json::Value) -> anyhow::Result<()> {
    out.push_str(&serde_json::to_string_pretty(value)?);
    out.push('\n');
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct RiskArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ball: BallArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
    /// zero, spike:i:h, ball-spike:i, family:LABEL or values:x1,x2,...
    #[arg(long)]
    pub theta: Option<String>,
    /// Report the exact risk (the default when --replicates is absent)
    #[arg(long)]
    #[serde(default)]
    pub exact: bool,
    /// Monte Carlo replicates
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn risk(a: &RiskArgs, workers: usize, out: Out) -> anyhow::Result<()> {
    let ball = a.ball.ball()?;
    let n = a.noise.single()?;
    let spec = a.estimator.build("q1", ball.as_ref(), n)?;
    let theta_text = a.theta.as_deref().unwrap_or("zero");
    let theta = inputs::theta(theta_text, ball.as_ref(), &spec, n)?;
    if let Some(r) = a.replicates {
        if r < 2 {
            return Err(Invalid::msg("--replicates must be at least 2").into());
        }
    }
    let seed = a.seed.unwrap_or(1);
    let mut doc = json!({
        "estimator": spec.label(),
        "n": n.get(),
        "theta": theta_text,
        "q": quadratic_functional(&theta),
    });
    if a.exact || a.replicates.is_none() {
        doc["exact"] = serde_json::to_value(exact_risk(&spec, &theta, n)?)?;
    }
    if let Some(reps) = a.replicates {
        let mc = mc_risk_with_workers(&spec, &theta, n, reps, seed, workers)?;
        doc["monte_carlo"] = serde_json::to_value(mc)?;
        out.push_str(&header("risk", Some((seed, reps))));
    }
    json_line(out, &doc)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ball: BallArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
}

fn sweep(a: &SweepArgs, out: Out) -> anyhow::Result<()> {
    let ball = a.ball.require()?;
    let ns = a.noise.list()?;
    let specs = ns
        .iter()
        .map(|&n| a.estimator.build("q2", Some(&ball), n))
        .collect::<Result<Vec<_>, _>>()?;
    out.push_str(&header("sweep", None));
    out.push_str("n,risk,bias,variance,theta_id\n");
    for (n, spec) in ns.iter().zip(&specs) {
        let (label, _, r) = worst_case_risk_labeled(spec, &ball, *n)?;
        writeln!(
            out,
            "{},{},{},{},{}",
            num(n.get()),
            num(r.risk),
            num(r.bias),
            num(r.variance),
            label
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct RatesArgs {
    #[arg(long)]
    pub p: Option<f64>,
    /// Grid lo:hi:step or a list
    #[arg(long)]
    #[serde(default, deserialize_with = "list_or_scalar")]
    pub alpha: Option<String>,
}

fn rates(a: &RatesArgs, out: Out) -> anyhow::Result<()> {
    let p = a.p.ok_or_else(|| Invalid::msg("rates needs --p"))?;
    if !(p > 0.0) {
        return Err(Invalid::msg(format!("p must be positive, got {p}")).into());
    }
    let alphas = inputs::grid(a.alpha.as_deref().unwrap_or("0.05:0.80:0.01"))?;
    if let Some(bad) = alphas.iter().find(|x| !(**x > 0.0)) {
        return Err(Invalid::msg(format!("alpha must be positive, got {bad}")).into());
    }
    out.push_str(&header("rates", None));
    out.push_str("alpha,r_star,r_q_star\n");
    for alpha in alphas {
        // Empty fields where s <= 0 and the ball is not compact.
        match table1_exponents(p, alpha) {
            Ok((r, rq)) => writeln!(out, "{},{},{}", num(alpha), num(r), num(rq))?,
            Err(_) => writeln!(out, "{},,", num(alpha))?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LemmaArgs {
    /// Thresholds tau (default 1,2,4,8,16)
    #[arg(long)]
    #[serde(default, deserialize_with = "list_or_scalar")]
    pub tau: Option<String>,
    /// Scaled signals sqrt(n)*theta (default 0:5:0.1)
    #[arg(long)]
    #[serde(default, deserialize_with = "list_or_scalar")]
    pub nu: Option<String>,
    /// Noise levels (default 1,100,10000)
    #[arg(long = "n")]
    #[serde(default, deserialize_with = "list_or_scalar")]
    pub n: Option<String>,
}

fn lemma_check(a: &LemmaArgs, out: Out) -> anyhow::Result<()> {
    let (dt, dnu, dn) = lemma1_default_grid();
    let taus = a.tau.as_deref().map(inputs::grid).transpose()?.unwrap_or(dt);
    let nus = a.nu.as_deref().map(inputs::grid).transpose()?.unwrap_or(dnu);
    let ns = a.n.as_deref().map(inputs::number_list).transpose()?.unwrap_or(dn);
    let reports = lemma1_audit(&taus, &nus, &ns)?;
    out.push_str(&header("lemma-check", None));
    out.push_str("tau,nu,n,theta,mu0,bound_mu0,bias,bound_bias,variance,bound_variance,pass\n");
    let mut failed = 0;
    for (k, r) in reports.iter().enumerate() {
        let nu = nus[(k / ns.len()) % nus.len()];
        if !r.all_bounds_hold {
            failed += 1;
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            num(r.tau),
            num(nu),
            num(r.n),
            num(r.theta),
            num(r.mu0),
            num(r.bound_mu0),
            num(r.bias),
            num(r.bound_bias),
            num(r.variance),
            num(r.bound_var),
            r.all_bounds_hold
        )?;
    }
    if failed > 0 {
        return Err(AuditFailure(format!("{failed} of {} grid points failed", reports.len())).into());
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct HullArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ball: BallArgs,
    /// Diagonal weights a1,a2,...
    #[arg(long)]
    #[serde(default, deserialize_with = "list_or_scalar")]
    pub a: Option<String>,
    /// Constant c of the rule
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Draw this many random rules instead of --a/--c
    #[arg(long)]
    pub random: Option<u64>,
    /// Dimension of random rules (default 3)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Grid spacing (default 0.001)
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn hull_check(a: &HullArgs, out: Out) -> anyhow::Result<()> {
    let ball = a.ball.require()?;
    let n = if a.noise.n.is_some() {
        a.noise.single()?
    } else {
        inputs::noise(100.0)?
    };
    let step = a.grid_step.unwrap_or(1e-3);
    let seed = a.seed.unwrap_or(1);
    let rules: Vec<(Vec<f64>, f64)> = match (a.random, &a.a) {
        (Some(_), Some(_)) => {
            return Err(Invalid::msg("give either --random or --a, not both").into())
        }
        (Some(count), None) => {
            let dim = a.dim.unwrap_or(3);
            (0..count)
                .map(|k| {
                    let mut rng = RandomStreamId::new(seed, k).rng();
                    let w = (0..dim).map(|_| rng.random_range(0.0..2.0)).collect();
                    let c = rng.random_range(-0.1..0.1);
                    (w, c)
                })
                .collect()
        }
        (None, Some(text)) => vec![(inputs::number_list(text)?, a.c.unwrap_or(0.0))],
        (None, None) => return Err(Invalid::msg("hull-check needs --a or --random").into()),
    };
    let mut checks = Vec::with_capacity(rules.len());
    for (w, c) in &rules {
        checks.push(hull_sup_equality(w, *c, &ball, w.len(), step, n)?);
    }
    let random = a.random.map(|_| (seed, rules.len() as u64));
    out.push_str(&header("hull-check", random));
    out.push_str("rule,a,c,sup_ball,sup_hull,sup_vertices,tolerance,grid_points,holds\n");
    let mut failed = 0;
    for (k, ((w, c), h)) in rules.iter().zip(&checks).enumerate() {
        if !h.holds {
            failed += 1;
        }
        let w: Vec<String> = w.iter().map(|x| num(*x)).collect();
        writeln!(
            out,
            "{k},{},{},{},{},{},{},{},{}",
            w.join(";"),
            num(*c),
            num(h.sup_ball),
            num(h.sup_hull),
            num(h.sup_vertices),
            num(h.tolerance),
            num(h.grid_points),
            h.holds
        )?;
    }
    if failed > 0 {
        return Err(AuditFailure(format!("{failed} of {} rules failed", rules.len())).into());
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LowerBoundArgs {
    /// Number of candidate coordinates
    #[arg(long)]
    pub m: Option<u64>,
    /// Spikes per vertex (default floor(sqrt(m)))
    #[arg(long)]
    pub k: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
    /// Null risk budget constant: eps^2 = c m / n^2 (default 0.001)
    #[arg(long)]
    pub c: Option<f64>,
}

fn lower_bound(a: &LowerBoundArgs, out: Out) -> anyhow::Result<()> {
    let m = a.m.ok_or_else(|| Invalid::msg("lower-bound needs --m"))?;
    let n = a.noise.single()?;
    let k = a.k.unwrap_or(m.isqrt());
    let c = a.c.unwrap_or(1e-3);
    if !(c >= 0.0) {
        return Err(Invalid::msg(format!("c must be nonnegative, got {c}")).into());
    }
    let pmf_total: f64 = hypergeometric_pmf(m, k)?.iter().sum();
    let affinity = chi_square_affinity(m, k)?;
    let bound = affinity_bound(m, k);
    let delta = k as f64 / n.get();
    let eps2 = c * m as f64 / (n.get() * n.get());
    let doc = json!({
        "m": m,
        "k": k,
        "n": n.get(),
        "c": c,
        "hypergeometric_total": pmf_total,
        "affinity": affinity,
        "affinity_bound": affinity_bound_formula(m, k),
        "affinity_bound_valid": bound.is_ok(),
        "affinity_limit": AFFINITY_LIMIT,
        "delta": delta,
        "eps2": eps2,
        "cri_at_affinity": cri_lower_bound(delta, eps2, affinity)?,
        "cri_at_limit": cri_lower_bound(delta, eps2, AFFINITY_LIMIT)?,
    });
    json_line(out, &doc)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ball: BallArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
    /// Target for type I plus maximal type II error (default 0.1)
    #[arg(long)]
    pub level: Option<f64>,
    /// Report error rates at this a instead of calibrating
    #[arg(long)]
    pub a: Option<f64>,
    /// Replicates per rate (default 10000)
    #[arg(long)]
    pub replicates: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn detect(a: &DetectArgs, workers: usize, out: Out) -> anyhow::Result<()> {
    let ball = a.ball.require()?;
    let ns = a.noise.list()?;
    let specs = ns
        .iter()
        .map(|&n| a.estimator.build("q3", Some(&ball), n))
        .collect::<Result<Vec<_>, _>>()?;
    let reps = a.replicates.unwrap_or(10_000);
    let seed = a.seed.unwrap_or(1);
    let level = a.level.unwrap_or(0.1);
    if reps < 100 {
        return Err(Invalid::msg("--replicates must be at least 100").into());
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Invalid::msg(format!("--level must lie in (0, 1), got {level}")).into());
    }
    out.push_str(&header("detect", Some((seed, reps))));
    match a.a {
        None => {
            out.push_str("n,a,lower,type1,max_type2,sum,iterations\n");
            for (n, spec) in ns.iter().zip(&specs) {
                let c = calibrate_a_with_workers(spec, *n, level, &ball, reps, seed, workers)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    num(n.get()),
                    num(c.a),
                    num(c.lower),
                    num(c.outcome.type1),
                    num(c.outcome.max_type2),
                    num(c.outcome.sum),
                    c.iterations
                )?;
            }
        }
        Some(level_a) => {
            if !(level_a > 0.0) {
                return Err(Invalid::msg(format!("--a must be positive, got {level_a}")).into());
            }
            out.push_str("n,a,alternatives,type1,max_type2,sum\n");
            for (n, spec) in ns.iter().zip(&specs) {
                let alts: Vec<CoefficientVector> = adversarial_family(&ball, spec, *n)
                    .into_iter()
                    .filter_map(|v| {
                        let q = quadratic_functional(&v);
                        (q > 0.0 && q >= level_a).then(|| v.scaled((level_a / q).sqrt()))
                    })
                    .collect();
                let o = error_rates_with_workers(spec, *n, level_a, &alts, reps, seed, workers)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    num(n.get()),
                    num(level_a),
                    alts.len(),
                    num(o.type1),
                    num(o.max_type2),
                    num(o.sum)
                )?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV file with a header row; `#` lines are skipped
    #[arg(long)]
    pub input: Option<String>,
    /// Column holding n (default "n")
    #[arg(long)]
    pub x: Option<String>,
    /// Column holding the fitted quantity (default "risk")
    #[arg(long)]
    pub y: Option<String>,
}

fn fit(a: &FitArgs, out: Out) -> anyhow::Result<()> {
    let path = a.input.as_deref().ok_or_else(|| Invalid::msg("fit needs --input"))?;
    let xcol = a.x.as_deref().unwrap_or("n");
    let ycol = a.y.as_deref().unwrap_or("risk");
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {path}"))
        .map_err(Invalid::from)?;
    let headers = reader.headers().map_err(Invalid::msg)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Invalid::msg(format!("{path} has no column `{name}`")))
    };
    let (xi, yi) = (col(xcol)?, col(ycol)?);
    let mut points = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(Invalid::msg)?;
        let x = inputs::number(rec.get(xi).unwrap_or(""))?;
        let y = inputs::number(rec.get(yi).unwrap_or(""))?;
        points.push((x, y));
    }
    let f = rate_fit(&points)?;
    json_line(out, &serde_json::to_value(f)?)
}
