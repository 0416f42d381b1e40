//! `qfe-lab`: experiment driver for the `qfe-core` library.
//!
//! Tabular results go out as CSV with a `# qfe-lab v1, ...` comment line
//! first; single reports go out as JSON. Randomised outputs record the seed
//! and replicate count in that comment line (for JSON it precedes the
//! document).
//!
//! Exit codes: 0 success, 1 audit or runtime failure, 2 invalid input.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qfe_core::QfeError;

mod commands;
pub mod config;
pub mod inputs;

pub const FORMAT_VERSION: &str = "v1";

/// Input that failed validation; maps to exit code 2.
#[derive(Debug)]
pub struct Invalid(anyhow::Error);

impl Invalid {
    pub fn msg(m: impl fmt::Display) -> Self {
        Self(anyhow::anyhow!("{m}"))
    }
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Invalid {}

impl From<anyhow::Error> for Invalid {
    fn from(e: anyhow::Error) -> Self {
        Self(e)
    }
}

impl From<QfeError> for Invalid {
    fn from(e: QfeError) -> Self {
        Self(e.into())
    }
}

/// An audit whose checks did not all pass; maps to exit code 1. The report
/// is still written.
#[derive(Debug)]
pub struct AuditFailure(pub String);

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for AuditFailure {}

#[derive(Debug, Parser)]
#[command(name = "qfe-lab", version, about = "Quadratic functional estimation experiments")]
pub struct Cli {
    /// JSON file with the subcommand's settings; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for Monte Carlo (0 = all cores)
    #[arg(long, global = true, env = "QFE_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and/or Monte Carlo risk of one estimator at one theta
    Risk(commands::RiskArgs),
    /// Worst-case exact risk over the adversarial family on an n grid
    Sweep(commands::SweepArgs),
    /// Rate exponents r* and r_q* over an alpha grid
    Rates(commands::RatesArgs),
    /// Audit of the single-coordinate threshold bounds
    LemmaCheck(commands::LemmaArgs),
    /// Ball versus quadratic-hull maximum risk of diagonal rules
    HullCheck(commands::HullArgs),
    /// Affinity, its bound and the constrained risk inequality
    LowerBound(commands::LowerBoundArgs),
    /// Calibration of the detection boundary, or error rates at a fixed a
    Detect(commands::DetectArgs),
    /// Log-log rate fit over a CSV of (n, value)
    Fit(commands::FitArgs),
}

/// The comment line that starts every CSV output.
pub fn header(command: &str, random: Option<(u64, u64)>) -> String {
    match random {
        Some((seed, replicates)) => format!(
            "# qfe-lab {FORMAT_VERSION}, seed={seed}, replicates={replicates}, command={command}\n"
        ),
        None => format!("# qfe-lab {FORMAT_VERSION}, command={command}\n"),
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn exit_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    if let Some(q) = e.downcast_ref::<QfeError>() {
        return match q {
            QfeError::InvalidArgument(_)
            | QfeError::ObservationTooShort { .. }
            | QfeError::NoiseMismatch { .. }
            | QfeError::GridTooLarge { .. } => 2,
            _ => 1,
        };
    }
    1
}

/// Runs the command line `args` (program name first), writing results to
/// `out` (unless `--output` is given) and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let mut text = String::new();
    let result = commands::dispatch(&cli, &mut text);
    // Audit reports are written even though the run fails.
    let keep = match &result {
        Ok(()) => true,
        Err(e) => e.downcast_ref::<AuditFailure>().is_some(),
    };
    let written = match &cli.output {
        _ if !keep => Ok(()),
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display())),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| anyhow::anyhow!("writing output: {e}")),
    };
    let result = result.and(written);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "qfe-lab: {e:#}");
            exit_code(&e)
        }
    }
}
