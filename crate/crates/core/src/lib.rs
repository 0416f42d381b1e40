//! Estimation of the quadratic functional `Q(θ) = Σ θᵢ²` in the Gaussian
//! sequence model `Yᵢ = θᵢ + n^{-1/2} zᵢ`.
//!
//! The crate is organised around the life cycle of an experiment:
//!
//! - [`model`]: coefficient vectors, noise levels, Lp and Besov balls,
//!   quadratic convex hulls and the deterministic adversarial families.
//! - [`analytics`]: closed-form Gaussian moments of thresholded squares,
//!   the single-coordinate risk bounds and an independent quadrature oracle.
//! - [`estimators`]: the quadratic, block-thresholded and diagonal
//!   quadratic estimators together with their threshold schedules.
//! - [`risklab`]: exact and Monte Carlo risk, worst-case sweeps, rate fits,
//!   the rate-exponent table and the quadratic-hull equality check.
//! - [`bounds`]: the sparse mixture prior, its chi-square affinity and the
//!   constrained-risk-inequality arithmetic.
//! - [`detect`]: the test induced by an estimator, empirical error rates and
//!   the calibration of the detection boundary.
//!
//! All randomness flows through [`rng::RandomStreamId`]; identical stream
//! ids reproduce identical draws regardless of thread count.


pub mod analytics;
pub mod bounds;
pub mod detect;
pub mod error;
pub mod estimators;
pub mod model;
pub mod risklab;
pub mod rng;
mod sum;

pub use error::{QfeError, Result};
pub use estimators::{
    estimate, make_estimator, EstimatorKind, EstimatorName, EstimatorParams, EstimatorSpec,
    TailKind, ThresholdSchedule,
};
pub use model::{
    ball_norm, contains, quadratic_functional, quadratic_hull, sample_observation, spike_config,
    BallKind, BallSpec, BesovIndex, CoefficientVector, NoiseLevel, Position,
};
pub use risklab::{exact_risk, mc_risk, worst_case_risk, RiskReport};
pub use rng::RandomStreamId;
