//! Posterior inference for Gaussian linear regression under Zellner g-priors,
//! with tools to check posterior consistency empirically when the number of
//! regressors grows proportionally to the sample size.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: special functions, samplers and keyed RNG streams.
//! * [`model`]: scenarios, synthetic designs, sufficient statistics and the
//!   scalar diagnostics derived from them.
//! * [`regimes`]: the four ways of specifying `g` (fixed sequence, empirical
//!   Bayes, hyper-g, Zellner-Siow) and the marginal posterior of `g`.
//! * [`posterior`]: the `(beta, sigma^2)` posterior and sup-norm ball
//!   probabilities.
//! * [`lab`]: n-sweeps, theorem verdicts, lemma verifiers and reports.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lab;
pub mod model;
pub mod numerics;
pub mod posterior;
pub mod regimes;

pub use error::{Error, Result};
pub use lab::{
    run_experiment, verify_lemmas, ExperimentConfig, ExperimentReport, LemmaConfig, LemmaReport, Theorem,
    TheoremVerdict, Trend, Verdict,
};
pub use model::{
    diagnostics, simulate_stats, DesignSpec, Diagnostics, GramSpectrum, PriorConstants, Scenario,
    SimulationMode, SufficientStats, VectorRule,
};
pub use numerics::{Purpose, RngStream, StreamPath};
pub use posterior::{sup_ball_probabilities, sup_ball_probability, BallMethod, BallOptions, BallProbability, Sigma2Posterior};
pub use regimes::{build_g_posterior, GLikelihood, GPosterior, GRegime, GRule};
