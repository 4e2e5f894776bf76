use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::design::{build_design, DesignSpec, GramSpectrum};
use super::rules::{PRule, VectorRule};
use crate::error::{Error, Result};
use crate::numerics::{fnv1a, Purpose, RngStream, StreamPath};
use crate::regimes::GRegime;

pub const SCHEMA_VERSION: u32 = 1;

/// Hyperparameters of the `InverseGamma(a/2, b/2)` prior on `sigma^2`;
/// improper choices down to `a = -2` are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConstants {
    pub a: f64,
    pub b: f64,
}

impl Default for PriorConstants {
    fn default() -> Self {
        Self { a: 0.0, b: 0.0 }
    }
}

impl PriorConstants {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let prior = Self { a, b };
        prior.validate()?;
        Ok(prior)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= -2.0 && self.b >= 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::Invariant(format!(
                "prior constants need a >= -2 and b >= 0, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_id() -> String {
    "scenario".to_string()
}

/// A family of regression problems indexed by the sample size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default = "default_id")]
    pub id: String,
    /// Limit of `p_n / n`.
    pub alpha: f64,
    #[serde(default)]
    pub p_rule: PRule,
    pub design: DesignSpec,
    pub beta0_rule: VectorRule,
    pub gamma_rule: VectorRule,
    pub sigma0_sq: f64,
    pub prior: PriorConstants,
    pub regime: GRegime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
}

impl Scenario {
    /// Orthogonal design, `a = b = 0`, linear `p_n`.
    pub fn new(id: impl Into<String>, alpha: f64, beta0: VectorRule, gamma: VectorRule, regime: GRegime) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            alpha,
            p_rule: PRule::Linear,
            design: DesignSpec::OrthogonalScaled,
            beta0_rule: beta0,
            gamma_rule: gamma,
            sigma0_sq: 1.0,
            prior: PriorConstants::default(),
            regime,
            n_grid: None,
            eps_grid: None,
            reps: None,
        }
    }

    pub fn with_p_rule(mut self, rule: PRule) -> Self {
        self.p_rule = rule;
        self
    }

    pub fn with_sigma0_sq(mut self, sigma0_sq: f64) -> Self {
        self.sigma0_sq = sigma0_sq;
        self
    }

    pub fn with_prior(mut self, prior: PriorConstants) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_design(mut self, design: DesignSpec) -> Self {
        self.design = design;
        self
    }

    pub fn with_regime(mut self, regime: GRegime) -> Self {
        self.regime = regime;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Checks that do not depend on `n`.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "alpha = {} violates (A2): p_n < n with p_n / n -> alpha requires 0 <= alpha < 1",
                self.alpha
            )));
        }
        if matches!(self.p_rule, PRule::CeilPower(_)) && self.alpha != 0.0 {
            return Err(Error::Config(format!(
                "p_rule {} grows sublinearly, so alpha must be 0 (got {})",
                self.p_rule, self.alpha
            )));
        }
        if !(self.sigma0_sq > 0.0 && self.sigma0_sq.is_finite()) {
            return Err(Error::Config(format!("sigma0_sq must be positive, got {}", self.sigma0_sq)));
        }
        self.prior.validate()?;
        self.design.validate()?;
        self.regime.validate_static()
    }

    pub fn p_at(&self, n: usize) -> usize {
        self.p_rule.p_at(self.alpha, n)
    }

    pub fn beta0_at(&self, n: usize) -> Vec<f64> {
        self.beta0_rule.vector(n, self.p_at(n))
    }

    pub fn gamma_at(&self, n: usize) -> Vec<f64> {
        self.gamma_rule.vector(n, self.p_at(n))
    }

    /// `(||gamma - beta0||_2^2, ||gamma - beta0||_inf)` at `n`.
    pub fn gap_norms(&self, n: usize) -> (f64, f64) {
        let b = self.beta0_at(n);
        let g = self.gamma_at(n);
        b.iter().zip(&g).fold((0.0, 0.0), |(sq, sup), (x, y)| {
            let d = (y - x).abs();
            (sq + d * d, f64::max(sup, d))
        })
    }

    pub fn validate_at(&self, n: usize) -> Result<()> {
        let p = self.p_at(n);
        if p == 0 || p >= n {
            return Err(Error::Config(format!("(A2) requires 1 <= p_n < n; got p = {p} at n = {n}")));
        }
        if self.prior.a + n as f64 - 2.0 <= 0.0 {
            return Err(Error::Config(format!(
                "sigma^2 posterior shape (n + a - 2)/2 must be positive at n = {n}"
            )));
        }
        self.regime.validate_at(n, p, &self.prior)
    }

    /// Validates every grid point and that `p_n` is nondecreasing along it.
    pub fn validate_grid(&self, grid: &[usize]) -> Result<()> {
        if grid.is_empty() {
            return Err(Error::Config("n grid is empty".into()));
        }
        let mut sorted = grid.to_vec();
        sorted.sort_unstable();
        let mut last_p = 0;
        for &n in &sorted {
            self.validate_at(n)?;
            let p = self.p_at(n);
            if p < last_p {
                return Err(Error::Config(format!("(A2) requires p_n nondecreasing; p drops to {p} at n = {n}")));
            }
            last_p = p;
        }
        Ok(())
    }

    pub fn experiment_key(&self) -> u64 {
        fnv1a(&self.id)
    }

    /// The design at `n`, shared by all replications for a master seed.
    pub fn design_at(&self, n: usize, master_seed: u64) -> Result<Arc<GramSpectrum>> {
        let mut rng = RngStream::new(master_seed, StreamPath::new(self.experiment_key(), n as u64, 0, Purpose::Design));
        Ok(Arc::new(build_design(&self.design, n, self.p_at(n), &mut rng)?))
    }
}
