use std::sync::Arc;

use rand::Rng;

use super::design::{DenseDesign, GramSpectrum};
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::numerics::{sample_chi_square, sample_normal};

/// The minimal sufficient reduction `(beta_hat, S_n)` together with the Gram
/// spectrum needed to apply `(X^T X)^{-1}`.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    pub n: usize,
    pub p: usize,
    pub beta_hat: Vec<f64>,
    pub s_n: f64,
    pub gram: Arc<GramSpectrum>,
}

impl SufficientStats {
    pub fn new(n: usize, beta_hat: Vec<f64>, s_n: f64, gram: Arc<GramSpectrum>) -> Result<Self> {
        let p = beta_hat.len();
        if p != gram.p() {
            return Err(Error::Dimension(format!("beta_hat has length {p}, Gram spectrum has {}", gram.p())));
        }
        if p == 0 || p >= n {
            return Err(Error::Dimension(format!("need 1 <= p < n, got p = {p}, n = {n}")));
        }
        if !(s_n >= 0.0) {
            return Err(Error::Invariant(format!("S_n must be non-negative, got {s_n}")));
        }
        Ok(Self { n, p, beta_hat, s_n, gram })
    }
}

#[derive(Debug, Clone)]
pub enum SimulationMode {
    /// Draw `(beta_hat, S_n)` from their exact sampling distributions.
    Direct,
    /// Simulate `y = X beta0 + e` with an explicit design and reduce.
    FullData(Arc<DenseDesign>),
}

/// Draws sufficient statistics under the frequentist truth of `scenario` at `n`.
pub fn simulate_stats<R: Rng + ?Sized>(
    scenario: &Scenario,
    n: usize,
    gram: &Arc<GramSpectrum>,
    mode: &SimulationMode,
    rng: &mut R,
) -> Result<SufficientStats> {
    let p = scenario.p_at(n);
    if gram.p() != p {
        return Err(Error::Dimension(format!("design has p = {}, scenario wants p = {p} at n = {n}", gram.p())));
    }
    if !(scenario.sigma0_sq > 0.0) {
        return Err(Error::Config(format!("sigma0_sq must be positive, got {}", scenario.sigma0_sq)));
    }
    let sigma0 = scenario.sigma0_sq.sqrt();
    let beta0 = scenario.beta0_at(n);
    match mode {
        SimulationMode::Direct => {
            let z: Vec<f64> = gram.eigenvalues().iter().map(|e| sigma0 * sample_normal(rng) / e.sqrt()).collect();
            let noise = gram.from_eigen(&z);
            let beta_hat = beta0.iter().zip(&noise).map(|(b, e)| b + e).collect();
            let s_n = scenario.sigma0_sq * sample_chi_square(rng, (n - p) as f64)?;
            SufficientStats::new(n, beta_hat, s_n, Arc::clone(gram))
        }
        SimulationMode::FullData(x) => {
            if x.n() != n || x.p() != p {
                return Err(Error::Dimension("dense design does not match (n, p)".into()));
            }
            let mut y = x.apply(&beta0);
            for yi in y.iter_mut() {
                *yi += sigma0 * sample_normal(rng);
            }
            let beta_hat = gram.solve(&x.apply_transpose(&y));
            let fitted = x.apply(&beta_hat);
            let s_n = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
            SufficientStats::new(n, beta_hat, s_n, Arc::clone(gram))
        }
    }
}

/// `||beta_hat - beta0||_inf`.
pub fn mle_sup_error(stats: &SufficientStats, beta0: &[f64]) -> Result<f64> {
    if beta0.len() != stats.p {
        return Err(Error::Dimension(format!("beta0 has length {}, expected {}", beta0.len(), stats.p)));
    }
    Ok(stats.beta_hat.iter().zip(beta0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
