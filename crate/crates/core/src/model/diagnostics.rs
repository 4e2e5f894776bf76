use serde::Serialize;

use super::scenario::PriorConstants;
use super::simulate::SufficientStats;
use crate::error::{Error, Result};

/// Quantities that depend on the frequentist truth `(beta0, sigma0^2)`.
#[derive(Debug, Clone, Serialize)]
pub struct TruthDiagnostics {
    pub sigma0_sq: f64,
    /// `||gamma - beta0||_inf`.
    pub gap_sup: f64,
    /// `||gamma - beta0||_2^2`.
    pub gap_sq: f64,
    /// `n ||gamma - beta0||^2 / ((gamma - beta0)^T X^T X (gamma - beta0))`;
    /// undefined when `gamma = beta0`.
    pub lambda_bar_0n: Option<f64>,
    /// `E_0(T_n) = p sigma0^2 + (gamma - beta0)^T X^T X (gamma - beta0)`.
    pub theta_bar_0n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub n: usize,
    pub p: usize,
    /// `(beta_hat - gamma)^T X^T X (beta_hat - gamma)`.
    pub t_n: f64,
    pub s_plus_b: f64,
    pub b: f64,
    /// `(S_n + b) / (S_n + b + T_n)`.
    pub w_n: f64,
    pub truth: Option<TruthDiagnostics>,
}

impl Diagnostics {
    /// `S_n + b + T_n / (g + 1)`.
    pub fn t_tilde(&self, g: f64) -> f64 {
        self.s_plus_b + self.t_n / (g + 1.0)
    }

    /// `E_0(T~_n) = (n - p) sigma0^2 + b + theta_bar / (g + 1)`.
    pub fn theta_tilde(&self, g: f64) -> Option<f64> {
        self.truth
            .as_ref()
            .map(|t| (self.n - self.p) as f64 * t.sigma0_sq + self.b + t.theta_bar_0n / (g + 1.0))
    }

    /// `max(0, ||gamma - beta0||_inf / eps - 1)`.
    pub fn q_n(&self, eps: f64) -> Option<f64> {
        self.truth.as_ref().map(|t| (t.gap_sup / eps - 1.0).max(0.0))
    }

    pub fn l_tilde(&self, eps: f64) -> Option<f64> {
        self.truth.as_ref().map(|t| {
            let r = t.gap_sup / eps * self.s_plus_b;
            if r == 0.0 {
                0.0
            } else {
                r / (r + self.t_n)
            }
        })
    }

    /// `max(W_n, L~_n(eps))`.
    pub fn l_n(&self, eps: f64) -> Option<f64> {
        self.l_tilde(eps).map(|l| l.max(self.w_n))
    }
}

/// Computes the scalar diagnostics; truth-dependent entries only when
/// `truth = Some((beta0, sigma0^2))`.
pub fn diagnostics(
    stats: &SufficientStats,
    gamma: &[f64],
    prior: &PriorConstants,
    truth: Option<(&[f64], f64)>,
) -> Result<Diagnostics> {
    if gamma.len() != stats.p {
        return Err(Error::Dimension(format!("gamma has length {}, expected {}", gamma.len(), stats.p)));
    }
    let diff: Vec<f64> = stats.beta_hat.iter().zip(gamma).map(|(a, b)| a - b).collect();
    let t_n = stats.gram.quad_form(&diff).max(0.0);
    let s_plus_b = stats.s_n + prior.b;
    let w_n = if s_plus_b + t_n > 0.0 { s_plus_b / (s_plus_b + t_n) } else { 1.0 };
    let truth = match truth {
        None => None,
        Some((beta0, sigma0_sq)) => {
            if beta0.len() != stats.p {
                return Err(Error::Dimension(format!("beta0 has length {}, expected {}", beta0.len(), stats.p)));
            }
            let gap: Vec<f64> = gamma.iter().zip(beta0).map(|(g, b)| g - b).collect();
            let gap_sq: f64 = gap.iter().map(|d| d * d).sum();
            let gap_sup = gap.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
            let quad = stats.gram.quad_form(&gap);
            let lambda_bar_0n = (quad > 0.0).then(|| stats.n as f64 * gap_sq / quad);
            Some(TruthDiagnostics {
                sigma0_sq,
                gap_sup,
                gap_sq,
                lambda_bar_0n,
                theta_bar_0n: stats.p as f64 * sigma0_sq + quad,
            })
        }
    };
    Ok(Diagnostics { n: stats.n, p: stats.p, t_n, s_plus_b, b: prior.b, w_n, truth })
}
