use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Diagnostics, PriorConstants};

/// Everything the marginal posterior of `g` depends on: `n`, `p`, `a`,
/// `S_n + b` and `T_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GLikelihood {
    pub n: usize,
    pub p: usize,
    pub a: f64,
    pub s_plus_b: f64,
    pub t_n: f64,
}

impl GLikelihood {
    pub fn new(n: usize, p: usize, s_n: f64, t_n: f64, prior: &PriorConstants) -> Result<Self> {
        if p == 0 || p >= n {
            return Err(Error::Dimension(format!("need 1 <= p < n, got p = {p}, n = {n}")));
        }
        if !(s_n >= 0.0 && t_n >= 0.0) {
            return Err(Error::Invariant(format!("S_n and T_n must be >= 0, got {s_n} and {t_n}")));
        }
        Ok(Self { n, p, a: prior.a, s_plus_b: s_n + prior.b, t_n })
    }

    pub fn from_diagnostics(d: &Diagnostics, prior: &PriorConstants) -> Self {
        Self { n: d.n, p: d.p, a: prior.a, s_plus_b: d.s_plus_b, t_n: d.t_n }
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn pf(&self) -> f64 {
        self.p as f64
    }

    pub fn w_n(&self) -> f64 {
        let total = self.s_plus_b + self.t_n;
        if total > 0.0 {
            self.s_plus_b / total
        } else {
            1.0
        }
    }

    /// `u(g)`; increasing from `W_n` at `g = 0` towards 1.
    pub fn u_of_g(&self, g: f64) -> f64 {
        let s = (g + 1.0) * self.s_plus_b;
        s / (s + self.t_n)
    }

    /// `1 - u(g)` without cancellation.
    pub fn one_minus_u_of_g(&self, g: f64) -> f64 {
        self.t_n / ((g + 1.0) * self.s_plus_b + self.t_n)
    }

    /// Inverse of [`u_of_g`](Self::u_of_g); `g(W_n) = 0` exactly.
    pub fn g_of_u(&self, u: f64) -> f64 {
        let w = self.w_n();
        if u == w {
            return 0.0;
        }
        (u - w) / (w * (1.0 - u))
    }

    /// `(ln u, ln(1 - u))` at `g`, accurate for `g` near 0 and for huge `g`.
    pub fn log_u_pair(&self, g: f64) -> (f64, f64) {
        let lg1 = g.ln_1p();
        let ls = self.s_plus_b.ln();
        let ratio = self.t_n / ((g + 1.0) * self.s_plus_b);
        let log_d = lg1 + ls + ratio.ln_1p();
        (-ratio.ln_1p(), self.t_n.ln() - log_d)
    }

    /// `ln L(g)` up to an additive constant.
    pub fn log_marginal_likelihood(&self, g: f64) -> f64 {
        let (n, p, a) = (self.nf(), self.pf(), self.a);
        let g1 = g + 1.0;
        (n - p + a - 2.0) / 2.0 * g.ln_1p() - (n + a - 2.0) / 2.0 * (g1 * self.s_plus_b + self.t_n).ln()
    }

    /// `max{0, ((n - p + a - 2)/(S_n + b)) (T_n / p) - 1}`.
    pub fn eb_ghat(&self) -> Result<f64> {
        let k = self.nf() - self.pf() + self.a - 2.0;
        if k <= 0.0 {
            return Err(Error::Config(format!(
                "empirical Bayes needs n - p + a - 2 > 0; got {}",
                k
            )));
        }
        if self.s_plus_b <= 0.0 {
            return Err(Error::Config("empirical Bayes needs S_n + b > 0".into()));
        }
        Ok((k / self.s_plus_b * (self.t_n / self.pf()) - 1.0).max(0.0))
    }

    fn in_support(&self, u: f64) -> bool {
        u > self.w_n() && u < 1.0
    }

    /// Hyper-g posterior density of `u` (unnormalised); `-inf` off `(W_n, 1)`.
    pub fn hyperg_log_density_u(&self, u: f64, c: f64) -> f64 {
        if !self.in_support(u) {
            return f64::NEG_INFINITY;
        }
        let (n, p, a) = (self.nf(), self.pf(), self.a);
        xlogy((n - p + a - c - 2.0) / 2.0, u) + xlogy((p + c - 4.0) / 2.0, 1.0 - u)
    }

    /// Zellner-Siow posterior density of `u` (unnormalised); `-inf` off `(W_n, 1)`.
    pub fn zs_log_density_u(&self, u: f64) -> f64 {
        if !self.in_support(u) {
            return f64::NEG_INFINITY;
        }
        let (n, p, a) = (self.nf(), self.pf(), self.a);
        let w = self.w_n();
        let g = (u - w) / (w * (1.0 - u));
        xlogy((n - p + a - 2.0) / 2.0, u) + xlogy((p - 4.0) / 2.0, 1.0 - u) - 1.5 * g.ln() - n / (2.0 * g)
    }

    /// Zellner-Siow posterior density of `g` (unnormalised), evaluated
    /// directly in `g`.
    pub fn zs_log_density_g(&self, g: f64) -> f64 {
        if g <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_marginal_likelihood(g) - 1.5 * g.ln() - self.nf() / (2.0 * g)
    }

    /// Hyper-g posterior density of `g` (unnormalised).
    pub fn hyperg_log_density_g(&self, g: f64, c: f64) -> f64 {
        if g < 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_marginal_likelihood(g) - c / 2.0 * g.ln_1p()
    }

    /// `ln |du/dg| = ln u + ln(1 - u) - ln(g + 1)`.
    pub fn log_jacobian(&self, g: f64) -> f64 {
        let (lu, l1u) = self.log_u_pair(g);
        lu + l1u - g.ln_1p()
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}
