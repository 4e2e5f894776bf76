//! The `(beta, sigma^2)` posterior given `g`, and sup-norm ball probabilities
//! integrated over the posterior of `g`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Basis, SufficientStats};
use crate::numerics::{gamma_quantile, inverse_gamma_cdf, normal_cdf, normal_sf, sample_inverse_gamma, sample_normal};
use crate::regimes::{GLikelihood, GPosterior};

/// `(g/(g+1)) beta_hat + (1/(g+1)) gamma`.
pub fn beta_posterior_mean(g: f64, beta_hat: &[f64], gamma: &[f64]) -> Result<Vec<f64>> {
    if beta_hat.len() != gamma.len() {
        return Err(Error::Dimension(format!("beta_hat has length {}, gamma {}", beta_hat.len(), gamma.len())));
    }
    if !(g >= 0.0) {
        return Err(Error::Domain(format!("g must be >= 0, got {g}")));
    }
    let w = g / (g + 1.0);
    Ok(beta_hat.iter().zip(gamma).map(|(b, c)| w * b + c / (g + 1.0)).collect())
}

/// `sigma^2 | g, data ~ InverseGamma((n + a - 2)/2, T~_n(g)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sigma2Posterior {
    pub shape: f64,
    pub scale: f64,
}

impl Sigma2Posterior {
    pub fn new(g: f64, lik: &GLikelihood) -> Result<Self> {
        let shape = (lik.n as f64 + lik.a - 2.0) / 2.0;
        if shape <= 0.0 {
            return Err(Error::Config(format!("sigma^2 posterior shape (n + a - 2)/2 = {shape} must be positive")));
        }
        Ok(Self { shape, scale: (lik.s_plus_b + lik.t_n / (g + 1.0)) / 2.0 })
    }

    /// Defined when the shape exceeds one.
    pub fn mean(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.scale / (self.shape - 1.0))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        inverse_gamma_cdf(x, self.shape, self.scale)
    }

    pub fn interval_probability(&self, lo: f64, hi: f64) -> f64 {
        (self.cdf(hi) - self.cdf(lo)).max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        sample_inverse_gamma(rng, self.shape, self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BallMethod {
    ExactDiagonal,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallOptions {
    /// `None` picks the exact path whenever the design is axis-aligned.
    pub method: Option<BallMethod>,
    pub sigma_nodes: usize,
    pub mc_draws: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self { method: None, sigma_nodes: 129, mc_draws: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallProbability {
    pub epsilon: f64,
    pub value: f64,
    pub method: BallMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

/// `P(||beta - center||_inf > eps | data)` for a single `eps`.
pub fn sup_ball_probability<R: Rng + ?Sized>(
    post: &GPosterior,
    stats: &SufficientStats,
    gamma: &[f64],
    center: &[f64],
    epsilon: f64,
    opts: &BallOptions,
    rng: &mut R,
) -> Result<BallProbability> {
    Ok(sup_ball_probabilities(post, stats, gamma, center, &[epsilon], opts, rng)?[0])
}

/// Like [`sup_ball_probability`] for several radii, sharing the quadrature
/// (or the Monte Carlo draws) across them.
pub fn sup_ball_probabilities<R: Rng + ?Sized>(
    post: &GPosterior,
    stats: &SufficientStats,
    gamma: &[f64],
    center: &[f64],
    eps: &[f64],
    opts: &BallOptions,
    rng: &mut R,
) -> Result<Vec<BallProbability>> {
    let p = stats.p;
    if gamma.len() != p || center.len() != p {
        return Err(Error::Dimension(format!(
            "gamma ({}) and center ({}) must have length p = {p}",
            gamma.len(),
            center.len()
        )));
    }
    if eps.is_empty() {
        return Err(Error::Empty("epsilon grid"));
    }
    if let Some(e) = eps.iter().find(|e| !(**e >= 0.0)) {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {e}")));
    }
    let method = match opts.method {
        Some(BallMethod::ExactDiagonal) if !stats.gram.is_axis_aligned() => {
            return Err(Error::Method("the exact path needs an axis-aligned Gram eigenbasis".into()));
        }
        Some(m) => m,
        None if stats.gram.is_axis_aligned() => BallMethod::ExactDiagonal,
        None => BallMethod::MonteCarlo,
    };
    let values = match method {
        BallMethod::ExactDiagonal => exact_diagonal(post, stats, gamma, center, eps, opts.sigma_nodes)?
            .into_iter()
            .zip(eps)
            .map(|(value, &epsilon)| BallProbability { epsilon, value, method, std_error: None })
            .collect(),
        BallMethod::MonteCarlo => {
            let n = opts.mc_draws.max(1);
            monte_carlo(post, stats, gamma, center, eps, n, rng)?
                .into_iter()
                .zip(eps)
                .map(|(value, &epsilon)| BallProbability {
                    epsilon,
                    value,
                    method,
                    std_error: Some((value * (1.0 - value) / n as f64).sqrt()),
                })
                .collect()
        }
    };
    Ok(values)
}

/// Probability levels and trapezoid weights for the `sigma^2` quadrature.
fn sigma_levels(nodes: usize, shape: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = nodes.max(2);
    let (lo, hi) = (1e-6, 1.0 - 1e-6);
    let step = (hi - lo) / (nodes - 1) as f64;
    let mut inv_gamma_units = Vec::with_capacity(nodes);
    let mut weights = Vec::with_capacity(nodes);
    for k in 0..nodes {
        let q = lo + k as f64 * step;
        // sigma^2 at level q is scale / G where G is the (1 - q) gamma quantile.
        inv_gamma_units.push(1.0 / gamma_quantile(1.0 - q, shape)?);
        weights.push(if k == 0 || k + 1 == nodes { 0.5 } else { 1.0 });
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((inv_gamma_units, weights))
}

/// Beyond this many standard deviations a normal tail is below `1e-17`.
const NEGLIGIBLE_Z: f64 = 8.5;

fn exact_diagonal(
    post: &GPosterior,
    stats: &SufficientStats,
    gamma: &[f64],
    center: &[f64],
    eps: &[f64],
    sigma_nodes: usize,
) -> Result<Vec<f64>> {
    debug_assert!(matches!(stats.gram.basis(), Basis::Identity));
    let lik = post.likelihood();
    let shape = Sigma2Posterior::new(0.0, lik)?.shape;
    let (units, sigma_w) = sigma_levels(sigma_nodes, shape)?;
    let eig = stats.gram.eigenvalues();

    let log_w = post.log_weights();
    let max_lw = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; eps.len()];
    let mut total = 0.0;
    let mut m = vec![0.0; stats.p];
    let mut inv_sd = vec![0.0; stats.p];
    for ((g, w_g), lw) in post.nodes().into_iter().zip(&log_w) {
        if *lw < max_lw - 40.0 {
            continue;
        }
        let shrink = g / (g + 1.0);
        for i in 0..stats.p {
            m[i] = shrink * stats.beta_hat[i] + gamma[i] / (g + 1.0) - center[i];
        }
        let scale = Sigma2Posterior::new(g, lik)?.scale;
        total += w_g;
        for (unit, w_s) in units.iter().zip(&sigma_w) {
            let var_factor = shrink * scale * unit;
            for (i, e) in eig.iter().enumerate() {
                inv_sd[i] = if var_factor > 0.0 { (e / var_factor).sqrt() } else { f64::INFINITY };
            }
            for (slot, &eps_k) in out.iter_mut().zip(eps) {
                let miss = miss_probability(&m, &inv_sd, eps_k);
                *slot += w_g * w_s * miss;
            }
        }
    }
    Ok(out.into_iter().map(|v| (v / total).clamp(0.0, 1.0)).collect())
}

/// `1 - prod_i P(|m_i + tau_i Z| <= eps)`, accumulated in log space.
fn miss_probability(m: &[f64], inv_sd: &[f64], eps: f64) -> f64 {
    let mut log_cover = 0.0;
    for (&mi, &k) in m.iter().zip(inv_sd) {
        let margin = eps - mi.abs();
        if k.is_infinite() {
            if margin < 0.0 {
                return 1.0;
            }
            continue;
        }
        if margin * k > NEGLIGIBLE_Z {
            continue;
        }
        let tail = normal_cdf((-eps - mi) * k) + normal_sf((eps - mi) * k);
        if tail >= 1.0 {
            return 1.0;
        }
        log_cover += (-tail).ln_1p();
        if log_cover < -745.0 {
            return 1.0;
        }
    }
    -log_cover.exp_m1()
}

fn monte_carlo<R: Rng + ?Sized>(
    post: &GPosterior,
    stats: &SufficientStats,
    gamma: &[f64],
    center: &[f64],
    eps: &[f64],
    draws: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let lik = post.likelihood();
    let eig = stats.gram.eigenvalues();
    let mut misses = vec![0usize; eps.len()];
    let mut z = vec![0.0; stats.p];
    for _ in 0..draws {
        let g = post.sample(rng);
        let sigma2 = Sigma2Posterior::new(g, lik)?.sample(rng)?;
        let sd = (g / (g + 1.0) * sigma2).sqrt();
        for (zi, e) in z.iter_mut().zip(eig) {
            *zi = sd * sample_normal(rng) / e.sqrt();
        }
        let noise = stats.gram.from_eigen(&z);
        let mean = beta_posterior_mean(g, &stats.beta_hat, gamma)?;
        let sup = mean
            .iter()
            .zip(&noise)
            .zip(center)
            .map(|((m, e), c)| (m + e - c).abs())
            .fold(0.0, f64::max);
        for (count, &e) in misses.iter_mut().zip(eps) {
            if sup > e {
                *count += 1;
            }
        }
    }
    Ok(misses.into_iter().map(|c| c as f64 / draws as f64).collect())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{GramSpectrum, PriorConstants};
    use crate::numerics::{stats as st, RngStream};
    use crate::regimes::{build_g_posterior, GRegime, GRule};

    fn stats_from(beta_hat: Vec<f64>, s_n: f64, eig: Vec<f64>, n: usize) -> SufficientStats {
        let gram = Arc::new(GramSpectrum::new(eig, Basis::Identity).unwrap());
        SufficientStats::new(n, beta_hat, s_n, gram).unwrap()
    }

    fn lik_for(stats: &SufficientStats, gamma: &[f64], prior: &PriorConstants) -> GLikelihood {
        let d = crate::model::diagnostics(stats, gamma, prior, None).unwrap();
        GLikelihood::from_diagnostics(&d, prior)
    }

    #[test]
    fn posterior_mean_examples() {
        assert_eq!(beta_posterior_mean(1.0, &[2.0, 2.0], &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(beta_posterior_mean(0.0, &[2.0, -1.0], &[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        let same = beta_posterior_mean(7.3, &[0.25, -3.0], &[0.25, -3.0]).unwrap();
        assert!(same.iter().zip([0.25, -3.0]).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(beta_posterior_mean(-1.0, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn sigma2_law() {
        let lik = GLikelihood::new(60, 5, 50.0, 20.0, &PriorConstants::default()).unwrap();
        let post = Sigma2Posterior::new(3.0, &lik).unwrap();
        assert_eq!(post.shape, 29.0);
        assert!((post.scale - 27.5).abs() < 1e-12);
        let mut rng = RngStream::from_seed(8);
        let draws: Vec<f64> = (0..100_000).map(|_| post.sample(&mut rng).unwrap()).collect();
        let (m, _) = st::mean_var(&draws);
        let exact = 55.0 / (60.0 - 4.0);
        assert!(((m - exact) / exact).abs() < 0.01);
        assert!((Sigma2Posterior::new(1e15, &lik).unwrap().scale - 25.0).abs() < 1e-9);
        let bad = GLikelihood { n: 2, p: 1, a: -1.0, s_plus_b: 1.0, t_n: 1.0 };
        assert!(Sigma2Posterior::new(1.0, &bad).is_err());
    }

    #[test]
    fn interval_probability_concentrates() {
        // n = 2000, orthogonal, gamma = beta0: theta~ = (n - p) + p/(g+1) with sigma0 = 1.
        let (n, p) = (2000usize, 1000usize);
        let mut rng = RngStream::from_seed(9);
        let s_n = crate::numerics::sample_chi_square(&mut rng, (n - p) as f64).unwrap();
        let t_n = crate::numerics::sample_chi_square(&mut rng, p as f64).unwrap();
        let lik = GLikelihood::new(n, p, s_n, t_n, &PriorConstants::default()).unwrap();
        let g = n as f64;
        let theta = (n - p) as f64 + p as f64 / (g + 1.0);
        let prob = Sigma2Posterior::new(g, &lik).unwrap().interval_probability(theta / (2.0 * n as f64), 2.0 * theta / n as f64);
        assert!(prob > 0.99);
    }

    fn fixed_post(stats: &SufficientStats, gamma: &[f64], prior: &PriorConstants, g: f64) -> GPosterior {
        build_g_posterior(GRegime::fixed(GRule::Constant(g)), &lik_for(stats, gamma, prior), 64).unwrap()
    }

    #[test]
    fn huge_radius_covers_everything() {
        let st = stats_from(vec![0.3, -0.1, 2.0], 40.0, vec![50.0; 3], 50);
        let gamma = [0.0; 3];
        let post = fixed_post(&st, &gamma, &PriorConstants::default(), 10.0);
        let mut rng = RngStream::from_seed(1);
        let v = sup_ball_probability(&post, &st, &gamma, &[0.0; 3], 1e9, &BallOptions::default(), &mut rng).unwrap();
        assert!(v.value < 1e-12);
    }

    #[test]
    fn zero_radius_is_certain_miss() {
        let st = stats_from(vec![0.3, -0.1], 40.0, vec![50.0; 2], 50);
        let gamma = [0.0; 2];
        let lik = lik_for(&st, &gamma, &PriorConstants::default());
        let post = build_g_posterior(GRegime::hyper_g(), &lik, 128).unwrap();
        let mut rng = RngStream::from_seed(1);
        let v = sup_ball_probability(&post, &st, &gamma, &[0.0; 2], 0.0, &BallOptions::default(), &mut rng).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn univariate_closed_form() {
        // Large a and b pin sigma^2 near its mode, so the answer is a normal tail.
        let n = 40;
        let prior = PriorConstants { a: 2e6, b: 2e6 };
        let st = stats_from(vec![0.8], 30.0, vec![n as f64], n);
        let gamma = [0.0];
        let g = 4.0;
        let post = fixed_post(&st, &gamma, &prior, g);
        let lik = post.likelihood();
        let sigma2 = Sigma2Posterior::new(g, lik).unwrap();
        let s2 = sigma2.scale / sigma2.shape;
        let m = 0.8 * g / (g + 1.0) - 0.5;
        let tau = (g / (g + 1.0) * s2 / n as f64).sqrt();
        let eps = 0.2;
        let exact = 1.0 - normal_cdf((eps - m) / tau) + normal_cdf((-eps - m) / tau);
        let mut rng = RngStream::from_seed(1);
        let v = sup_ball_probability(&post, &st, &gamma, &[0.5], eps, &BallOptions::default(), &mut rng).unwrap();
        assert!((v.value - exact).abs() < 1e-4, "{} vs {exact}", v.value);
    }

    fn hyperg_instance(seed: u64) -> (SufficientStats, Vec<f64>, GPosterior) {
        let (n, p) = (200usize, 50usize);
        let mut rng = RngStream::from_seed(seed);
        let beta_hat: Vec<f64> = (0..p).map(|i| if i < 3 { 1.0 } else { 0.0 } + sample_normal(&mut rng) * 2.0 / (n as f64).sqrt()).collect();
        let s_n = 4.0 * crate::numerics::sample_chi_square(&mut rng, (n - p) as f64).unwrap();
        let st = stats_from(beta_hat, s_n, vec![n as f64; p], n);
        let gamma = vec![0.0; p];
        let post = build_g_posterior(GRegime::hyper_g(), &lik_for(&st, &gamma, &PriorConstants::default()), 256).unwrap();
        (st, gamma, post)
    }

    #[test]
    fn exact_agrees_with_monte_carlo() {
        let (st, gamma, post) = hyperg_instance(3);
        let mut center = vec![0.0; st.p];
        center[..3].fill(1.0);
        let mut rng = RngStream::from_seed(4);
        let eps = [0.25, 0.5];
        let exact = sup_ball_probabilities(&post, &st, &gamma, &center, &eps, &BallOptions::default(), &mut rng).unwrap();
        let mc_opts = BallOptions { method: Some(BallMethod::MonteCarlo), mc_draws: 50_000, ..Default::default() };
        let mc = sup_ball_probabilities(&post, &st, &gamma, &center, &eps, &mc_opts, &mut rng).unwrap();
        for (e, m) in exact.iter().zip(&mc) {
            let se = m.std_error.unwrap().max(1e-4);
            assert!((e.value - m.value).abs() <= 3.0 * se, "{} vs {} (se {se})", e.value, m.value);
        }
    }

    #[test]
    fn monotone_in_radius_and_permutation_invariant() {
        let (st, gamma, post) = hyperg_instance(6);
        let center = vec![0.0; st.p];
        let mut rng = RngStream::from_seed(4);
        let eps: Vec<f64> = (0..20).map(|i| 0.05 * i as f64).collect();
        let vals = sup_ball_probabilities(&post, &st, &gamma, &center, &eps, &BallOptions::default(), &mut rng).unwrap();
        assert!(vals.windows(2).all(|w| w[1].value <= w[0].value + 1e-12));

        let mut perm: Vec<usize> = (0..st.p).collect();
        perm.reverse();
        perm.swap(0, 7);
        let bh: Vec<f64> = perm.iter().map(|&i| st.beta_hat[i]).collect();
        let st2 = stats_from(bh, st.s_n, st.gram.eigenvalues().to_vec(), st.n);
        let a = sup_ball_probability(&post, &st, &gamma, &center, 0.3, &BallOptions::default(), &mut rng).unwrap();
        let b = sup_ball_probability(&post, &st2, &gamma, &center, 0.3, &BallOptions::default(), &mut rng).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
    }

    #[test]
    fn recentring_sandwich() {
        for seed in 0..5 {
            let (st, gamma, post) = hyperg_instance(100 + seed);
            let mut beta0 = vec![0.0; st.p];
            beta0[..3].fill(1.0);
            let mut rng = RngStream::from_seed(4);
            for eps in [0.1, 0.25, 0.5, 1.0] {
                let opts = BallOptions::default();
                let at_truth = sup_ball_probability(&post, &st, &gamma, &beta0, eps, &opts, &mut rng).unwrap().value;
                let at_mle = sup_ball_probability(&post, &st, &gamma, &st.beta_hat, eps / 2.0, &opts, &mut rng).unwrap().value;
                let gap = st.beta_hat.iter().zip(&beta0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let indicator = if gap > eps / 2.0 { 1.0 } else { 0.0 };
                assert!(at_truth <= at_mle + indicator + 1e-12);
            }
        }
    }

    #[test]
    fn rotated_design_needs_monte_carlo() {
        let gram = Arc::new(
            GramSpectrum::new(vec![10.0, 10.0], Basis::Dense(vec![0.6, 0.8, -0.8, 0.6])).unwrap(),
        );
        let st = SufficientStats::new(10, vec![0.1, 0.2], 5.0, gram).unwrap();
        let gamma = [0.0; 2];
        let post = fixed_post(&st, &gamma, &PriorConstants::default(), 10.0);
        let mut rng = RngStream::from_seed(1);
        let exact = BallOptions { method: Some(BallMethod::ExactDiagonal), ..Default::default() };
        assert!(matches!(
            sup_ball_probability(&post, &st, &gamma, &[0.0; 2], 0.5, &exact, &mut rng),
            Err(Error::Method(_))
        ));
        let auto = sup_ball_probability(&post, &st, &gamma, &[0.0; 2], 0.5, &BallOptions::default(), &mut rng).unwrap();
        assert_eq!(auto.method, BallMethod::MonteCarlo);
        assert!(auto.std_error.is_some());
    }
}
