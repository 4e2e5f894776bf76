use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::Limit;
use super::experiment::{sorted_grid, thread_pool};
use super::theorem::theorem_grid;
use crate::error::{Error, Result};
use crate::model::{diagnostics, mle_sup_error, simulate_stats, Scenario, SimulationMode};
use crate::numerics::{stats, Purpose, RngStream, StreamPath};
use crate::posterior::Sigma2Posterior;
use crate::regimes::{build_g_posterior, GLikelihood, GRegime, DEFAULT_GRID_SIZE};

pub const DEFAULT_LEMMA_GRID: [usize; 3] = [250, 1000, 4000];
pub const DEFAULT_LEMMA_REPS: usize = 100;

/// Finite-n surrogates of the asymptotic statements checked by
/// [`verify_lemmas`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    /// `||beta_hat - beta0||_inf -> 0`.
    MleSupNorm,
    /// `S_n / (n - p) -> sigma0^2`.
    ErrorVariance,
    /// `T_n / theta_bar -> 1`.
    QuadraticForm,
    /// `T~_n / theta~ -> 1` for fixed `g_n`.
    ShrunkQuadraticForm,
    /// The `sigma^2` posterior puts mass on `[theta~/2n, 2 theta~/n]`.
    Sigma2Concentration,
    /// `liminf g_EB > 0`.
    EbPositive,
    /// `limsup W_n <= (1 - alpha) lambda sigma0^2 / (delta + lambda sigma0^2)`.
    WnUpperBound,
    /// `W_n -> 0` when `||gamma - beta0||_2^2` diverges.
    WnVanishes,
    /// `n^-3 T_n^2 E[g^2 (g+1)^-4 | data] -> 0` for hierarchical priors.
    PosteriorMoment,
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializes");
        f.write_str(s.as_str().expect("unit variant"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub lemma: LemmaId,
    pub status: LemmaStatus,
    /// What `statistic` holds, or why the lemma was skipped.
    pub detail: String,
    pub n: Vec<usize>,
    pub statistic: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub scenario_id: String,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub outcomes: Vec<LemmaOutcome>,
}

impl LemmaReport {
    pub fn outcome(&self, lemma: LemmaId) -> Option<&LemmaOutcome> {
        self.outcomes.iter().find(|o| o.lemma == lemma)
    }

    /// True when no applicable lemma failed.
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status != LemmaStatus::Fail)
    }
}

#[derive(Debug, Clone)]
pub struct LemmaConfig {
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub threads: usize,
    pub grid_size: usize,
}

impl LemmaConfig {
    pub fn new(master_seed: u64) -> Self {
        Self {
            n_grid: DEFAULT_LEMMA_GRID.to_vec(),
            reps: DEFAULT_LEMMA_REPS,
            master_seed,
            threads: 1,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    sup_error: f64,
    variance_error: f64,
    t_ratio_error: f64,
    t_tilde_error: Option<f64>,
    sigma2_mass: Option<f64>,
    g_eb: Option<f64>,
    w_n: f64,
    moment: Option<f64>,
}

const MLE_TOL: f64 = 0.15;
const RATIO_TOL: f64 = 0.1;
const SIGMA2_MASS: f64 = 0.99;
const WN_SLACK: f64 = 0.05;
const WN_VANISH: f64 = 0.05;

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Simulates the lemma statistics along `config.n_grid` and checks each
/// applicable lemma; lemmas whose hypotheses the scenario does not meet are
/// reported as skipped with the reason.
pub fn verify_lemmas(scenario: &Scenario, config: &LemmaConfig) -> Result<LemmaReport> {
    scenario.validate()?;
    if config.reps == 0 || config.threads == 0 {
        return Err(Error::Config("reps and threads must be >= 1".into()));
    }
    let grid = sorted_grid(&config.n_grid);
    scenario.validate_grid(&grid)?;
    let pool = thread_pool(config.threads)?;
    let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(grid.len());
    for &n in &grid {
        let gram = scenario.design_at(n, config.master_seed)?;
        let row = pool.install(|| {
            (0..config.reps)
                .into_par_iter()
                .map(|rep| lemma_cell(scenario, config, n, &gram, rep))
                .collect::<Result<Vec<_>>>()
        })?;
        cells.push(row);
    }

    let medians = |f: &dyn Fn(&Cell) -> Option<f64>| -> Option<Vec<f64>> {
        cells
            .iter()
            .map(|row| {
                let v: Option<Vec<f64>> = row.iter().map(f).collect();
                v.map(|v| stats::median(&v))
            })
            .collect()
    };
    let last_row = cells.last().expect("grid is nonempty");

    let ext = theorem_grid(&grid);
    let sq: Vec<f64> = ext.iter().map(|&n| scenario.gap_norms(n).0).collect();
    let sq_limit = super::classify::classify_limit(&sq);
    let bounded_below = matches!(sq_limit, Limit::ToPositive | Limit::Diverging);
    let fixed = matches!(scenario.regime, GRegime::Fixed { .. });

    let outcome = |lemma, status, detail: &str, statistic: Vec<f64>, threshold| LemmaOutcome {
        lemma,
        status,
        detail: detail.to_string(),
        n: grid.clone(),
        statistic,
        threshold,
    };
    let skipped = |lemma, reason: &str| LemmaOutcome {
        lemma,
        status: LemmaStatus::Skipped,
        detail: reason.to_string(),
        n: grid.clone(),
        statistic: Vec::new(),
        threshold: None,
    };
    let converging = |lemma, detail: &str, v: Vec<f64>, tol: f64| {
        let ok = nonincreasing(&v) && *v.last().expect("nonempty") < tol;
        outcome(lemma, if ok { LemmaStatus::Pass } else { LemmaStatus::Fail }, detail, v, Some(tol))
    };
    let status = |ok: bool| if ok { LemmaStatus::Pass } else { LemmaStatus::Fail };

    let mut outcomes = Vec::new();
    outcomes.push(converging(
        LemmaId::MleSupNorm,
        "median ||beta_hat - beta0||_inf / (sigma0 sqrt(lambda_max))",
        medians(&|c| Some(c.sup_error)).expect("always present"),
        MLE_TOL,
    ));
    outcomes.push(converging(
        LemmaId::ErrorVariance,
        "median |S_n/(n-p) - sigma0^2| / sigma0^2",
        medians(&|c| Some(c.variance_error)).expect("always present"),
        RATIO_TOL,
    ));
    outcomes.push(if scenario.alpha > 0.0 || bounded_below {
        converging(
            LemmaId::QuadraticForm,
            "median |T_n / theta_bar - 1|",
            medians(&|c| Some(c.t_ratio_error)).expect("always present"),
            RATIO_TOL,
        )
    } else {
        skipped(LemmaId::QuadraticForm, "needs alpha > 0 or liminf ||gamma - beta0||_2^2 > 0")
    });
    outcomes.push(match medians(&|c| c.t_tilde_error) {
        Some(v) if fixed => converging(LemmaId::ShrunkQuadraticForm, "median |T~_n / theta~ - 1|", v, RATIO_TOL),
        _ => skipped(LemmaId::ShrunkQuadraticForm, "needs a fixed g sequence"),
    });
    outcomes.push(match last_row.iter().map(|c| c.sigma2_mass).collect::<Option<Vec<f64>>>() {
        Some(v) if fixed => {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            outcome(
                LemmaId::Sigma2Concentration,
                status(min > SIGMA2_MASS),
                "min posterior mass of [theta~/2n, 2 theta~/n] at the largest n",
                vec![min],
                Some(SIGMA2_MASS),
            )
        }
        _ => skipped(LemmaId::Sigma2Concentration, "needs a fixed g sequence"),
    });
    outcomes.push(match last_row.iter().map(|c| c.g_eb).collect::<Option<Vec<f64>>>() {
        Some(v) if bounded_below => {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            outcome(LemmaId::EbPositive, status(min > 0.0), "min g_EB at the largest n", vec![min], Some(0.0))
        }
        Some(_) => skipped(LemmaId::EbPositive, "needs liminf ||gamma - beta0||_2^2 > 0"),
        None => skipped(LemmaId::EbPositive, "g_EB undefined: n - p + a - 2 <= 0"),
    });
    outcomes.push(if sq_limit == Limit::ToPositive {
        let delta = *sq.last().expect("nonempty");
        let lambda = scenario.design.lambda_bounds().1;
        let s2 = scenario.sigma0_sq;
        let bound = (1.0 - scenario.alpha) * lambda * s2 / (delta + lambda * s2) + WN_SLACK;
        let max = last_row.iter().map(|c| c.w_n).fold(0.0, f64::max);
        outcome(LemmaId::WnUpperBound, status(max <= bound), "max W_n at the largest n", vec![max], Some(bound))
    } else {
        skipped(LemmaId::WnUpperBound, "needs ||gamma - beta0||_2^2 to converge to a positive limit")
    });
    outcomes.push(if sq_limit == Limit::Diverging {
        converging(LemmaId::WnVanishes, "median W_n", medians(&|c| Some(c.w_n)).expect("always present"), WN_VANISH)
    } else {
        skipped(LemmaId::WnVanishes, "needs ||gamma - beta0||_2^2 to diverge")
    });
    outcomes.push(match medians(&|c| c.moment) {
        Some(v) => {
            let ok = v.windows(2).all(|w| w[1] < w[0]);
            outcome(LemmaId::PosteriorMoment, status(ok), "median n^-3 T_n^2 E[g^2 (g+1)^-4 | data]", v, None)
        }
        None => skipped(LemmaId::PosteriorMoment, "needs a hyper-g or Zellner-Siow prior"),
    });

    Ok(LemmaReport {
        scenario_id: scenario.id.clone(),
        n_grid: grid,
        reps: config.reps,
        master_seed: config.master_seed,
        outcomes,
    })
}

fn lemma_cell(
    scenario: &Scenario,
    config: &LemmaConfig,
    n: usize,
    gram: &std::sync::Arc<crate::model::GramSpectrum>,
    rep: usize,
) -> Result<Cell> {
    let path = StreamPath::new(scenario.experiment_key(), n as u64, rep as u64, Purpose::Data);
    let mut rng = RngStream::new(config.master_seed, path);
    let st = simulate_stats(scenario, n, gram, &SimulationMode::Direct, &mut rng)?;
    let beta0 = scenario.beta0_at(n);
    let gamma = scenario.gamma_at(n);
    let s2 = scenario.sigma0_sq;
    let d = diagnostics(&st, &gamma, &scenario.prior, Some((&beta0, s2)))?;
    let truth = d.truth.as_ref().expect("truth supplied");
    let lik = GLikelihood::from_diagnostics(&d, &scenario.prior);
    let lambda_max = scenario.design.lambda_bounds().1;

    let mut cell = Cell {
        sup_error: mle_sup_error(&st, &beta0)? / (s2 * lambda_max).sqrt(),
        variance_error: (st.s_n / (n - st.p) as f64 - s2).abs() / s2,
        t_ratio_error: (d.t_n / truth.theta_bar_0n - 1.0).abs(),
        w_n: d.w_n,
        g_eb: lik.eb_ghat().ok(),
        ..Cell::default()
    };
    match scenario.regime {
        GRegime::Fixed { rule } => {
            let g = rule.at(n, st.p);
            let theta = d.theta_tilde(g).expect("truth supplied");
            cell.t_tilde_error = Some((d.t_tilde(g) / theta - 1.0).abs());
            let nf = n as f64;
            cell.sigma2_mass = Some(Sigma2Posterior::new(g, &lik)?.interval_probability(theta / (2.0 * nf), 2.0 * theta / nf));
        }
        GRegime::HyperG { .. } | GRegime::ZellnerSiow => {
            let post = build_g_posterior(scenario.regime, &lik, config.grid_size)?;
            let e = post.expectation(|g| g * g / (g + 1.0).powi(4));
            cell.moment = Some(d.t_n * d.t_n / (n as f64).powi(3) * e);
        }
        GRegime::EmpiricalBayes => {}
    }
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PRule, VectorRule};
    use crate::regimes::GRule;

    fn quick(n_grid: Vec<usize>) -> LemmaConfig {
        LemmaConfig { n_grid, reps: 20, master_seed: 5, threads: 1, grid_size: 128 }
    }

    #[test]
    fn bounded_offsets_fixed_g() {
        let s = Scenario::new("l", 0.5, VectorRule::FirstM { value: 1.0, m: 3 }, VectorRule::Zeros, GRegime::fixed(GRule::N));
        let r = verify_lemmas(&s, &quick(vec![250, 1000, 4000])).unwrap();
        for id in [LemmaId::ErrorVariance, LemmaId::QuadraticForm, LemmaId::Sigma2Concentration, LemmaId::EbPositive, LemmaId::WnUpperBound] {
            assert_eq!(r.outcome(id).unwrap().status, LemmaStatus::Pass, "{id}: {:?}", r.outcome(id));
        }
        assert_eq!(r.outcome(LemmaId::WnVanishes).unwrap().status, LemmaStatus::Skipped);
        assert_eq!(r.outcome(LemmaId::PosteriorMoment).unwrap().status, LemmaStatus::Skipped);
        let bound = r.outcome(LemmaId::WnUpperBound).unwrap().threshold.unwrap();
        assert!((bound - (0.125 + 0.05)).abs() < 1e-12);
    }

    #[test]
    fn prior_at_truth_with_alpha_zero_skips_quadratic_form() {
        let s = Scenario::new("l0", 0.0, VectorRule::Zeros, VectorRule::Zeros, GRegime::EmpiricalBayes)
            .with_p_rule(PRule::CeilPower(0.5));
        let r = verify_lemmas(&s, &quick(vec![250, 1000])).unwrap();
        let o = r.outcome(LemmaId::QuadraticForm).unwrap();
        assert_eq!(o.status, LemmaStatus::Skipped);
        assert!(o.detail.contains("alpha > 0"));
    }

    #[test]
    fn names_are_snake_case() {
        assert_eq!(LemmaId::WnUpperBound.to_string(), "wn_upper_bound");
    }
}
