use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{classify_trend, Trend, TrendThresholds};
use super::lemmas::LemmaReport;
use super::theorem::{evaluate_theorem, TheoremVerdict};
use crate::error::{Error, Result};
use crate::model::{diagnostics, simulate_stats, GramSpectrum, Scenario, SimulationMode, SCHEMA_VERSION};
use crate::numerics::{stats, Purpose, RngStream, StreamPath};
use crate::posterior::{sup_ball_probabilities, BallMethod, BallOptions};
use crate::regimes::{build_g_posterior, GLikelihood};

pub const DEFAULT_N_GRID: [usize; 3] = [200, 800, 3200];
pub const DEFAULT_EPS_GRID: [f64; 2] = [0.25, 0.5];
pub const DEFAULT_REPS: usize = 50;
/// Grid size for the posterior of `g` inside experiments.
pub const EXPERIMENT_GRID_SIZE: usize = 128;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub reps: usize,
    pub master_seed: u64,
    pub threads: usize,
    pub grid_size: usize,
    pub ball: BallOptions,
    pub thresholds: TrendThresholds,
}

impl ExperimentConfig {
    /// Grids and replication count from the scenario when present, defaults otherwise.
    pub fn for_scenario(scenario: &Scenario, master_seed: u64) -> Self {
        Self {
            n_grid: scenario.n_grid.clone().unwrap_or_else(|| DEFAULT_N_GRID.to_vec()),
            eps_grid: scenario.eps_grid.clone().unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec()),
            reps: scenario.reps.unwrap_or(DEFAULT_REPS),
            master_seed,
            threads: 1,
            grid_size: EXPERIMENT_GRID_SIZE,
            ball: BallOptions::default(),
            thresholds: TrendThresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("n grid is empty".into()));
        }
        if self.eps_grid.is_empty() {
            return Err(Error::Config("epsilon grid is empty".into()));
        }
        if let Some(e) = self.eps_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::Config(format!("epsilon values must be positive and finite, got {e}")));
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// One `(n, replication, eps)` ball probability. `seed` is the stream seed
/// of the data draw, which reproduces the cell on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub n: usize,
    pub p: usize,
    pub rep: usize,
    pub eps: f64,
    pub prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    pub method: BallMethod,
    pub seed: u64,
    pub w_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub n: Vec<usize>,
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
    pub trend: Trend,
    /// Whether the trend matches the predicted verdict; `None` when the
    /// verdict makes no prediction or the trend is indeterminate.
    pub agreement: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub scenario_id: String,
    pub regime: String,
    pub scenario: Scenario,
    pub n_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub reps: usize,
    pub master_seed: u64,
    pub grid_size: usize,
    pub thresholds: TrendThresholds,
    pub verdict: TheoremVerdict,
    pub summaries: Vec<EpsSummary>,
    pub cells: Vec<CellRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<LemmaReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

pub const CSV_HEADER: [&str; 9] = ["scenario", "regime", "n", "p", "rep", "eps", "prob", "se", "seed"];

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without wall-clock timings; identical inputs give
    /// byte-identical payloads.
    pub fn payload_json(&self) -> String {
        let mut copy = self.clone();
        copy.wall_time_secs = None;
        copy.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for c in &self.cells {
            w.write_record([
                self.scenario_id.clone(),
                self.regime.clone(),
                c.n.to_string(),
                c.p.to_string(),
                c.rep.to_string(),
                c.eps.to_string(),
                c.prob.to_string(),
                c.se.map(|s| s.to_string()).unwrap_or_default(),
                c.seed.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Method(format!("cannot start worker pool: {e}")))
}

pub(crate) fn sorted_grid(grid: &[usize]) -> Vec<usize> {
    let mut g = grid.to_vec();
    g.sort_unstable();
    g.dedup();
    g
}

struct NContext {
    n: usize,
    p: usize,
    gram: Arc<GramSpectrum>,
    beta0: Vec<f64>,
    gamma: Vec<f64>,
}

/// Simulates every `(n, replication)` cell, computes sup-norm ball
/// probabilities around `beta0`, and classifies their trend along `n`.
pub fn run_experiment(scenario: &Scenario, config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    scenario.validate()?;
    config.validate()?;
    let n_grid = sorted_grid(&config.n_grid);
    scenario.validate_grid(&n_grid)?;
    let verdict = evaluate_theorem(scenario, &n_grid)?;

    let contexts = n_grid
        .iter()
        .map(|&n| {
            Ok(NContext {
                n,
                p: scenario.p_at(n),
                gram: scenario.design_at(n, config.master_seed)?,
                beta0: scenario.beta0_at(n),
                gamma: scenario.gamma_at(n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..contexts.len()).flat_map(|i| (0..config.reps).map(move |r| (i, r))).collect();

    let pool = thread_pool(config.threads)?;
    let per_job: Vec<Vec<CellRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, rep)| run_cell(scenario, config, &contexts[i], rep))
            .collect::<Result<Vec<_>>>()
    })?;
    let cells: Vec<CellRecord> = per_job.into_iter().flatten().collect();

    let summaries = config
        .eps_grid
        .iter()
        .map(|&eps| {
            let mut summary = EpsSummary {
                eps,
                n: n_grid.clone(),
                median: Vec::new(),
                q25: Vec::new(),
                q75: Vec::new(),
                trend: Trend::Indeterminate,
                agreement: None,
            };
            for &n in &n_grid {
                let mut probs: Vec<f64> = cells.iter().filter(|c| c.n == n && c.eps == eps).map(|c| c.prob).collect();
                probs.sort_by(f64::total_cmp);
                summary.median.push(stats::quantile_sorted(&probs, 0.5));
                summary.q25.push(stats::quantile_sorted(&probs, 0.25));
                summary.q75.push(stats::quantile_sorted(&probs, 0.75));
            }
            summary.trend = classify_trend(&summary.median, &config.thresholds);
            summary.agreement = match (verdict.predicted.predicts_consistency(), summary.trend) {
                (Some(true), Trend::VanishingTrend) | (Some(false), Trend::BoundedAway) => Some(true),
                (Some(_), Trend::Indeterminate) | (None, _) => None,
                (Some(_), _) => Some(false),
            };
            summary
        })
        .collect();

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        scenario_id: scenario.id.clone(),
        regime: scenario.regime.to_string(),
        scenario: scenario.clone(),
        n_grid,
        eps_grid: config.eps_grid.clone(),
        reps: config.reps,
        master_seed: config.master_seed,
        grid_size: config.grid_size,
        thresholds: config.thresholds,
        verdict,
        summaries,
        cells,
        lemmas: None,
        wall_time_secs: Some(started.elapsed().as_secs_f64()),
    })
}

fn run_cell(scenario: &Scenario, config: &ExperimentConfig, ctx: &NContext, rep: usize) -> Result<Vec<CellRecord>> {
    let key = scenario.experiment_key();
    let path = |purpose| StreamPath::new(key, ctx.n as u64, rep as u64, purpose);
    let mut data_rng = RngStream::new(config.master_seed, path(Purpose::Data));
    let seed = data_rng.stream_seed();
    let stats = simulate_stats(scenario, ctx.n, &ctx.gram, &SimulationMode::Direct, &mut data_rng)?;
    let diag = diagnostics(&stats, &ctx.gamma, &scenario.prior, None)?;
    let lik = GLikelihood::from_diagnostics(&diag, &scenario.prior);
    let post = build_g_posterior(scenario.regime, &lik, config.grid_size)?;
    let mut post_rng = RngStream::new(config.master_seed, path(Purpose::Posterior));
    let probs = sup_ball_probabilities(&post, &stats, &ctx.gamma, &ctx.beta0, &config.eps_grid, &config.ball, &mut post_rng)?;
    Ok(probs
        .into_iter()
        .map(|b| CellRecord {
            n: ctx.n,
            p: ctx.p,
            rep,
            eps: b.epsilon,
            prob: b.value,
            se: b.std_error,
            method: b.method,
            seed,
            w_n: diag.w_n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VectorRule;
    use crate::regimes::{GRegime, GRule};

    fn small(regime: GRegime) -> (Scenario, ExperimentConfig) {
        let s = Scenario::new("small", 0.25, VectorRule::FirstM { value: 1.0, m: 3 }, VectorRule::Zeros, regime);
        let mut c = ExperimentConfig::for_scenario(&s, 17);
        c.n_grid = vec![50, 100];
        c.eps_grid = vec![0.25, 0.5, 1.0];
        c.reps = 3;
        (s, c)
    }

    #[test]
    fn cells_and_summaries_line_up() {
        let (s, c) = small(GRegime::hyper_g());
        let r = run_experiment(&s, &c).unwrap();
        assert_eq!(r.cells.len(), 2 * 3 * 3);
        assert_eq!(r.summaries.len(), 3);
        for n in [50, 100] {
            for rep in 0..3 {
                let probs: Vec<f64> = r.cells.iter().filter(|x| x.n == n && x.rep == rep).map(|x| x.prob).collect();
                assert!(probs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            }
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let (s, mut c) = small(GRegime::EmpiricalBayes);
        let a = run_experiment(&s, &c).unwrap();
        c.threads = 4;
        let b = run_experiment(&s, &c).unwrap();
        assert_eq!(a.payload_json(), b.payload_json());
    }

    #[test]
    fn single_point_is_indeterminate() {
        let (s, mut c) = small(GRegime::fixed(GRule::N));
        c.n_grid = vec![100];
        c.reps = 1;
        let r = run_experiment(&s, &c).unwrap();
        assert!(r.summaries.iter().all(|x| x.trend == Trend::Indeterminate));
    }

    #[test]
    fn prior_at_truth_vanishes() {
        let s = Scenario::new("truth", 0.5, VectorRule::Zeros, VectorRule::Zeros, GRegime::fixed(GRule::Constant(1.0)));
        let mut c = ExperimentConfig::for_scenario(&s, 3);
        c.n_grid = vec![200, 800, 3200];
        c.eps_grid = vec![0.5];
        c.reps = 5;
        let r = run_experiment(&s, &c).unwrap();
        assert!(r.cells.iter().filter(|x| x.n == 200).all(|x| x.prob < 0.5));
        assert_eq!(r.summaries[0].trend, Trend::VanishingTrend);
        assert_eq!(r.summaries[0].agreement, Some(true));
    }

    #[test]
    fn csv_header_and_rows() {
        let (s, mut c) = small(GRegime::ZellnerSiow);
        c.reps = 1;
        let r = run_experiment(&s, &c).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "scenario,regime,n,p,rep,eps,prob,se,seed");
        assert_eq!(lines.count(), r.cells.len());
    }

    #[test]
    fn invalid_configs() {
        let (s, mut c) = small(GRegime::EmpiricalBayes);
        c.reps = 0;
        assert!(run_experiment(&s, &c).unwrap_err().is_validation());
        let (s, mut c) = small(GRegime::EmpiricalBayes);
        c.eps_grid = vec![-1.0];
        assert!(run_experiment(&s, &c).is_err());
    }

    #[test]
    fn report_round_trip() {
        let (s, mut c) = small(GRegime::EmpiricalBayes);
        c.reps = 1;
        let r = run_experiment(&s, &c).unwrap();
        let back = ExperimentReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back.payload_json(), r.payload_json());
    }
}
