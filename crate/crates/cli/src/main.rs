//! `gprior-lab`: load a scenario, run n-sweeps, evaluate theorem verdicts,
//! verify lemmas and plot reports.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gprior_core::lab::{evaluate_theorem, LemmaStatus, DEFAULT_LEMMA_GRID, DEFAULT_LEMMA_REPS, DEFAULT_N_GRID};
use gprior_core::model::{mle_sup_error, SCHEMA_VERSION};
use gprior_core::numerics::StreamPath;
use gprior_core::{
    build_g_posterior, diagnostics, run_experiment, simulate_stats, verify_lemmas, Error, ExperimentConfig,
    ExperimentReport, GLikelihood, LemmaConfig, Purpose, RngStream, Scenario, SimulationMode,
};

#[derive(Debug, Parser)]
#[command(name = "gprior-lab", version, about = "Posterior consistency lab for Zellner g-priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario JSON file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Master seed for every random stream.
    #[arg(long, global = true, env = "GPRIOR_LAB_SEED", default_value_t = 1)]
    seed: u64,

    /// Comma-separated sample sizes, e.g. 200,800,3200.
    #[arg(long, global = true, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,

    /// Comma-separated ball radii, e.g. 0.25,0.5.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,

    #[arg(long, global = true)]
    reps: Option<usize>,

    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one data set per n and print its sufficient statistics.
    Simulate,
    /// Run the full n-sweep and write report.json / cells.csv.
    Experiment,
    /// Print the predicted verdict with its condition traces.
    Theorem,
    /// Run the lemma verifiers.
    Lemmas,
    /// Render one SVG per epsilon from <out>/report.json.
    Plot,
}

/// Exit code 2 for bad input, 3 for failures while computing.
enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CmdResult = Result<(), Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn load_scenario(cli: &Cli) -> Result<Scenario, Failure> {
    let path = cli.scenario.as_ref().ok_or_else(|| Failure::Validation("--scenario is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read scenario {}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn ensure_out(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn experiment_config(cli: &Cli, scenario: &Scenario) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_scenario(scenario, cli.seed);
    if let Some(g) = &cli.n_grid {
        cfg.n_grid = g.clone();
    }
    if let Some(e) = &cli.eps_grid {
        cfg.eps_grid = e.clone();
    }
    if let Some(r) = cli.reps {
        cfg.reps = r;
    }
    cfg.threads = cli.threads;
    cfg
}

fn cmd_simulate(cli: &Cli) -> CmdResult {
    let scenario = load_scenario(cli)?;
    let grid = cli.n_grid.clone().or_else(|| scenario.n_grid.clone()).unwrap_or_else(|| DEFAULT_N_GRID.to_vec());
    scenario.validate_grid(&grid)?;
    let mut rows = Vec::new();
    for &n in &grid {
        let gram = scenario.design_at(n, cli.seed)?;
        let path = StreamPath::new(scenario.experiment_key(), n as u64, 0, Purpose::Data);
        let mut rng = RngStream::new(cli.seed, path);
        let st = simulate_stats(&scenario, n, &gram, &SimulationMode::Direct, &mut rng)?;
        let beta0 = scenario.beta0_at(n);
        let d = diagnostics(&st, &scenario.gamma_at(n), &scenario.prior, Some((&beta0, scenario.sigma0_sq)))?;
        let lik = GLikelihood::from_diagnostics(&d, &scenario.prior);
        let post = build_g_posterior(scenario.regime, &lik, 256)?;
        let mean_g = post.expectation(|g| g);
        println!(
            "n={n} p={} S_n={:.4} T_n={:.4} W_n={:.6} E[g|data]={mean_g:.4} mle_sup_error={:.4}",
            st.p,
            st.s_n,
            d.t_n,
            d.w_n,
            mle_sup_error(&st, &beta0)?
        );
        rows.push(serde_json::json!({
            "n": n,
            "p": st.p,
            "seed": rng.stream_seed(),
            "s_n": st.s_n,
            "diagnostics": d,
            "posterior_mean_g": mean_g,
        }));
    }
    ensure_out(&cli.out)?;
    let doc = serde_json::json!({ "schema_version": SCHEMA_VERSION, "scenario_id": scenario.id, "draws": rows });
    write(&cli.out.join("simulate.json"), &serde_json::to_string_pretty(&doc).expect("serializes"))
}

fn cmd_experiment(cli: &Cli) -> CmdResult {
    let scenario = load_scenario(cli)?;
    let cfg = experiment_config(cli, &scenario);
    let report = run_experiment(&scenario, &cfg)?;
    ensure_out(&cli.out)?;
    if cli.format != Format::Csv {
        write(&cli.out.join("report.json"), &report.to_json())?;
    }
    if cli.format != Format::Json {
        let path = cli.out.join("cells.csv");
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        report.write_csv(file)?;
    }
    for s in &report.summaries {
        let medians: Vec<String> = s.median.iter().map(|m| format!("{m:.4}")).collect();
        let agreement = match s.agreement {
            Some(true) => "agrees",
            Some(false) => "DISAGREES",
            None => "n/a",
        };
        println!(
            "eps={} trend={:?} medians=[{}] predicted={} agreement={agreement}",
            s.eps,
            s.trend,
            medians.join(", "),
            report.verdict
        );
    }
    Ok(())
}

fn cmd_theorem(cli: &Cli) -> CmdResult {
    let scenario = load_scenario(cli)?;
    let grid = cli.n_grid.clone().or_else(|| scenario.n_grid.clone()).unwrap_or_else(|| DEFAULT_N_GRID.to_vec());
    let verdict = evaluate_theorem(&scenario, &grid)?;
    println!("{verdict}");
    for trace in &verdict.evidence {
        let pts: Vec<String> = trace.n.iter().zip(&trace.values).map(|(n, v)| format!("{n}:{v:.6e}")).collect();
        println!("  {} -> {:?}  [{}]", trace.name, trace.limit, pts.join(", "));
    }
    ensure_out(&cli.out)?;
    write(&cli.out.join("verdict.json"), &serde_json::to_string_pretty(&verdict).expect("serializes"))
}

fn cmd_lemmas(cli: &Cli) -> CmdResult {
    let scenario = load_scenario(cli)?;
    let cfg = LemmaConfig {
        n_grid: cli.n_grid.clone().unwrap_or_else(|| DEFAULT_LEMMA_GRID.to_vec()),
        reps: cli.reps.unwrap_or(DEFAULT_LEMMA_REPS),
        threads: cli.threads,
        ..LemmaConfig::new(cli.seed)
    };
    let report = verify_lemmas(&scenario, &cfg)?;
    for o in &report.outcomes {
        let tag = match o.status {
            LemmaStatus::Pass => "PASS",
            LemmaStatus::Fail => "FAIL",
            LemmaStatus::Skipped => "SKIP",
        };
        let vals: Vec<String> = o.statistic.iter().map(|v| format!("{v:.4e}")).collect();
        let threshold = o.threshold.map(|t| format!(" threshold {t}")).unwrap_or_default();
        println!("{tag} {:<22} {} [{}]{threshold}", o.lemma.to_string(), o.detail, vals.join(", "));
    }
    ensure_out(&cli.out)?;
    write(&cli.out.join("lemmas.json"), &serde_json::to_string_pretty(&report).expect("serializes"))
}

fn cmd_plot(cli: &Cli) -> CmdResult {
    let path = cli.out.join("report.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let report = ExperimentReport::from_json(&text)
        .map_err(|e| Failure::Runtime(format!("corrupt report {}: {e}", path.display())))?;
    if report.cells.is_empty() || report.summaries.is_empty() {
        return Err(Failure::Runtime(format!("{} has no cells to plot", path.display())));
    }
    for s in &report.summaries {
        let file = cli.out.join(plot::file_name(s.eps));
        write(&file, &plot::render(&report.scenario_id, s))?;
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate => cmd_simulate(&cli),
        Command::Experiment => cmd_experiment(&cli),
        Command::Theorem => cmd_theorem(&cli),
        Command::Lemmas => cmd_lemmas(&cli),
        Command::Plot => cmd_plot(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
