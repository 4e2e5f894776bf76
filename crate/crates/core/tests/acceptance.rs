//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use gprior_core::lab::{LemmaId, LemmaStatus, Trend};
use gprior_core::model::{Magnitude, PRule};
use gprior_core::numerics::{beta_cdf, beta_sf, beta_tail_bound_check, sample_chi_square, stats, StreamPath};
use gprior_core::posterior::sup_ball_probabilities;
use gprior_core::*;
use rand::Rng;

const SEED: u64 = 20_240_601;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn first_m_scenario(id: &str, alpha: f64, regime: GRegime) -> Scenario {
    let s = Scenario::new(id, alpha, VectorRule::FirstM { value: 1.0, m: 3 }, VectorRule::Zeros, regime);
    if alpha == 0.0 {
        s.with_p_rule(PRule::CeilPower(0.5))
    } else {
        s
    }
}

fn sweep(scenario: &Scenario, eps: &[f64], reps: usize, threads: usize) -> ExperimentReport {
    let mut cfg = ExperimentConfig::for_scenario(scenario, SEED);
    cfg.n_grid = vec![200, 800, 3200];
    cfg.eps_grid = eps.to_vec();
    cfg.reps = reps;
    cfg.threads = threads;
    run_experiment(scenario, &cfg).expect("experiment runs")
}

fn fmt_medians(r: &ExperimentReport) -> String {
    fmt_summary(&r.summaries[0])
}

fn fmt_summary(s: &gprior_core::lab::EpsSummary) -> String {
    let m: Vec<String> = s.median.iter().map(|v| format!("{v:.3e}")).collect();
    format!("medians [{}] trend {:?}", m.join(", "), s.trend)
}

fn stream(tag: u64, rep: u64) -> RngStream {
    RngStream::new(SEED, StreamPath::new(tag, 0, rep, Purpose::Test))
}

/// Ball probabilities: exact quadrature vs Monte Carlo.
fn criterion_1() -> Outcome {
    let scenario = first_m_scenario("c1", 0.25, GRegime::hyper_g()).with_sigma0_sq(2.5);
    let n = 200;
    let gram = scenario.design_at(n, SEED).unwrap();
    let beta0 = scenario.beta0_at(n);
    let gamma = scenario.gamma_at(n);
    let eps = [0.25, 0.5];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for inst in 0..10 {
        let mut rng = stream(1, inst);
        let st = simulate_stats(&scenario, n, &gram, &SimulationMode::Direct, &mut rng).unwrap();
        let d = diagnostics(&st, &gamma, &scenario.prior, None).unwrap();
        let post = build_g_posterior(scenario.regime, &GLikelihood::from_diagnostics(&d, &scenario.prior), 512).unwrap();
        let exact = sup_ball_probabilities(&post, &st, &gamma, &beta0, &eps, &BallOptions::default(), &mut rng).unwrap();
        let mc_opts = BallOptions { method: Some(BallMethod::MonteCarlo), mc_draws: 50_000, ..Default::default() };
        let mc = sup_ball_probabilities(&post, &st, &gamma, &beta0, &eps, &mc_opts, &mut rng).unwrap();
        for (e, m) in exact.iter().zip(&mc) {
            let se = m.std_error.unwrap();
            let z = (e.value - m.value).abs() / se;
            worst = worst.max(z);
            pass &= (e.value - m.value).abs() <= 3.0 * se;
        }
    }
    Outcome { id: "1 exact vs Monte Carlo ball probability", pass, detail: format!("worst |diff|/se = {worst:.2} (<= 3)") }
}

/// Empirical-Bayes closed form vs grid search.
fn criterion_2() -> Outcome {
    let mut rng = stream(2, 0);
    let mut pass = true;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..25 {
        let n = rng.random_range(50..2000usize);
        let p = rng.random_range(1..(n - 3).min(n / 2));
        let s_n = sample_chi_square(&mut rng, (n - p) as f64).unwrap();
        let t_n = p as f64 * rng.random_range(0.5..30.0);
        let lik = GLikelihood::new(n, p, s_n, t_n, &PriorConstants::default()).unwrap();
        let g_hat = lik.eb_ghat().unwrap();
        let step = 1000.0 / 9999.0;
        let (arg, best) = (0..10_000)
            .map(|i| i as f64 * step)
            .map(|g| (g, lik.log_marginal_likelihood(g)))
            .fold((0.0, f64::NEG_INFINITY), |a, x| if x.1 > a.1 { x } else { a });
        worst_gap = worst_gap.max((arg - g_hat).abs() / step);
        pass &= (arg - g_hat).abs() <= step && lik.log_marginal_likelihood(g_hat) >= best - 1e-9;
    }
    Outcome { id: "2 empirical-Bayes maximiser", pass, detail: format!("worst |argmax - g_EB| = {worst_gap:.3} grid steps") }
}

/// Hyper-g samples of u against the truncated Beta law.
fn criterion_3() -> Outcome {
    let (n, c) = (400usize, 3.0);
    let scenario = first_m_scenario("c3", 0.25, GRegime::HyperG { c });
    let p = scenario.p_at(n);
    let gram = scenario.design_at(n, SEED).unwrap();
    let mut rng = stream(3, 0);
    let st = simulate_stats(&scenario, n, &gram, &SimulationMode::Direct, &mut rng).unwrap();
    let d = diagnostics(&st, &scenario.gamma_at(n), &scenario.prior, None).unwrap();
    let lik = GLikelihood::from_diagnostics(&d, &scenario.prior);
    let post = build_g_posterior(scenario.regime, &lik, 512).unwrap();
    let us: Vec<f64> = (0..10_000).map(|_| lik.u_of_g(post.sample(&mut rng))).collect();
    let (a, b) = ((n as f64 - p as f64 - c) / 2.0, (p as f64 + c - 2.0) / 2.0);
    let w = lik.w_n();
    let lo = beta_cdf(w, a, b).unwrap();
    let tail = beta_sf(w, a, b).unwrap();
    let ks = stats::ks_one_sample(&us, |u| (beta_cdf(u, a, b).unwrap() - lo) / tail);
    Outcome { id: "3 hyper-g truncated Beta law", pass: ks < 0.02 && p == 100, detail: format!("KS = {ks:.4} (< 0.02), p = {p}") }
}

/// Zellner-Siow: u-density times Jacobian against the g-space density.
fn criterion_4() -> Outcome {
    let lik = GLikelihood::new(400, 100, 310.0, 160.0, &PriorConstants::default()).unwrap();
    let mut rng = stream(4, 0);
    let r: Vec<f64> = (0..50)
        .map(|_| {
            let g = 10f64.powf(rng.random_range(-2.0..4.0));
            lik.zs_log_density_u(lik.u_of_g(g)) + lik.log_jacobian(g) - lik.zs_log_density_g(g)
        })
        .collect();
    let spread = r.iter().map(|x| (x - r[0]).abs()).fold(0.0, f64::max);
    Outcome { id: "4 Zellner-Siow change of variables", pass: spread < 1e-8, detail: format!("max residual {spread:.2e} (< 1e-8)") }
}

/// Lemma verifiers and the Beta lower-tail bound.
fn criterion_5() -> Outcome {
    let wanted = [
        LemmaId::MleSupNorm,
        LemmaId::ErrorVariance,
        LemmaId::QuadraticForm,
        LemmaId::ShrunkQuadraticForm,
        LemmaId::Sigma2Concentration,
        LemmaId::EbPositive,
        LemmaId::WnUpperBound,
        LemmaId::WnVanishes,
    ];
    let mut passed = std::collections::BTreeSet::new();
    let mut failures = Vec::new();
    for alpha in [0.0, 0.5] {
        let bounded = first_m_scenario(&format!("c5_bounded_{alpha}"), alpha, GRegime::fixed(GRule::N));
        let diverging = Scenario::new(
            format!("c5_diverging_{alpha}"),
            alpha,
            VectorRule::ScaledNorm(Magnitude::PowerOfN(0.5)),
            VectorRule::Zeros,
            GRegime::fixed(GRule::N),
        )
        .with_p_rule(if alpha == 0.0 { PRule::CeilPower(0.5) } else { PRule::Linear });
        for s in [bounded, diverging] {
            let cfg = LemmaConfig { threads: 4, ..LemmaConfig::new(SEED) };
            let report = verify_lemmas(&s, &cfg).unwrap();
            for o in &report.outcomes {
                match o.status {
                    LemmaStatus::Pass => {
                        passed.insert(format!("{}", o.lemma));
                    }
                    LemmaStatus::Fail => failures.push(format!("{}:{} {:?}", s.id, o.lemma, o.statistic)),
                    LemmaStatus::Skipped => {}
                }
            }
        }
    }
    let missing: Vec<String> = wanted.iter().map(|l| l.to_string()).filter(|l| !passed.contains(l)).collect();

    let mut tail_fail = Vec::new();
    for alpha in [0.0, 0.5] {
        for n in [50u64, 100, 200] {
            let xis: &[f64] = if alpha == 0.0 { &[0.001, 0.01, 0.1] } else { &[0.001, 0.01] };
            for &xi in xis {
                let nf = n as f64;
                let (a_n, b_n) = if alpha > 0.0 { (nf * (1.0 - alpha), nf * alpha) } else { (nf, nf.sqrt().ceil()) };
                let c = beta_tail_bound_check(a_n, b_n, n, xi, alpha).unwrap();
                if !c.holds {
                    tail_fail.push(format!("(n={n}, xi={xi}, alpha={alpha})"));
                }
            }
        }
    }
    let pass = failures.is_empty() && missing.is_empty() && tail_fail.is_empty();
    Outcome {
        id: "5 lemma suite and Beta tail bound",
        pass,
        detail: format!(
            "passed {} lemmas; failures {:?}; never exercised {:?}; tail-bound failures {:?}",
            passed.len(),
            failures,
            missing,
            tail_fail
        ),
    }
}

/// Inconsistency for bounded offsets with alpha > 0. The sweep also runs at
/// eps = 0.1, below the limiting shrinkage bias of 1/7 on the nonzero
/// coordinates, and reports it alongside as context only.
fn criterion_6() -> Vec<Outcome> {
    let mut out = Vec::new();
    for regime in [GRegime::EmpiricalBayes, GRegime::hyper_g()] {
        let s = first_m_scenario("c6", 0.5, regime);
        let r = sweep(&s, &[0.5, 0.1], 50, 4);
        let summary = &r.summaries[0];
        let pass = summary.median.iter().all(|&m| m >= 0.1)
            && summary.trend == Trend::BoundedAway
            && r.verdict.predicted == Verdict::Inconsistent;
        out.push(Outcome {
            id: if regime == GRegime::EmpiricalBayes { "6 inconsistency reproduced (EB, eps 0.5)" } else { "6 inconsistency reproduced (hyper-g, eps 0.5)" },
            pass,
            detail: format!(
                "{}; predicted {}; context at eps 0.1: {}",
                fmt_summary(summary),
                r.verdict,
                fmt_summary(&r.summaries[1])
            ),
        });
    }
    out
}

/// Consistency for fixed g_n = n and for diverging offsets.
fn criterion_7() -> Vec<Outcome> {
    let fixed = sweep(&first_m_scenario("c7_fixed", 0.5, GRegime::fixed(GRule::N)), &[0.5], 50, 4);
    let f = &fixed.summaries[0];
    let pass_fixed = *f.median.last().unwrap() <= 0.05 && f.median.windows(2).all(|w| w[1] <= w[0]) && f.trend == Trend::VanishingTrend;
    let eb = Scenario::new("c7_eb_diverging", 0.5, VectorRule::ScaledNorm(Magnitude::PowerOfN(0.5)), VectorRule::Zeros, GRegime::EmpiricalBayes);
    let eb = sweep(&eb, &[0.5], 50, 4);
    vec![
        Outcome { id: "7 consistency with g_n = n", pass: pass_fixed, detail: format!("{}; predicted {}", fmt_medians(&fixed), fixed.verdict) },
        Outcome {
            id: "7 consistency with diverging ||beta0||_2^2 (EB)",
            pass: eb.summaries[0].trend == Trend::VanishingTrend,
            detail: format!("{}; predicted {}", fmt_medians(&eb), eb.verdict),
        },
    ]
}

/// alpha = 0 rescues EB and hyper-g.
fn criterion_8() -> Vec<Outcome> {
    [GRegime::EmpiricalBayes, GRegime::hyper_g()]
        .into_iter()
        .map(|regime| {
            let r = sweep(&first_m_scenario("c8", 0.0, regime), &[0.5], 50, 4);
            Outcome {
                id: if regime == GRegime::EmpiricalBayes { "8 alpha = 0 consistency (EB)" } else { "8 alpha = 0 consistency (hyper-g)" },
                pass: r.summaries[0].trend == Trend::VanishingTrend,
                detail: format!("{}; predicted {}", fmt_medians(&r), r.verdict),
            }
        })
        .collect()
}

/// n^-3 T_n^2 E[g^2 (g+1)^-4 | data] decreases along n.
fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for regime in [GRegime::hyper_g(), GRegime::ZellnerSiow] {
        let s = first_m_scenario("c9", 0.5, regime);
        let cfg = LemmaConfig { reps: 50, threads: 4, ..LemmaConfig::new(SEED) };
        let r = verify_lemmas(&s, &cfg).unwrap();
        let o = r.outcome(LemmaId::PosteriorMoment).unwrap();
        pass &= o.status == LemmaStatus::Pass;
        let v: Vec<String> = o.statistic.iter().map(|x| format!("{x:.3e}")).collect();
        detail.push(format!("{regime}: [{}]", v.join(", ")));
    }
    Outcome { id: "9 vanishing posterior moment", pass, detail: detail.join("; ") }
}

/// Determinism across worker counts.
fn criterion_10() -> Outcome {
    let mut pass = true;
    for regime in [GRegime::EmpiricalBayes, GRegime::hyper_g()] {
        let s = first_m_scenario("c6", 0.5, regime);
        let a = sweep(&s, &[0.5], 50, 1).payload_json();
        let b = sweep(&s, &[0.5], 50, 8).payload_json();
        pass &= a == b;
    }
    Outcome { id: "10 byte-identical reports at 1 and 8 threads", pass, detail: "criterion 6 sweeps, EB and hyper-g".into() }
}

fn main() -> ExitCode {
    let only: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut all_pass = true;
    let mut run = |key: &str, f: &dyn Fn() -> Vec<Outcome>| {
        if only.as_deref().is_some_and(|o| o != key) {
            return;
        }
        let t = Instant::now();
        for o in f() {
            all_pass &= o.pass;
            println!("{} criterion {}: {} ({:.1}s)", if o.pass { "PASS" } else { "FAIL" }, o.id, o.detail, t.elapsed().as_secs_f64());
        }
    };
    run("1", &|| vec![criterion_1()]);
    run("2", &|| vec![criterion_2()]);
    run("3", &|| vec![criterion_3()]);
    run("4", &|| vec![criterion_4()]);
    run("5", &|| vec![criterion_5()]);
    run("6", &criterion_6);
    run("7", &criterion_7);
    run("8", &criterion_8);
    run("9", &|| vec![criterion_9()]);
    run("10", &|| vec![criterion_10()]);
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
