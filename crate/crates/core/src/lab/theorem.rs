use std::fmt;

use serde::{Deserialize, Serialize};

use super::classify::{classify_limit, Limit};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::regimes::GRegime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "T1_NonHierarchical")]
    T1NonHierarchical,
    #[serde(rename = "T2_EB")]
    T2EmpiricalBayes,
    #[serde(rename = "T3_HyperG")]
    T3HyperG,
    #[serde(rename = "T4_ZS")]
    T4ZellnerSiow,
}

impl Theorem {
    pub fn for_regime(regime: &GRegime) -> Self {
        match regime {
            GRegime::Fixed { .. } => Theorem::T1NonHierarchical,
            GRegime::EmpiricalBayes => Theorem::T2EmpiricalBayes,
            GRegime::HyperG { .. } => Theorem::T3HyperG,
            GRegime::ZellnerSiow => Theorem::T4ZellnerSiow,
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            Theorem::T1NonHierarchical => 1,
            Theorem::T2EmpiricalBayes => 2,
            Theorem::T3HyperG => 3,
            Theorem::T4ZellnerSiow => 4,
        }
    }

    fn matches(&self, regime: &GRegime) -> bool {
        Theorem::for_regime(regime) == *self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Consistent,
    Inconsistent,
    #[serde(rename = "SufficientOnly_Consistent")]
    SufficientOnlyConsistent,
    Unknown,
}

impl Verdict {
    /// Whether the verdict predicts vanishing ball probabilities.
    pub fn predicts_consistency(&self) -> Option<bool> {
        match self {
            Verdict::Consistent | Verdict::SufficientOnlyConsistent => Some(true),
            Verdict::Inconsistent => Some(false),
            Verdict::Unknown => None,
        }
    }
}

/// A condition sequence evaluated along the grid, with its classified limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionTrace {
    pub name: String,
    pub n: Vec<usize>,
    pub values: Vec<f64>,
    pub limit: Limit,
}

impl ConditionTrace {
    fn new(name: &str, n: &[usize], values: Vec<f64>) -> Self {
        let limit = classify_limit(&values);
        Self { name: name.to_string(), n: n.to_vec(), values, limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem: Theorem,
    pub predicted: Verdict,
    pub evidence: Vec<ConditionTrace>,
}

impl fmt::Display for TheoremVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.predicted {
            Verdict::Consistent | Verdict::SufficientOnlyConsistent => "Consistent",
            Verdict::Inconsistent => "Inconsistent",
            Verdict::Unknown => "Unknown",
        };
        let suffix = if self.theorem == Theorem::T4ZellnerSiow { " sufficient only" } else { "" };
        write!(f, "{label} (Theorem {}{suffix})", self.theorem.number())
    }
}

/// The experiment grid extended by `10 n_max` and `100 n_max`, so that limits
/// are judged beyond the simulated range.
pub fn theorem_grid(n_grid: &[usize]) -> Vec<usize> {
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if let Some(&max) = grid.last() {
        grid.push(max * 10);
        grid.push(max * 100);
    }
    grid
}

fn gap_traces(scenario: &Scenario, grid: &[usize]) -> (ConditionTrace, ConditionTrace) {
    let (sq, sup): (Vec<f64>, Vec<f64>) = grid.iter().map(|&n| scenario.gap_norms(n)).unzip();
    (
        ConditionTrace::new("||gamma - beta0||_2^2", grid, sq),
        ConditionTrace::new("||gamma - beta0||_inf", grid, sup),
    )
}

/// Fixed `g_n`: consistent iff `||gamma - beta0||_inf / (g_n + 1) -> 0` and
/// `g_n (g_n + 1)^{-2} (log p_n / n) ||gamma - beta0||_2^2 -> 0`.
pub fn evaluate_theorem1(scenario: &Scenario, n_grid: &[usize]) -> Result<TheoremVerdict> {
    let GRegime::Fixed { rule } = scenario.regime else {
        return Err(Error::Config(format!("Theorem 1 needs a fixed g sequence, scenario uses {}", scenario.regime)));
    };
    let grid = theorem_grid(n_grid);
    let mut c1 = Vec::with_capacity(grid.len());
    let mut c2 = Vec::with_capacity(grid.len());
    for &n in &grid {
        let p = scenario.p_at(n);
        let g = rule.at(n, p);
        let (sq, sup) = scenario.gap_norms(n);
        c1.push(sup / (g + 1.0));
        c2.push(g / (g + 1.0).powi(2) * (p as f64).ln() / n as f64 * sq);
    }
    let c1 = ConditionTrace::new("||gamma - beta0||_inf / (g_n + 1)", &grid, c1);
    let c2 = ConditionTrace::new("g_n (g_n + 1)^-2 (log p_n / n) ||gamma - beta0||_2^2", &grid, c2);
    let bad = |l: Limit| matches!(l, Limit::ToPositive | Limit::Diverging);
    let predicted = if c1.limit == Limit::ToZero && c2.limit == Limit::ToZero {
        Verdict::Consistent
    } else if bad(c1.limit) || bad(c2.limit) {
        Verdict::Inconsistent
    } else {
        Verdict::Unknown
    };
    Ok(TheoremVerdict { theorem: Theorem::T1NonHierarchical, predicted, evidence: vec![c1, c2] })
}

/// Hierarchical regimes: the posterior fails to be consistent exactly when
/// `alpha > 0` and some subsequence has `||gamma - beta0||_2^2` converging to
/// a finite limit while `||gamma - beta0||_inf` stays away from zero. For the
/// Zellner-Siow prior only the sufficient direction is known.
pub fn evaluate_subsequence_condition(scenario: &Scenario, n_grid: &[usize], theorem: Theorem) -> Result<TheoremVerdict> {
    if theorem == Theorem::T1NonHierarchical || !theorem.matches(&scenario.regime) {
        return Err(Error::Config(format!(
            "Theorem {} does not apply to regime {}",
            theorem.number(),
            scenario.regime
        )));
    }
    let grid = theorem_grid(n_grid);
    let (s, m) = gap_traces(scenario, &grid);
    let consistent = if theorem == Theorem::T4ZellnerSiow { Verdict::SufficientOnlyConsistent } else { Verdict::Consistent };
    let failing = if theorem == Theorem::T4ZellnerSiow { Verdict::Unknown } else { Verdict::Inconsistent };
    let predicted = if scenario.alpha == 0.0 {
        consistent
    } else if s.limit == Limit::ToPositive && m.limit == Limit::ToPositive {
        failing
    } else if matches!(s.limit, Limit::ToZero | Limit::Diverging) || m.limit == Limit::ToZero {
        consistent
    } else {
        Verdict::Unknown
    };
    Ok(TheoremVerdict { theorem, predicted, evidence: vec![s, m] })
}

/// Dispatches on the scenario's regime.
pub fn evaluate_theorem(scenario: &Scenario, n_grid: &[usize]) -> Result<TheoremVerdict> {
    match Theorem::for_regime(&scenario.regime) {
        Theorem::T1NonHierarchical => evaluate_theorem1(scenario, n_grid),
        t => evaluate_subsequence_condition(scenario, n_grid, t),
    }
}
