//! n-sweeps of scenarios: ball-probability experiments, theorem verdicts,
//! limit and trend classification, and lemma verifiers.

mod classify;
mod experiment;
mod lemmas;
mod theorem;

pub use classify::{classify_limit, classify_trend, Limit, Trend, TrendThresholds};
pub use experiment::{
    run_experiment, CellRecord, EpsSummary, ExperimentConfig, ExperimentReport, CSV_HEADER, DEFAULT_EPS_GRID,
    DEFAULT_N_GRID, DEFAULT_REPS, EXPERIMENT_GRID_SIZE,
};
pub use lemmas::{
    verify_lemmas, LemmaConfig, LemmaId, LemmaOutcome, LemmaReport, LemmaStatus, DEFAULT_LEMMA_GRID, DEFAULT_LEMMA_REPS,
};
pub use theorem::{
    evaluate_subsequence_condition, evaluate_theorem, evaluate_theorem1, theorem_grid, ConditionTrace, Theorem,
    TheoremVerdict, Verdict,
};
