use serde::{Deserialize, Serialize};

/// Heuristic limit of a deterministic sequence sampled on an increasing grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    ToZero,
    ToPositive,
    Diverging,
    Unknown,
}

/// Needs at least four points; oscillating sequences are `Unknown`.
pub fn classify_limit(values: &[f64]) -> Limit {
    let k = values.len();
    if k < 4 || values.iter().any(|v| !v.is_finite()) {
        return Limit::Unknown;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale.max(1e-300);
    let signs: Vec<i8> = diffs
        .iter()
        .filter(|d| d.abs() > tol)
        .map(|d| if *d > 0.0 { 1 } else { -1 })
        .collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if sign_changes >= 2 {
        return Limit::Unknown;
    }
    let (first, last) = (values[0], values[k - 1]);
    let tail3 = &values[k - 3..];
    if last.abs() < 1e-3 * (1.0 + first.abs()) && tail3.windows(2).all(|w| w[1] <= w[0] + tol) {
        return Limit::ToZero;
    }
    let half = values[(k - 1) / 2];
    let rel = (last - half).abs() / last.abs().max(half.abs()).max(1e-300);
    if rel < 0.02 && last > 1e-3 {
        return Limit::ToPositive;
    }
    if last > 10.0 * first.abs() && last > 0.0 && diffs[diffs.len() - 1] > 0.0 {
        return Limit::Diverging;
    }
    Limit::Unknown
}

/// Empirical behaviour of the median ball probability along the n grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    VanishingTrend,
    BoundedAway,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendThresholds {
    pub vanish: f64,
    pub floor: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        Self { vanish: 0.05, floor: 0.1 }
    }
}

pub fn classify_trend(medians: &[f64], th: &TrendThresholds) -> Trend {
    if medians.len() < 2 {
        return Trend::Indeterminate;
    }
    let last = medians[medians.len() - 1];
    if medians.windows(2).all(|w| w[1] <= w[0]) && last < th.vanish {
        return Trend::VanishingTrend;
    }
    let second_half = &medians[medians.len() / 2..];
    if last > th.floor && second_half.iter().all(|&m| m >= th.floor) {
        return Trend::BoundedAway;
    }
    Trend::Indeterminate
}
