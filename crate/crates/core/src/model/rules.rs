//! Closed vocabulary of parametric families for `beta0`, `gamma`, `p_n` and
//! fixed `g_n` sequences, written in scenario files as short call strings
//! such as `"first_m(1, 3)"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn parse_call(text: &str) -> Result<(String, Vec<String>)> {
    let text = text.trim();
    match text.find('(') {
        None => Ok((text.to_string(), Vec::new())),
        Some(open) => {
            if !text.ends_with(')') {
                return Err(Error::Config(format!("unbalanced parentheses in rule {text:?}")));
            }
            let name = text[..open].trim().to_string();
            let inner = &text[open + 1..text.len() - 1];
            let args = inner.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
            Ok((name, args))
        }
    }
}

pub(crate) fn number(rule: &str, arg: &str) -> Result<f64> {
    arg.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("rule {rule}: expected a number, got {arg:?}")))
}

pub(crate) fn arity(rule: &str, args: &[String], expected: usize) -> Result<()> {
    if args.len() != expected {
        return Err(Error::Config(format!("rule {rule} takes {expected} argument(s), got {}", args.len())));
    }
    Ok(())
}

/// A target that is either a constant or `n^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Magnitude {
    Constant(f64),
    PowerOfN(f64),
}

impl Magnitude {
    pub fn at(self, n: usize) -> f64 {
        match self {
            Magnitude::Constant(v) => v,
            Magnitude::PowerOfN(k) => (n as f64).powf(k),
        }
    }
}

impl FromStr for Magnitude {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(k) = s.strip_prefix("n^") {
            Ok(Magnitude::PowerOfN(number("n^k", k)?))
        } else if s == "n" {
            Ok(Magnitude::PowerOfN(1.0))
        } else {
            Ok(Magnitude::Constant(number("magnitude", s)?))
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Constant(v) => write!(f, "{v}"),
            Magnitude::PowerOfN(k) => write!(f, "n^{k}"),
        }
    }
}

/// Rule producing a coefficient vector of length `p_n` at sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum VectorRule {
    Zeros,
    Constant(f64),
    /// First `m` coordinates equal to `value`, the rest zero.
    FirstM { value: f64, m: usize },
    /// Every coordinate equal, scaled so that the squared l2 norm hits the target.
    ScaledNorm(Magnitude),
    /// Coordinate `i` (1-based) equals `c * i^(-rate)`.
    Decaying { c: f64, rate: f64 },
}

impl VectorRule {
    pub fn vector(&self, n: usize, p: usize) -> Vec<f64> {
        match *self {
            VectorRule::Zeros => vec![0.0; p],
            VectorRule::Constant(v) => vec![v; p],
            VectorRule::FirstM { value, m } => (0..p).map(|i| if i < m { value } else { 0.0 }).collect(),
            VectorRule::ScaledNorm(target) => {
                let target = target.at(n).max(0.0);
                vec![(target / p as f64).sqrt(); p]
            }
            VectorRule::Decaying { c, rate } => (0..p).map(|i| c * ((i + 1) as f64).powf(-rate)).collect(),
        }
    }
}

impl FromStr for VectorRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        match name.as_str() {
            "zeros" => {
                arity("zeros", &args, 0)?;
                Ok(VectorRule::Zeros)
            }
            "constant" => {
                arity("constant", &args, 1)?;
                Ok(VectorRule::Constant(number("constant", &args[0])?))
            }
            "first_m" => {
                arity("first_m", &args, 2)?;
                let m = number("first_m", &args[1])?;
                if m < 0.0 || m.fract() != 0.0 {
                    return Err(Error::Config(format!("first_m: m must be a non-negative integer, got {m}")));
                }
                Ok(VectorRule::FirstM { value: number("first_m", &args[0])?, m: m as usize })
            }
            "scaled_norm" => {
                arity("scaled_norm", &args, 1)?;
                let target: Magnitude = args[0].parse()?;
                if let Magnitude::Constant(v) = target {
                    if v < 0.0 {
                        return Err(Error::Config("scaled_norm: target must be non-negative".into()));
                    }
                }
                Ok(VectorRule::ScaledNorm(target))
            }
            "decaying" => {
                arity("decaying", &args, 2)?;
                Ok(VectorRule::Decaying { c: number("decaying", &args[0])?, rate: number("decaying", &args[1])? })
            }
            other => Err(Error::Config(format!(
                "unknown vector rule {other:?} (expected zeros, constant, first_m, scaled_norm or decaying)"
            ))),
        }
    }
}

impl fmt::Display for VectorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorRule::Zeros => write!(f, "zeros"),
            VectorRule::Constant(v) => write!(f, "constant({v})"),
            VectorRule::FirstM { value, m } => write!(f, "first_m({value}, {m})"),
            VectorRule::ScaledNorm(t) => write!(f, "scaled_norm({t})"),
            VectorRule::Decaying { c, rate } => write!(f, "decaying({c}, {rate})"),
        }
    }
}

impl TryFrom<String> for VectorRule {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<VectorRule> for String {
    fn from(rule: VectorRule) -> Self {
        rule.to_string()
    }
}

/// How `p_n` grows with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PRule {
    /// `max(1, floor(alpha n))`, capped at `n - 1`.
    #[default]
    Linear,
    /// `ceil(n^k)` with `0 < k < 1`, capped at `n - 1`; pairs with `alpha = 0`.
    CeilPower(f64),
}

impl PRule {
    pub fn p_at(&self, alpha: f64, n: usize) -> usize {
        let raw = match *self {
            PRule::Linear => (alpha * n as f64).floor() as usize,
            PRule::CeilPower(k) => (n as f64).powf(k).ceil() as usize,
        };
        raw.max(1).min(n.saturating_sub(1))
    }
}

impl FromStr for PRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        match name.as_str() {
            "linear" => {
                arity("linear", &args, 0)?;
                Ok(PRule::Linear)
            }
            "ceil_power" => {
                arity("ceil_power", &args, 1)?;
                let k = number("ceil_power", &args[0])?;
                if !(k > 0.0 && k < 1.0) {
                    return Err(Error::Config(format!("ceil_power exponent must lie in (0, 1), got {k}")));
                }
                Ok(PRule::CeilPower(k))
            }
            other => Err(Error::Config(format!("unknown p rule {other:?} (expected linear or ceil_power(k))"))),
        }
    }
}

impl fmt::Display for PRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PRule::Linear => write!(f, "linear"),
            PRule::CeilPower(k) => write!(f, "ceil_power({k})"),
        }
    }
}

impl TryFrom<String> for PRule {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<PRule> for String {
    fn from(rule: PRule) -> Self {
        rule.to_string()
    }
}
