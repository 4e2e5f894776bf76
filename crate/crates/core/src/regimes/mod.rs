//! The four ways of choosing `g`: a known sequence `g_n`, the empirical-Bayes
//! maximiser of the marginal likelihood, the hyper-g prior and the
//! Zellner-Siow prior.
//!
//! Hierarchical posteriors are handled through the change of variables
//! `u = (g+1)(S+b) / ((g+1)(S+b) + T)`, which maps `g >= 0` onto `[W_n, 1)`.

mod likelihood;
mod posterior;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::rules::{arity, number, parse_call};
use crate::model::PriorConstants;

pub use likelihood::GLikelihood;
pub use posterior::{build_g_posterior, GPosterior, DEFAULT_GRID_SIZE};

/// A deterministic sequence `n -> g_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GRule {
    /// `g_n = n`, the unit-information choice.
    N,
    Constant(f64),
    /// `g_n = n^k`.
    Power(f64),
    /// `g_n = max(n, p_n^2)`.
    MaxNPSq,
}

impl GRule {
    pub fn at(&self, n: usize, p: usize) -> f64 {
        match *self {
            GRule::N => n as f64,
            GRule::Constant(v) => v,
            GRule::Power(k) => (n as f64).powf(k),
            GRule::MaxNPSq => f64::max(n as f64, (p as f64).powi(2)),
        }
    }
}

impl FromStr for GRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        let rule = match name.as_str() {
            "n" => {
                arity("n", &args, 0)?;
                GRule::N
            }
            "max_n_p_sq" => {
                arity("max_n_p_sq", &args, 0)?;
                GRule::MaxNPSq
            }
            "constant" => {
                arity("constant", &args, 1)?;
                let v = number("constant", &args[0])?;
                if v < 0.0 {
                    return Err(Error::Config(format!("g rule constant({v}) must be >= 0")));
                }
                GRule::Constant(v)
            }
            "power" => {
                arity("power", &args, 1)?;
                GRule::Power(number("power", &args[0])?)
            }
            other => match other.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() && args.is_empty() => GRule::Constant(v),
                _ => return Err(Error::Config(format!("unknown g rule {s:?}"))),
            },
        };
        Ok(rule)
    }
}

impl fmt::Display for GRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GRule::N => f.write_str("n"),
            GRule::Constant(v) => write!(f, "constant({v})"),
            GRule::Power(k) => write!(f, "power({k})"),
            GRule::MaxNPSq => f.write_str("max_n_p_sq"),
        }
    }
}

impl TryFrom<String> for GRule {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GRule> for String {
    fn from(r: GRule) -> Self {
        r.to_string()
    }
}

impl Serialize for GRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_c() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GRegime {
    Fixed {
        rule: GRule,
    },
    #[serde(rename = "eb")]
    EmpiricalBayes,
    /// `pi(g) ∝ (g+1)^{-c/2}`.
    HyperG {
        #[serde(default = "default_c")]
        c: f64,
    },
    #[serde(rename = "zs")]
    ZellnerSiow,
}

impl GRegime {
    pub fn fixed(rule: GRule) -> Self {
        GRegime::Fixed { rule }
    }

    pub fn hyper_g() -> Self {
        GRegime::HyperG { c: default_c() }
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self, GRegime::HyperG { .. } | GRegime::ZellnerSiow)
    }

    pub fn validate_static(&self) -> Result<()> {
        match self {
            GRegime::HyperG { c } if !c.is_finite() => Err(Error::Config(format!("hyper-g c must be finite, got {c}"))),
            GRegime::Fixed { rule: GRule::Constant(v) } if !(*v >= 0.0 && v.is_finite()) => {
                Err(Error::Config(format!("fixed g must be finite and >= 0, got {v}")))
            }
            GRegime::Fixed { rule: GRule::Power(k) } if !k.is_finite() => {
                Err(Error::Config(format!("power exponent must be finite, got {k}")))
            }
            _ => Ok(()),
        }
    }

    /// Checks that the regime yields a well-defined posterior at `(n, p)`.
    pub fn validate_at(&self, n: usize, p: usize, prior: &PriorConstants) -> Result<()> {
        let (nf, pf) = (n as f64, p as f64);
        match *self {
            GRegime::Fixed { rule } => {
                let g = rule.at(n, p);
                if !(g >= 0.0 && g.is_finite()) {
                    return Err(Error::Config(format!("g rule {rule} gives g = {g} at n = {n}")));
                }
            }
            GRegime::EmpiricalBayes => {
                if nf - pf + prior.a - 2.0 <= 0.0 {
                    return Err(Error::Config(format!(
                        "empirical Bayes needs n - p + a - 2 > 0; got {n} - {p} + {} - 2 <= 0",
                        prior.a
                    )));
                }
            }
            GRegime::HyperG { c } => {
                if (pf + c - 2.0) / 2.0 <= 0.0 {
                    return Err(Error::Config(format!("hyper-g needs (p + c - 2)/2 > 0; got p = {p}, c = {c}")));
                }
                if (nf - pf + prior.a - c) / 2.0 <= 0.0 {
                    return Err(Error::Config(format!(
                        "hyper-g needs (n - p + a - c)/2 > 0; got n = {n}, p = {p}, a = {}, c = {c}",
                        prior.a
                    )));
                }
            }
            GRegime::ZellnerSiow => {}
        }
        Ok(())
    }
}

impl fmt::Display for GRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GRegime::Fixed { rule } => write!(f, "fixed({rule})"),
            GRegime::EmpiricalBayes => f.write_str("eb"),
            GRegime::HyperG { c } => write!(f, "hyper_g({c})"),
            GRegime::ZellnerSiow => f.write_str("zs"),
        }
    }
}
