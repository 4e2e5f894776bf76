use rand::Rng;

use super::{GLikelihood, GRegime};
use crate::error::{Error, Result};
use crate::numerics::log_sum_exp;

pub const DEFAULT_GRID_SIZE: usize = 512;
const MIN_GRID_SIZE: usize = 16;
/// Log-density drop at which the grid is truncated.
const TAIL_DROP: f64 = 50.0;
const X_LIMIT: f64 = 600.0;

/// Marginal posterior of `g`: a point mass for the plug-in regimes, a
/// normalised quadrature grid for the hierarchical ones.
#[derive(Debug, Clone)]
pub struct GPosterior {
    regime: GRegime,
    lik: GLikelihood,
    support: Support,
}

#[derive(Debug, Clone)]
enum Support {
    PointMass(f64),
    Grid(Grid),
}

/// Nodes are uniform in a variable `t` with `ln g = warp(t)`; `u_j = u(g_j)`
/// lies strictly inside `(W_n, 1)`.
#[derive(Debug, Clone)]
struct Grid {
    warp: Warp,
    step: f64,
    t: Vec<f64>,
    g: Vec<f64>,
    log_weights: Vec<f64>,
    /// Density in `t`, normalised so that its trapezoid integral is 1.
    density: Vec<f64>,
    cdf: Vec<f64>,
}

/// `x(t) = t - s e^{-(t - lo)/s} + s e^{(t - hi)/s}`: the identity around
/// the mode, doubly exponential in the tails. In `ln g` the hyper-g density
/// only decays like `g` as `g -> 0`, which would otherwise waste most nodes.
#[derive(Debug, Clone, Copy)]
struct Warp {
    s: f64,
    lo: f64,
    hi: f64,
}

impl Warp {
    fn x(&self, t: f64) -> f64 {
        t - self.s * (-(t - self.lo) / self.s).exp() + self.s * ((t - self.hi) / self.s).exp()
    }

    fn log_dx(&self, t: f64) -> f64 {
        (1.0 + (-(t - self.lo) / self.s).exp() + ((t - self.hi) / self.s).exp()).ln()
    }
}

impl GPosterior {
    pub fn regime(&self) -> GRegime {
        self.regime
    }

    pub fn likelihood(&self) -> &GLikelihood {
        &self.lik
    }

    pub fn point_mass(&self) -> Option<f64> {
        match self.support {
            Support::PointMass(g) => Some(g),
            Support::Grid(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match &self.support {
            Support::PointMass(_) => 1,
            Support::Grid(grid) => grid.g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(g_j, w_j)` pairs with weights summing to one.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match &self.support {
            Support::PointMass(g) => vec![(*g, 1.0)],
            Support::Grid(grid) => grid.g.iter().zip(&grid.log_weights).map(|(&g, &lw)| (g, lw.exp())).collect(),
        }
    }

    pub fn log_weights(&self) -> Vec<f64> {
        match &self.support {
            Support::PointMass(_) => vec![0.0],
            Support::Grid(grid) => grid.log_weights.clone(),
        }
    }

    /// Quadrature nodes mapped to `u`.
    pub fn u_nodes(&self) -> Vec<f64> {
        self.nodes().into_iter().map(|(g, _)| self.lik.u_of_g(g)).collect()
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        match &self.support {
            Support::PointMass(g) => f(*g),
            Support::Grid(grid) => grid.g.iter().zip(&grid.log_weights).map(|(&g, &lw)| lw.exp() * f(g)).sum(),
        }
    }

    /// Inverse-CDF draw of `g`, exact for the piecewise-linear density in `ln g`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.support {
            Support::PointMass(g) => *g,
            Support::Grid(grid) => grid.sample(rng.random::<f64>()),
        }
    }
}

impl Grid {
    fn sample(&self, v: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c <= v).clamp(1, self.cdf.len() - 1) - 1;
        let r = (v - self.cdf[k]).max(0.0);
        let (f0, f1) = (self.density[k], self.density[k + 1]);
        let slope = (f1 - f0) / self.step;
        let t = if slope.abs() * r < 1e-12 * f0 * f0 {
            if f0 > 0.0 {
                r / f0
            } else {
                0.0
            }
        } else {
            let disc = (f0 * f0 + 2.0 * slope * r).max(0.0);
            2.0 * r / (f0 + disc.sqrt())
        };
        self.warp.x(self.t[k] + t.clamp(0.0, self.step)).exp()
    }
}

/// Log posterior density of `x = ln g` for a hierarchical regime.
fn log_density_x(regime: GRegime, lik: &GLikelihood, x: f64) -> f64 {
    let g = x.exp();
    let (lu, l1u) = lik.log_u_pair(g);
    let (n, p, a) = (lik.n as f64, lik.p as f64, lik.a);
    let jac = x + lu + l1u - g.ln_1p();
    let body = match regime {
        GRegime::HyperG { c } => (n - p + a - c - 2.0) / 2.0 * lu + (p + c - 4.0) / 2.0 * l1u,
        GRegime::ZellnerSiow => (n - p + a - 2.0) / 2.0 * lu + (p - 4.0) / 2.0 * l1u - 1.5 * x - n / (2.0 * g),
        _ => unreachable!("point-mass regimes have no density"),
    };
    let v = body + jac;
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-10 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

/// Builds the marginal posterior of `g` under `regime`.
pub fn build_g_posterior(regime: GRegime, lik: &GLikelihood, grid_size: usize) -> Result<GPosterior> {
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::Config(format!("grid_size must be >= {MIN_GRID_SIZE}, got {grid_size}")));
    }
    let support = match regime {
        GRegime::Fixed { rule } => Support::PointMass(rule.at(lik.n, lik.p)),
        GRegime::EmpiricalBayes => Support::PointMass(lik.eb_ghat()?),
        GRegime::HyperG { .. } | GRegime::ZellnerSiow => Support::Grid(build_grid(regime, lik, grid_size)?),
    };
    Ok(GPosterior { regime, lik: *lik, support })
}

fn build_grid(regime: GRegime, lik: &GLikelihood, grid_size: usize) -> Result<Grid> {
    let w_n = lik.w_n();
    if !(lik.t_n > 0.0 && lik.s_plus_b > 0.0) {
        return Err(Error::DegeneratePosterior { w_n });
    }
    let h = |x: f64| log_density_x(regime, lik, x);

    let coarse = 0.25;
    let steps = (2.0 * X_LIMIT / 2.0 / coarse) as i64;
    let (mut best_x, mut best) = (0.0, f64::NEG_INFINITY);
    for i in -steps..=steps {
        let x = i as f64 * coarse;
        let v = h(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    if !best.is_finite() {
        return Err(Error::DegeneratePosterior { w_n });
    }
    let mode = golden_max(h, best_x - coarse, best_x + coarse);
    let h_max = h(mode).max(best);

    // Curvature scale of h at the mode.
    let mut s = 1.0;
    let mut delta = 1e-2;
    for _ in 0..4 {
        let curv = (h(mode + delta) - 2.0 * h_max + h(mode - delta)) / (delta * delta);
        s = if curv < 0.0 { (-curv).sqrt().recip() } else { 1.0 };
        s = s.clamp(1e-5, 20.0);
        if delta <= s / 10.0 {
            break;
        }
        delta = s / 10.0;
    }
    let warp = Warp { s, lo: mode - 4.0 * s, hi: mode + 4.0 * s };
    let ht = |t: f64| {
        let x = warp.x(t);
        if x.abs() > X_LIMIT {
            f64::NEG_INFINITY
        } else {
            h(x) + warp.log_dx(t)
        }
    };

    let mut bounds = [0.0; 2];
    for (slot, side) in bounds.iter_mut().zip([-1.0, 1.0]) {
        let mut d = s / 8.0;
        loop {
            let t = mode + side * d;
            if warp.x(t).abs() > X_LIMIT && h(side * X_LIMIT) >= h_max - TAIL_DROP {
                return Err(Error::DegeneratePosterior { w_n });
            }
            if ht(t) < h_max - TAIL_DROP {
                *slot = t;
                break;
            }
            d *= 1.25;
        }
    }

    let [lo, hi] = bounds;
    let step = (hi - lo) / (grid_size - 1) as f64;
    let t: Vec<f64> = (0..grid_size).map(|j| lo + j as f64 * step).collect();
    let logf: Vec<f64> = t.iter().map(|&t| ht(t) - h_max).collect();
    let log_trap: Vec<f64> = logf
        .iter()
        .enumerate()
        .map(|(j, &lf)| if j == 0 || j + 1 == grid_size { lf + 0.5f64.ln() } else { lf })
        .collect();
    let log_norm = log_sum_exp(&log_trap)?;
    let log_weights: Vec<f64> = log_trap.iter().map(|lw| lw - log_norm).collect();

    let mass = log_norm.exp() * step;
    let density: Vec<f64> = logf.iter().map(|lf| lf.exp() / mass).collect();
    let mut cdf = Vec::with_capacity(grid_size);
    cdf.push(0.0);
    for j in 1..grid_size {
        let prev = cdf[j - 1];
        cdf.push(prev + step * (density[j - 1] + density[j]) / 2.0);
    }
    let total = *cdf.last().expect("grid is nonempty");
    for c in cdf.iter_mut() {
        *c /= total;
    }
    let g = t.iter().map(|&t| warp.x(t).exp()).collect();
    Ok(Grid { warp, step, t, g, log_weights, density, cdf })
}
