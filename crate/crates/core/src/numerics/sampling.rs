//! Samplers used by the simulation and Monte Carlo paths.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Chi-square via the gamma sampler.
pub fn sample_chi_square<R: Rng + ?Sized>(rng: &mut R, df: f64) -> Result<f64> {
    let dist = ChiSquared::new(df)
        .map_err(|_| Error::Domain(format!("chi-square degrees of freedom must be positive, got {df}")))?;
    Ok(dist.sample(rng))
}

/// `InverseGamma(shape, scale)` as `scale / Gamma(shape, 1)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("inverse-gamma scale must be positive, got {scale}")));
    }
    let dist = Gamma::new(shape, 1.0)
        .map_err(|_| Error::Domain(format!("inverse-gamma shape must be positive, got {shape}")))?;
    Ok(scale / dist.sample(rng))
}

/// Noncentral chi-square with `df` degrees of freedom and noncentrality
/// `nu` in the Poisson-rate convention, so that the mean is `df + 2 nu`.
///
/// For `df >= 1` this is `chi2(df - 1) + (Z + sqrt(2 nu))^2`; below that the
/// Poisson mixture `chi2(df + 2K)`, `K ~ Poisson(nu)`, is used.
pub fn sample_noncentral_chi_square<R: Rng + ?Sized>(rng: &mut R, df: f64, nu: f64) -> Result<f64> {
    if !(df > 0.0) || !(nu >= 0.0) {
        return Err(Error::Domain(format!(
            "noncentral chi-square needs df > 0 and nu >= 0, got ({df}, {nu})"
        )));
    }
    if df >= 1.0 {
        let shifted = sample_normal(rng) + (2.0 * nu).sqrt();
        let central = if df > 1.0 { sample_chi_square(rng, df - 1.0)? } else { 0.0 };
        Ok(central + shifted * shifted)
    } else {
        let k = if nu > 0.0 {
            let pois: f64 = Poisson::new(nu)
                .map_err(|_| Error::Domain(format!("bad Poisson rate {nu}")))?
                .sample(rng);
            pois
        } else {
            0.0
        };
        sample_chi_square(rng, df + 2.0 * k)
    }
}
