//! Special functions, samplers, descriptive statistics and keyed RNG streams.

mod rng;
pub mod sampling;
pub mod special;
pub mod stats;

pub use rng::{fnv1a, Purpose, RngStream, StreamPath};
pub use sampling::{sample_chi_square, sample_inverse_gamma, sample_noncentral_chi_square, sample_normal};
pub use special::{
    beta_cdf, beta_sf, beta_tail_bound_check, gamma_quantile, inverse_gamma_cdf, inverse_gamma_quantile,
    log_beta, log_beta_cdf, log_beta_pdf, log_gamma, log_sum_exp, normal_cdf, normal_sf, BetaTailCheck,
};
