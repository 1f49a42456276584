//! Spectral theory of M(d) processes and of their wavelet coefficients.

mod asymptotic;
mod density;
mod functional;
mod model;
mod rates;

pub use asymptotic::{
    asymptotic_density_integral, asymptotic_norm_sq, cross_density_asymptotic, density_domain, k_constant,
    k_domain, K_TOLERANCE, TAIL_BOUND,
};
pub use density::{
    cross_density_exact, e_u, variance_sigma2, wavelet_cov, within_scale_autocov, DensityGrid,
    COVARIANCE_TOLERANCE,
};
pub use functional::{empvar_cov_prediction, mn_functional, mn_grid_size};
pub use model::{fbm_factor, fgn_constant, MemoryModel, ShortMemory};
pub use rates::{rate_check, RateCheck};
