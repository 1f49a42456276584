//! The triangular-weighted norm M_n(g) and the covariance of empirical
//! scale variances it predicts for Gaussian processes.

use super::density::{cross_density_exact, DensityGrid};
use super::model::MemoryModel;
use crate::error::{Error, Result};
use crate::wavelet_basis::FilterBank;

/// Grid size used for M_n: a power of two of at least max(4096, 4n).
pub fn mn_grid_size(n: usize) -> usize {
    (4 * n).max(4096).next_power_of_two()
}

/// M_n(g) = { Σ_{|k|<n} (1 - |k|/n) |c_k|² }^{1/2}, c_k = ∫ g(λ) e^{ikλ} dλ,
/// with the c_k taken from the grid samples by a discrete transform.
pub fn mn_functional(grid: &DensityGrid, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("M_n needs n ≥ 1".into()));
    }
    let g = grid.len();
    if g < 2 * n {
        return Err(Error::GridTooCoarse { grid: g, n });
    }
    let coeffs = grid.fourier_coefficients();
    let mut total = 0.0;
    for c in &coeffs {
        total += c[0].norm_sqr();
        for k in 1..n {
            let w = 1.0 - k as f64 / n as f64;
            total += w * (c[k].norm_sqr() + c[g - k].norm_sqr());
        }
    }
    Ok(total.sqrt())
}

/// Predicted Cov(σ̂²_j, σ̂²_{j-u}) = (2 / n_{j-u}) M²_{n_j}(D_{j,u}) for a
/// Gaussian process, where the finer empirical variance sums the
/// 2^u n_j coefficients W_{j-u, 2^u k + v}, k < n_j.
pub fn empvar_cov_prediction(
    model: &MemoryModel,
    bank: &FilterBank,
    j: usize,
    u: usize,
    n_j: usize,
    n_ju: usize,
) -> Result<f64> {
    if n_j == 0 || n_ju == 0 {
        return Err(Error::InvalidArgument("scale counts must be positive".into()));
    }
    let grid = DensityGrid::sample(mn_grid_size(n_j), |l| cross_density_exact(model, bank, j, u, l))?;
    let mn = mn_functional(&grid, n_j)?;
    Ok(2.0 * mn * mn / n_ju as f64)
}
