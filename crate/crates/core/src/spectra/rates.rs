//! Normalized approximation errors of the scale variances and within-scale
//! densities by their large-scale limits.

use serde::Serialize;

use super::asymptotic::{cross_density_asymptotic, k_constant};
use super::density::{cross_density_exact, variance_sigma2};
use super::model::MemoryModel;
use crate::error::Result;
use crate::wavelet_basis::{FilterBank, FrequencyDescriptor};

/// Errors at scale `j`, both multiplied by 2^{-(2d-β)j}:
/// `variance_error` = |σ²_j - f*(0) K(ψ,d) 2^{2jd}|,
/// `density_error` = sup_λ |D_{j,0}(λ) - f*(0) D_{∞,0}(λ;d) 2^{2jd}|.
#[derive(Debug, Clone, Serialize)]
pub struct RateCheck {
    pub j: usize,
    pub sigma2: f64,
    pub limit: f64,
    pub variance_error: f64,
    pub density_error: f64,
    /// Quadrature and truncation error carried into `variance_error`.
    pub numerical_error: f64,
}

pub fn rate_check(
    model: &MemoryModel,
    desc: &dyn FrequencyDescriptor,
    bank: &FilterBank,
    j: usize,
    grid: usize,
) -> Result<RateCheck> {
    let d = model.d;
    let f0 = model.fstar_at_zero();
    let growth = 2f64.powf(2.0 * d * j as f64);
    let norm = 2f64.powf(-(2.0 * d - model.beta()) * j as f64);
    let sigma2 = variance_sigma2(model, bank, j)?;
    let k = k_constant(desc, d)?;
    let limit = f0 * k.value * growth;
    // midpoints of (0, π); the densities are even in λ
    let mut sup: f64 = 0.0;
    for m in 0..grid {
        let lambda = std::f64::consts::PI * (m as f64 + 0.5) / grid as f64;
        let exact = cross_density_exact(model, bank, j, 0, lambda)?[0].re;
        let asym = cross_density_asymptotic(desc, d, 0, lambda)?[0].re;
        sup = sup.max((exact - f0 * growth * asym).abs());
    }
    Ok(RateCheck {
        j,
        sigma2: sigma2.value,
        limit,
        variance_error: (sigma2.value - limit).abs() * norm,
        density_error: sup * norm,
        numerical_error: (sigma2.error + f0 * growth * k.error) * norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet_basis::WaveletFamily;

    #[test]
    fn relative_error_shrinks_with_scale() {
        let fam = WaveletFamily::bspline(2).unwrap();
        let bank = fam.filter_bank(7).unwrap();
        let model = MemoryModel::fgn(0.7).unwrap();
        let rel: Vec<f64> = [3, 5, 7]
            .iter()
            .map(|&j| {
                let r = rate_check(&model, &fam, &bank, j, 64).unwrap();
                (r.sigma2 / r.limit - 1.0).abs()
            })
            .collect();
        assert!(rel[2] < rel[1] && rel[1] < rel[0], "{rel:?}");
    }
}
