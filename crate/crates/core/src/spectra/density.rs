//! Exact second-order structure of the wavelet coefficients of an M(d)
//! process.
//!
//! Every integrand is written in the stabilized form
//! `|1 - e^{-iλ}|^{2(M-d)} f*(λ) H̃_j(λ) conj H̃_{j'}(λ)`, which is bounded
//! for d ≤ M and has only an integrable singularity for d < M + 1/2.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::model::MemoryModel;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_breaks, Integral, Tolerance};
use crate::wavelet_basis::FilterBank;

/// Relative accuracy requested from every covariance quadrature.
pub const COVARIANCE_TOLERANCE: f64 = 1e-10;

/// Panel edges on [0, π]: `panels` uniform panels, the first one split
/// geometrically towards 0 to absorb the |λ|^{2(M-d)} behaviour.
fn breaks(panels: usize) -> Vec<f64> {
    let h = PI / panels as f64;
    let mut b: Vec<f64> = (0..40).rev().map(|k| h * 0.5f64.powi(k)).collect();
    b.insert(0, 0.0);
    b.extend((2..=panels).map(|k| h * k as f64));
    b
}

fn panel_count(j: usize, j2: usize, tau: i64) -> usize {
    (4usize << j.max(j2)) + (tau.unsigned_abs() as usize) / 2 + 8
}

fn cov_integral(
    model: &MemoryModel,
    bank: &FilterBank,
    j: usize,
    j2: usize,
    tau: i64,
    tol: Tolerance,
) -> Result<Integral> {
    let m = bank.vanishing_moments();
    model.require_moments(m)?;
    if model.d >= m as f64 + 0.5 {
        return Err(Error::MemoryOutOfRange {
            d: model.d,
            lower: f64::NEG_INFINITY,
            upper: m as f64 + 0.5,
        });
    }
    let f1 = bank.scale(j)?;
    let f2 = bank.scale(j2)?;
    let integrand = |l: f64| {
        let h = f1.reduced_transfer(l) * f2.reduced_transfer(l).conj();
        let phase = Complex64::from_polar(1.0, l * tau as f64);
        2.0 * model.differenced_density(m, l) * (phase * h).re
    };
    integrate_breaks(integrand, &breaks(panel_count(j, j2, tau)), tol)
}

/// Var W_{j,0} = ∫ f |H_j|².
pub fn variance_sigma2(model: &MemoryModel, bank: &FilterBank, j: usize) -> Result<Integral> {
    cov_integral(model, bank, j, j, 0, Tolerance::relative(COVARIANCE_TOLERANCE))
}

/// Cov(W_{j,k}, W_{j2,k2}) = ∫ e^{iλ(k 2^j - k2 2^{j2})} f H_j conj H_{j2}.
pub fn wavelet_cov(
    model: &MemoryModel,
    bank: &FilterBank,
    j: usize,
    k: i64,
    j2: usize,
    k2: i64,
) -> Result<Integral> {
    let tau = (k << j) - (k2 << j2);
    if tau == 0 && j == j2 {
        return variance_sigma2(model, bank, j);
    }
    // off-diagonal values may be tiny: tolerance relative to the variances
    let scale = (variance_sigma2(model, bank, j)?.value * variance_sigma2(model, bank, j2)?.value).sqrt();
    let tol = Tolerance {
        abs: COVARIANCE_TOLERANCE * 1e-2 * scale,
        rel: COVARIANCE_TOLERANCE,
        ..Tolerance::default()
    };
    cov_integral(model, bank, j, j2, tau, tol)
}

/// e_u(ξ) = 2^{-u/2} [1, e^{-i 2^{-u} ξ}, …, e^{-i (2^u - 1) 2^{-u} ξ}].
pub fn e_u(u: usize, xi: f64) -> Vec<Complex64> {
    let p = 1usize << u;
    let norm = (p as f64).sqrt().recip();
    (0..p)
        .map(|v| Complex64::from_polar(norm, -(v as f64) * xi / p as f64))
        .collect()
}

/// Within-scale (u = 0) or between-scale density D_{j,u}(λ): the folded
/// sum over l = 0..2^j - 1 of
/// e_u(λ + 2lπ) f(ξ_l) 2^{-j/2} H_j(ξ_l) 2^{-(j-u)/2} conj H_{j-u}(ξ_l),
/// ξ_l = 2^{-j}(λ + 2lπ).
pub fn cross_density_exact(
    model: &MemoryModel,
    bank: &FilterBank,
    j: usize,
    u: usize,
    lambda: f64,
) -> Result<Vec<Complex64>> {
    if u > j {
        return Err(Error::IndexOutOfRange(format!("scale lag {u} exceeds scale {j}")));
    }
    let m = bank.vanishing_moments();
    model.require_moments(m)?;
    if model.d > m as f64 {
        if lambda == 0.0 {
            return Err(Error::PoleAtZero(model.d));
        }
        if model.d >= m as f64 + 0.5 {
            return Err(Error::MemoryOutOfRange {
                d: model.d,
                lower: f64::NEG_INFINITY,
                upper: m as f64,
            });
        }
    }
    let fine = bank.scale(j - u)?;
    let coarse = bank.scale(j)?;
    let p = 1usize << j;
    let a = coarse.reduced_transfer_folded(lambda, p);
    let b = fine.reduced_transfer_folded(lambda, p);
    let norm = 2f64.powf(-(j as f64) / 2.0 - (j - u) as f64 / 2.0);
    let width = 1usize << u;
    let mut out = vec![Complex64::new(0.0, 0.0); width];
    for l in 0..p {
        let big = lambda + 2.0 * PI * l as f64;
        let xi = big / p as f64;
        let scalar = a[l] * b[l].conj() * (norm * model.differenced_density(m, xi));
        for (v, e) in e_u(u, big).into_iter().enumerate() {
            out[v] += e * scalar;
        }
    }
    Ok(out)
}

/// Samples of a vector-valued 2π-periodic density on the uniform grid
/// λ_m = -π + 2πm/G, m = 0..G-1.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub lambdas: Vec<f64>,
    /// `values[m]` is the vector at `lambdas[m]`.
    pub values: Vec<Vec<Complex64>>,
}

impl DensityGrid {
    pub fn sample<F>(points: usize, g: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
    {
        let lambdas: Vec<f64> = (0..points)
            .map(|m| -PI + 2.0 * PI * m as f64 / points as f64)
            .collect();
        let values = lambdas.par_iter().map(|&l| g(l)).collect::<Result<Vec<_>>>()?;
        Ok(DensityGrid { lambdas, values })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// max_m |g(λ_m)| (Euclidean norm of the vector).
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// ∫ |g|² by the periodic trapezoid rule.
    pub fn l2_norm_sq(&self) -> f64 {
        let h = 2.0 * PI / self.len() as f64;
        h * self
            .values
            .iter()
            .map(|v| v.iter().map(Complex64::norm_sqr).sum::<f64>())
            .sum::<f64>()
    }

    /// c_k = ∫ g(λ) e^{ikλ} dλ for k = 0..G-1 (index G - k holds c_{-k}),
    /// one vector per component.
    pub fn fourier_coefficients(&self) -> Vec<Vec<Complex64>> {
        let g = self.len();
        let h = 2.0 * PI / g as f64;
        (0..self.width())
            .map(|c| {
                // e^{ikλ_m} = (-1)^k e^{2πikm/G}: an unnormalized inverse DFT
                let mut buf: Vec<Complex64> = self.values.iter().map(|v| v[c]).collect();
                crate::fft::inverse(g).process(&mut buf);
                buf.iter()
                    .enumerate()
                    .map(|(k, z)| z * if k % 2 == 0 { h } else { -h })
                    .collect()
            })
            .collect()
    }
}

/// Cov(W_{j,0}, W_{j,τ}) for τ = 0..=max_lag, from the Fourier
/// coefficients of D_{j,0} on a grid of `points` frequencies.
pub fn within_scale_autocov(
    model: &MemoryModel,
    bank: &FilterBank,
    j: usize,
    max_lag: usize,
    points: usize,
) -> Result<Vec<f64>> {
    if points < 2 * (max_lag + 1) {
        return Err(Error::GridTooCoarse {
            grid: points,
            n: max_lag + 1,
        });
    }
    let grid = DensityGrid::sample(points, |l| cross_density_exact(model, bank, j, 0, l))?;
    let c = grid.fourier_coefficients();
    Ok((0..=max_lag).map(|k| c[0][k].re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet_basis::WaveletFamily;

    fn bank(j: usize) -> FilterBank {
        WaveletFamily::bspline(2).unwrap().filter_bank(j).unwrap()
    }

    #[test]
    fn white_noise_variance_is_parseval() {
        let b = bank(4);
        let m = MemoryModel::white_noise(0.0, 1.0).unwrap();
        for j in 0..=4 {
            let v = variance_sigma2(&m, &b, j).unwrap();
            let oracle = 2.0 * PI * b.scale(j).unwrap().energy();
            assert!((v.value - oracle).abs() < 1e-9 * oracle, "j={j}");
        }
    }

    #[test]
    fn white_noise_lag_covariances_match_filter_correlation() {
        // Cov(W_{j,0}, W_{j,τ}) = 2π Σ_l h_{j,l} h_{j,l + 2^j τ}
        let b = bank(2);
        let m = MemoryModel::white_noise(0.0, 1.0).unwrap();
        let f = b.scale(2).unwrap();
        for tau in 0..4i64 {
            let v = wavelet_cov(&m, &b, 2, 0, 2, tau).unwrap().value;
            let oracle: f64 = 2.0
                * PI
                * f.support()
                    .map(|l| f.coeff(l) * f.coeff(l + 4 * tau))
                    .sum::<f64>();
            assert!((v - oracle).abs() < 1e-9, "tau={tau}: {v} vs {oracle}");
        }
    }

    #[test]
    fn within_scale_stationarity() {
        let b = bank(3);
        let m = MemoryModel::fgn(0.7).unwrap();
        let a = wavelet_cov(&m, &b, 3, 2, 3, 5).unwrap().value;
        let c = wavelet_cov(&m, &b, 3, 10, 3, 13).unwrap().value;
        assert!((a - c).abs() < 1e-12 * a.abs().max(1e-3));
    }

    #[test]
    fn rejects_insufficient_moments() {
        let b = bank(2);
        let m = MemoryModel::white_noise(2.7, 1.0).unwrap();
        assert!(matches!(
            variance_sigma2(&m, &b, 1),
            Err(Error::DifferencingOrder { required: 3, .. })
        ));
    }

    #[test]
    fn density_integrates_to_variance() {
        let b = bank(4);
        for model in [MemoryModel::fgn(0.7).unwrap(), MemoryModel::white_noise(0.45, 1.0).unwrap()] {
            let var = variance_sigma2(&model, &b, 4).unwrap().value;
            let grid = DensityGrid::sample(2048, |l| cross_density_exact(&model, &b, 4, 0, l)).unwrap();
            let c0 = grid.fourier_coefficients()[0][0].re;
            assert!((c0 - var).abs() < 1e-6 * var, "{}: {c0} vs {var}", model.label());
        }
    }

    #[test]
    fn white_noise_two_term_density() {
        let b = bank(1);
        let m = MemoryModel::white_noise(0.0, 1.0).unwrap();
        let h = b.scale(1).unwrap();
        for lambda in [-2.0, 0.3, 1.7] {
            let d = cross_density_exact(&m, &b, 1, 0, lambda).unwrap()[0];
            let oracle: f64 = (0..2)
                .map(|l| 0.5 * h.transfer((lambda + 2.0 * PI * l as f64) / 2.0).norm_sqr())
                .sum();
            assert!((d.re - oracle).abs() < 1e-12 && d.im.abs() < 1e-12);
        }
    }

    #[test]
    fn between_scale_density_reproduces_covariances() {
        // Cov(W_{j,k}, W_{j-u, 2^u k' + v}) = ∫ e^{iλ(k - k')} D_{j,u}(λ)_v dλ
        let b = bank(3);
        let m = MemoryModel::fgn(0.7).unwrap();
        let (j, u) = (3usize, 1usize);
        let grid = DensityGrid::sample(1024, |l| cross_density_exact(&m, &b, j, u, l)).unwrap();
        let c = grid.fourier_coefficients();
        for shift in [-1i64, 0, 2] {
            for v in 0..2usize {
                let from_density = c[v][shift.rem_euclid(1024) as usize].re;
                let direct = wavelet_cov(&m, &b, j, shift, j - u, v as i64).unwrap().value;
                assert!(
                    (from_density - direct).abs() < 1e-7 * (1.0 + direct.abs()),
                    "shift {shift} v {v}: {from_density} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let b = bank(3);
        let m = MemoryModel::fgn(0.7).unwrap();
        for lambda in [0.2, 1.1, 2.9] {
            let p = cross_density_exact(&m, &b, 3, 2, lambda).unwrap();
            let q = cross_density_exact(&m, &b, 3, 2, -lambda).unwrap();
            for (a, c) in p.iter().zip(&q) {
                assert!((a - c.conj()).norm() < 1e-12 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn spectral_radius_bound() {
        let b = bank(3);
        let m = MemoryModel::fgn(0.8).unwrap();
        let n = 40;
        let acov = within_scale_autocov(&m, &b, 3, n, 4096).unwrap();
        let gamma = crate::linalg::Matrix::from_fn(n, |a, c| acov[a.abs_diff(c)]);
        let top = *gamma.symmetric_eigenvalues().last().unwrap();
        let grid = DensityGrid::sample(4096, |l| cross_density_exact(&m, &b, 3, 0, l)).unwrap();
        assert!(top <= 2.0 * PI * grid.sup_norm() + 1e-6);
    }
}
