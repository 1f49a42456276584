//! Exact Gaussian sampling of M(d) processes: the stationary increment
//! Δ^K X is drawn from its autocovariance by circulant embedding (or a
//! dense factorization when the embedding is not nonnegative), then summed
//! K times starting from zero.
//!
//! Replicate `r` of a plan seeded with `s` reads from stream `r` of a
//! ChaCha8 generator keyed by `s`, so replicates are independent of the
//! order in which they are produced.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::quadrature::{integrate_breaks, Tolerance};
use crate::spectra::{MemoryModel, ShortMemory};

/// Largest n handled by the dense fallback.
pub const DENSE_LIMIT: usize = 4096;

/// Eigenvalue tolerance of the dense fallback, relative to the largest.
pub const DENSE_PSD_TOLERANCE: f64 = 1e-8;

/// γ(h) = ½(|h+1|^{2H} - 2|h|^{2H} + |h-1|^{2H}), unit-variance FGN.
pub fn fgn_autocovariance(hurst: f64, max_lag: usize) -> Vec<f64> {
    let p = 2.0 * hurst;
    (0..=max_lag)
        .map(|h| {
            let h = h as f64;
            0.5 * ((h + 1.0).powf(p) - 2.0 * h.powf(p) + (h - 1.0).abs().powf(p))
        })
        .collect()
}

/// ∫ |1 - e^{-iλ}|^{-2δ} e^{iλh} dλ for |δ| < 1/2:
/// γ(0) = 2π Γ(1-2δ)/Γ(1-δ)², γ(h) = γ(h-1)(h-1+δ)/(h-δ).
pub fn fractional_autocovariance(delta: f64, max_lag: usize) -> Vec<f64> {
    use statrs::function::gamma::ln_gamma;
    let mut g = Vec::with_capacity(max_lag + 1);
    g.push(2.0 * PI * (ln_gamma(1.0 - 2.0 * delta) - 2.0 * ln_gamma(1.0 - delta)).exp());
    for h in 1..=max_lag {
        let h = h as f64;
        let prev = g[g.len() - 1];
        g.push(prev * (h - 1.0 + delta) / (h - delta));
    }
    g
}

/// c_k = (2π)^{-1} ∫ f*(λ) e^{ikλ} dλ for k = 0..L, trimmed where the
/// coefficients fall below 1e-17 c_0.
fn fstar_coefficients(model: &MemoryModel) -> Vec<f64> {
    let mut g = 1024usize;
    loop {
        let mut buf: Vec<Complex64> = (0..g)
            .map(|m| Complex64::new(model.fstar(2.0 * PI * m as f64 / g as f64), 0.0))
            .collect();
        fft::forward_in_place(&mut buf);
        let c: Vec<f64> = buf[..=g / 2].iter().map(|z| z.re / g as f64).collect();
        let tail = c[g / 4..].iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if tail <= 1e-16 * c[0].abs() || g >= 1 << 22 {
            let last = c.iter().rposition(|x| x.abs() > 1e-17 * c[0].abs()).unwrap_or(0);
            return c[..=last].to_vec();
        }
        g *= 2;
    }
}

/// γ(h) = ∫ |1 - e^{-iλ}|^{2(K-d)} f*(λ) e^{iλh} dλ by adaptive quadrature.
pub fn autocovariance_quadrature(model: &MemoryModel, max_lag: usize) -> Result<Vec<f64>> {
    let k = model.differencing_order();
    let scale = integrate_breaks(|l| model.differenced_density(k, l), &lag_breaks(0), Tolerance::relative(1e-12))?
        .value
        * 2.0;
    (0..=max_lag)
        .into_par_iter()
        .map(|h| {
            let f = |l: f64| 2.0 * model.differenced_density(k, l) * (l * h as f64).cos();
            let tol = Tolerance {
                abs: 1e-13 * scale,
                rel: 1e-12,
                max_panels: 200_000,
            };
            Ok(integrate_breaks(f, &lag_breaks(h), tol)?.value)
        })
        .collect()
}

fn lag_breaks(h: usize) -> Vec<f64> {
    let panels = h / 2 + 8;
    let w = PI / panels as f64;
    let mut b: Vec<f64> = vec![0.0];
    b.extend((0..40).rev().map(|k| w * 0.5f64.powi(k)));
    b.extend((2..=panels).map(|k| w * k as f64));
    b
}

/// Autocovariance γ(0..=max_lag) of the stationary process Δ^K X.
///
/// FBM and FGN use the closed form, ARFIMA the fractional closed form
/// convolved with the Fourier coefficients of f*; anything else is
/// integrated numerically.
pub fn autocovariance(model: &MemoryModel, max_lag: usize) -> Result<Vec<f64>> {
    let k = model.differencing_order() as f64;
    let delta = model.d - k;
    match &model.fstar {
        ShortMemory::Fbm { hurst, scale } if (delta - (hurst - 0.5)).abs() < 1e-12 => {
            let c = scale / crate::spectra::fgn_constant(*hurst);
            Ok(fgn_autocovariance(*hurst, max_lag).into_iter().map(|g| c * g).collect())
        }
        ShortMemory::Arma { .. } => {
            let c = fstar_coefficients(model);
            let l = c.len() - 1;
            let frac = fractional_autocovariance(delta, max_lag + l);
            Ok((0..=max_lag)
                .map(|h| {
                    let mut s = c[0] * frac[h];
                    for (j, cj) in c.iter().enumerate().skip(1) {
                        s += cj * (frac[h + j] + frac[h.abs_diff(j)]);
                    }
                    s
                })
                .collect())
        }
        _ => autocovariance_quadrature(model, max_lag),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Circulant { size: usize },
    Dense,
}

#[derive(Debug, Clone)]
enum Factor {
    /// sqrt(λ_k / size) for the circulant eigenvalues λ_k.
    Circulant(Vec<f64>),
    /// Any S with S Sᵀ = Γ_n (Cholesky factor when it exists).
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct SamplerPlan {
    pub model: MemoryModel,
    pub n: usize,
    pub differencing_order: usize,
    pub method: Method,
    /// γ(0..n) of Δ^K X.
    pub gamma: Vec<f64>,
    pub seed: u64,
    factor: Factor,
}

impl SamplerPlan {
    pub fn new(model: &MemoryModel, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample length must be positive".into()));
        }
        let gamma = autocovariance(model, n - 1)?;
        if !(gamma[0] > 0.0) {
            return Err(Error::InvalidArgument(format!("non-positive variance γ(0) = {}", gamma[0])));
        }
        let (method, factor) = match circulant(model, &gamma, n)? {
            Some((size, f)) => (Method::Circulant { size }, Factor::Circulant(f)),
            None => (Method::Dense, Factor::Dense(dense_factor(&gamma)?)),
        };
        Ok(SamplerPlan {
            model: model.clone(),
            n,
            differencing_order: model.differencing_order(),
            method,
            gamma,
            seed,
            factor,
        })
    }

    fn rng(&self, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate);
        rng
    }

    /// One draw of Δ^K X_1..n.
    pub fn sample_increments(&self, replicate: u64) -> Vec<f64> {
        let mut rng = self.rng(replicate);
        match &self.factor {
            Factor::Circulant(root) => {
                let mut buf: Vec<Complex64> = root
                    .iter()
                    .map(|&r| {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        Complex64::new(r * a, r * b)
                    })
                    .collect();
                fft::forward_in_place(&mut buf);
                buf[..self.n].iter().map(|z| z.re).collect()
            }
            Factor::Dense(root) => {
                let z = DVector::from_fn(self.n, |_, _| rng.sample(StandardNormal));
                (root * z).iter().copied().collect()
            }
        }
    }

    /// One draw of X_1..n.
    pub fn sample(&self, replicate: u64) -> Vec<f64> {
        cumulate(self.sample_increments(replicate), self.differencing_order)
    }

    /// Replicates `0..reps`, produced in parallel.
    pub fn sample_many(&self, reps: u64) -> Vec<Vec<f64>> {
        (0..reps).into_par_iter().map(|r| self.sample(r)).collect()
    }
}

/// `k` cumulative sums with zero initial conditions.
pub fn cumulate(mut y: Vec<f64>, k: usize) -> Vec<f64> {
    for _ in 0..k {
        let mut acc = 0.0;
        for v in y.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    y
}

/// Smallest nonnegative circulant embedding of size ≥ 2(n-1), doubling up
/// to 16n; `None` when none is found.
fn circulant(model: &MemoryModel, gamma: &[f64], n: usize) -> Result<Option<(usize, Vec<f64>)>> {
    if n < 2 {
        return Ok(None);
    }
    let mut size = (2 * (n - 1)).next_power_of_two();
    let mut g = gamma.to_vec();
    while size <= 16 * n {
        let half = size / 2;
        if g.len() <= half {
            g = autocovariance(model, half)?;
        }
        let mut buf: Vec<Complex64> = (0..size)
            .map(|j| Complex64::new(g[if j <= half { j } else { size - j }], 0.0))
            .collect();
        fft::forward_in_place(&mut buf);
        let top = buf.iter().fold(0.0f64, |a, z| a.max(z.re));
        let low = buf.iter().fold(f64::INFINITY, |a, z| a.min(z.re));
        if low >= -1e-10 * top {
            let root = buf.iter().map(|z| (z.re.max(0.0) / size as f64).sqrt()).collect();
            return Ok(Some((size, root)));
        }
        size *= 2;
    }
    Ok(None)
}

fn dense_factor(gamma: &[f64]) -> Result<DMatrix<f64>> {
    let n = gamma.len();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "circulant embedding failed and n = {n} exceeds the dense limit {DENSE_LIMIT}"
        )));
    }
    let t = DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)]);
    if let Some(c) = t.clone().cholesky() {
        return Ok(c.l());
    }
    let eig = SymmetricEigen::new(t);
    let top = eig.eigenvalues.max();
    let low = eig.eigenvalues.min();
    if low < -DENSE_PSD_TOLERANCE * top {
        return Err(Error::NotPositiveSemidefinite { eigenvalue: low });
    }
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_autocovariance() {
        let g = autocovariance(&MemoryModel::white_noise(0.0, 1.0).unwrap(), 5).unwrap();
        assert!((g[0] - 2.0 * PI).abs() < 1e-12);
        assert!(g[1..].iter().all(|x| x.abs() < 1e-12));
        let g = autocovariance(&MemoryModel::fgn(0.5).unwrap(), 5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-14);
        assert!(g[1..].iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn fgn_closed_form_matches_quadrature() {
        let m = MemoryModel::fgn(0.7).unwrap();
        let closed = autocovariance(&m, 40).unwrap();
        let quad = autocovariance_quadrature(&m, 40).unwrap();
        let c = closed[0] / quad[0];
        assert!((c - 1.0).abs() < 1e-6, "lag-0 ratio {c}");
        for (a, b) in closed.iter().zip(&quad) {
            assert!((a - c * b).abs() < 1e-6 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn arfima_closed_form_matches_quadrature() {
        for m in [
            MemoryModel::parse("arfima:1,0.3,1;ar=0.6;ma=-0.3").unwrap(),
            MemoryModel::parse("arfima:0,-0.25,0;sigma2=2").unwrap(),
            MemoryModel::parse("arfima:2,1.2,0;ar=0.5,-0.2").unwrap(),
        ] {
            let a = autocovariance(&m, 30).unwrap();
            let b = autocovariance_quadrature(&m, 30).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8 * a[0], "{m}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn fbm_increments_are_scaled_fgn() {
        let a = autocovariance(&MemoryModel::fbm(0.3).unwrap(), 10).unwrap();
        let b = fgn_autocovariance(0.3, 10);
        let c = 1.0 / crate::spectra::fgn_constant(0.3);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - c * y).abs() < 1e-14 * c);
        }
    }

    #[test]
    fn deterministic_per_replicate() {
        let plan = SamplerPlan::new(&MemoryModel::fgn(0.7).unwrap(), 100, 42).unwrap();
        assert!(matches!(plan.method, Method::Circulant { .. }));
        assert_eq!(plan.sample(3), plan.sample(3));
        assert_ne!(plan.sample(3), plan.sample(4));
        let many = plan.sample_many(5);
        assert_eq!(many[4], plan.sample(4));
    }

    #[test]
    fn cumulative_sums() {
        assert_eq!(cumulate(vec![1.0, 2.0, 3.0], 1), vec![1.0, 3.0, 6.0]);
        assert_eq!(cumulate(vec![1.0, 1.0, 1.0], 2), vec![1.0, 3.0, 6.0]);
        let plan = SamplerPlan::new(&MemoryModel::fbm(0.6).unwrap(), 50, 1).unwrap();
        assert_eq!(plan.differencing_order, 1);
        let x = plan.sample(0);
        let y = plan.sample_increments(0);
        assert!((x[0] - y[0]).abs() < 1e-15 && (x[49] - x[48] - y[49]).abs() < 1e-12);
    }

    #[test]
    fn dense_factor_reproduces_covariance() {
        // the second sequence is PSD but singular, which defeats Cholesky
        for g in [fgn_autocovariance(0.8, 11), vec![1.0; 12]] {
            let l = dense_factor(&g).unwrap();
            let prod = &l * l.transpose();
            for i in 0..12 {
                for j in 0..12 {
                    assert!((prod[(i, j)] - g[i.abs_diff(j)]).abs() < 1e-12);
                }
            }
        }
        assert!(matches!(
            dense_factor(&[1.0, 2.0]),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }
}
