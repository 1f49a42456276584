use num_complex::Complex64;
use rayon::prelude::*;

use super::poly::Poly;
use super::WaveletFamily;
use crate::error::{Error, Result};

/// Relative residual above which the (1 - z)^M deflation is rejected.
pub const DEFLATION_TOLERANCE: f64 = 1e-9;

/// Discrete filter h_{j,l} of one scale together with its reduced filter
/// h̃_{j,l}, the coefficients of H̃_j in H_j(λ) = (1 - e^{-iλ})^M H̃_j(λ).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFilter {
    pub j: usize,
    /// Index `l` of `coeffs[0]` (and of `reduced[0]`).
    pub offset: i64,
    pub coeffs: Vec<f64>,
    pub reduced: Vec<f64>,
    pub vanishing_moments: usize,
    /// Largest remainder met during deflation, relative to the magnitude
    /// of the terms it sums.
    pub deflation_residual: f64,
}

fn horner(coeffs: &[f64], offset: i64, lambda: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, -lambda);
    let acc = coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    acc * Complex64::from_polar(1.0, -lambda * offset as f64)
}

/// Values of Σ_l c_l e^{-i ξ l} at ξ_p = (λ + 2πp)/P, p = 0..P-1.
fn folded_grid(coeffs: &[f64], offset: i64, lambda: f64, points: usize) -> Vec<Complex64> {
    let mut bins = vec![Complex64::new(0.0, 0.0); points];
    let p = points as i64;
    let step = -lambda / points as f64;
    for (k, &c) in coeffs.iter().enumerate() {
        let l = offset + k as i64;
        bins[l.rem_euclid(p) as usize] += Complex64::from_polar(c, step * l as f64);
    }
    crate::fft::forward_in_place(&mut bins);
    bins
}

/// Divides Σ q_k z^k by (1 - z) `times` times. Returns the quotient and
/// the largest remainder relative to the sum of absolute terms producing it.
fn deflate(q: &[f64], times: usize) -> (Vec<f64>, f64) {
    let mut cur = q.to_vec();
    let mut worst = 0.0f64;
    for _ in 0..times {
        let n = cur.len() - 1;
        let mut b = vec![0.0; n];
        // Q = (z - 1) B + r, synthetic division from the top.
        let mut carry = 0.0;
        let mut magnitude = cur[0].abs();
        for k in (1..=n).rev() {
            carry += cur[k];
            magnitude += cur[k].abs();
            b[k - 1] = carry;
        }
        let r = cur[0] + carry;
        if magnitude > 0.0 {
            worst = worst.max(r.abs() / magnitude);
        }
        // (z - 1) B = (1 - z)(-B)
        cur = b.into_iter().map(|v| -v).collect();
    }
    (cur, worst)
}

impl ScaleFilter {
    pub(crate) fn build(family: &WaveletFamily, j: usize) -> Result<Self> {
        let n = family.order();
        let two_j = 1i64 << j;
        let nn = n as i64;
        // φ(s + l) lives on s ∈ (-l - N, -l); ψ(2^{-j} s) on s ∈ (0, 2^j 2N).
        let lo = -(two_j * 2 * nn + nn - 1);
        let hi = -1i64;
        let phi = family.phi_pieces();
        let psi = family.psi_pieces();
        let r = 1.0 / two_j as f64;
        let norm = (2f64).powf(-(j as f64) / 2.0);
        let coeffs: Vec<f64> = (lo..=hi)
            .map(|l| {
                let mut acc = 0.0;
                for (i, phi_piece) in phi.iter().enumerate() {
                    let a = -l - nn + i as i64;
                    if a < 0 {
                        continue;
                    }
                    let q = a.div_euclid(two_j);
                    if q >= 2 * nn {
                        continue;
                    }
                    let c = (a - q * two_j) as f64 * r;
                    let local: Poly = psi[q as usize].compose_affine(c, r);
                    acc += phi_piece.mul(&local).integral_unit();
                }
                acc * norm
            })
            .collect();
        let m = family.m();
        let scale = coeffs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let (reduced, rel) = deflate(&coeffs, m);
        if !(rel <= DEFLATION_TOLERANCE) {
            return Err(Error::Deflation {
                residual: rel * scale,
                scale,
            });
        }
        Ok(ScaleFilter {
            j,
            offset: lo,
            coeffs,
            reduced,
            vanishing_moments: m,
            deflation_residual: rel,
        })
    }

    /// Indices `l` carried by `coeffs`.
    pub fn support(&self) -> std::ops::RangeInclusive<i64> {
        self.offset..=self.offset + self.coeffs.len() as i64 - 1
    }

    /// Coefficient h_{j,l}, zero outside the support.
    pub fn coeff(&self, l: i64) -> f64 {
        let k = l - self.offset;
        if k < 0 || k as usize >= self.coeffs.len() {
            0.0
        } else {
            self.coeffs[k as usize]
        }
    }

    /// H_j(λ) = Σ_l h_{j,l} e^{-iλl}.
    pub fn transfer(&self, lambda: f64) -> Complex64 {
        horner(&self.coeffs, self.offset, lambda)
    }

    /// H̃_j(λ).
    pub fn reduced_transfer(&self, lambda: f64) -> Complex64 {
        horner(&self.reduced, self.offset, lambda)
    }

    /// H_j at (λ + 2πp)/P for p = 0..P-1, in one FFT.
    pub fn transfer_folded(&self, lambda: f64, points: usize) -> Vec<Complex64> {
        folded_grid(&self.coeffs, self.offset, lambda, points)
    }

    /// H̃_j at (λ + 2πp)/P for p = 0..P-1.
    pub fn reduced_transfer_folded(&self, lambda: f64, points: usize) -> Vec<Complex64> {
        folded_grid(&self.reduced, self.offset, lambda, points)
    }

    /// Σ_l h_{j,l} l^m.
    pub fn moment(&self, m: u32) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &h)| h * ((self.offset + k as i64) as f64).powi(m as i32))
            .sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|h| h.abs()).sum()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|h| h * h).sum()
    }
}

/// Filters for scales `0..=J`.
#[derive(Debug, Clone)]
pub struct FilterBank {
    filters: Vec<ScaleFilter>,
    vanishing_moments: usize,
    support_len: usize,
}

impl FilterBank {
    pub(crate) fn build(family: &WaveletFamily, max_scale: usize) -> Result<Self> {
        let filters = (0..=max_scale)
            .into_par_iter()
            .map(|j| ScaleFilter::build(family, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(FilterBank {
            filters,
            vanishing_moments: family.m(),
            support_len: family.support_len(),
        })
    }

    pub fn max_scale(&self) -> usize {
        self.filters.len() - 1
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    pub fn support_len(&self) -> usize {
        self.support_len
    }

    pub fn scale(&self, j: usize) -> Result<&ScaleFilter> {
        self.filters.get(j).ok_or(Error::MissingScale(j))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScaleFilter> {
        self.filters.iter()
    }

    /// H_j(λ).
    pub fn transfer_function(&self, j: usize, lambda: f64) -> Result<Complex64> {
        Ok(self.scale(j)?.transfer(lambda))
    }
}
