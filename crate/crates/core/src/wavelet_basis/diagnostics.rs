//! Ratios of the transfer-function approximation errors to their envelopes:
//!
//! 1. |H_j(λ) - 2^{j/2} φ̂(λ) conj ψ̂(2^j λ)| against 2^{j(1/2-α)} |λ|^M
//! 2. |φ̂(λ) ψ̂(2^j λ)| against |2^j λ|^M (1 + 2^j|λ|)^{-α-M}
//! 3. |H_j(λ)| against 2^{j/2} |2^j λ|^M (1 + 2^j|λ|)^{-α-M}
//! 4. ||H_j|² - 2^j |φ̂ ψ̂(2^j ·)|²| against 2^{j(1+M-α)} |λ|^{2M} (1 + 2^j|λ|)^{-α-M}
//!
//! Bounded ratios across `j` confirm the approximation used by the
//! large-scale spectral theory.

use num_complex::Complex64;
use serde::Serialize;

use super::{ScaleFilter, WaveletFamily};
use crate::error::{Error, Result};

/// Threshold on max |H_j| deciding whether a filter is identically zero.
pub const NONZERO_THRESHOLD: f64 = 1e-8;

/// Grid used to detect the first non-vanishing scale.
pub const DETECTION_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeRatios {
    pub approx: f64,
    pub product_bound: f64,
    pub transfer_bound: f64,
    pub squared_approx: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleDiagnostics {
    pub j: usize,
    /// Sup over the grid of each ratio.
    pub sup: [f64; 4],
    pub max_abs_transfer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximationDiagnostics {
    pub scales: Vec<ScaleDiagnostics>,
    /// Smallest scale whose transfer function is not identically zero.
    pub first_nonvanishing_scale: Option<usize>,
}

impl ApproximationDiagnostics {
    /// Ratio column `k` (0..4) across scales.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.scales.iter().map(|s| s.sup[k]).collect()
    }
}

/// The four envelope ratios at one frequency.
pub fn envelope_ratios(family: &WaveletFamily, filter: &ScaleFilter, lambda: f64) -> EnvelopeRatios {
    let j = filter.j as i32;
    let m = family.m() as i32;
    let alpha = family.alpha();
    let two_j = 2f64.powi(j);
    let h = filter.transfer(lambda);
    let phi = family.phi_hat(lambda);
    let psi = family.psi_hat(two_j * lambda);
    let approx: Complex64 = phi * psi.conj() * two_j.sqrt();
    let a = lambda.abs();
    let decay = (1.0 + two_j * a).powf(-alpha - m as f64);
    let env1 = two_j.powf(0.5 - alpha) * a.powi(m);
    let env2 = (two_j * a).powi(m) * decay;
    let env3 = two_j.sqrt() * env2;
    let env4 = two_j.powf(1.0 + m as f64 - alpha) * a.powi(2 * m) * decay;
    EnvelopeRatios {
        approx: (h - approx).norm() / env1,
        product_bound: (phi * psi).norm() / env2,
        transfer_bound: h.norm() / env3,
        squared_approx: (h.norm_sqr() - two_j * (phi * psi).norm_sqr()).abs() / env4,
    }
}

/// Sup of the envelope ratios over `grid` frequencies for each scale of
/// `scales`, plus the first non-vanishing scale.
pub fn appendix_a_diagnostics(
    family: &WaveletFamily,
    scales: std::ops::RangeInclusive<usize>,
    grid: &[f64],
) -> Result<ApproximationDiagnostics> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("empty scale range".into()));
    }
    let detection: Vec<f64> = (0..DETECTION_GRID)
        .map(|k| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / DETECTION_GRID as f64)
        .collect();
    let mut out = Vec::new();
    let mut first = None;
    for j in scales {
        let filter = family.filter_coeffs(j)?;
        let max_abs = detection
            .iter()
            .map(|&l| filter.transfer(l).norm())
            .fold(0.0, f64::max);
        if first.is_none() && max_abs > NONZERO_THRESHOLD {
            first = Some(j);
        }
        let mut sup = [0.0f64; 4];
        for &lambda in grid.iter().filter(|l| **l != 0.0) {
            let r = envelope_ratios(family, &filter, lambda);
            for (s, v) in sup
                .iter_mut()
                .zip([r.approx, r.product_bound, r.transfer_bound, r.squared_approx])
            {
                *s = s.max(v);
            }
        }
        out.push(ScaleDiagnostics {
            j,
            sup,
            max_abs_transfer: max_abs,
        });
    }
    Ok(ApproximationDiagnostics {
        scales: out,
        first_nonvanishing_scale: first,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn ratios_are_bounded_across_scales() {
        let fam = WaveletFamily::bspline(2).unwrap();
        let diag = appendix_a_diagnostics(&fam, 2..=8, &grid(512)).unwrap();
        for k in 0..4 {
            let col = diag.column(k);
            let base = col[0];
            assert!(col.iter().all(|v| v.is_finite()));
            // j-independent constant: later scales never exceed a fixed
            // multiple of the first one
            assert!(col.iter().all(|&v| v <= 4.0 * base.max(1e-12)), "ratio {k}: {col:?}");
        }
    }

    #[test]
    fn first_scale_is_zero_for_order_two() {
        let fam = WaveletFamily::bspline(2).unwrap();
        let diag = appendix_a_diagnostics(&fam, 0..=3, &grid(64)).unwrap();
        assert_eq!(diag.first_nonvanishing_scale, Some(0));
        assert!(diag.scales[0].max_abs_transfer > NONZERO_THRESHOLD);
    }

    #[test]
    fn transfer_bound_finite_at_pi() {
        let fam = WaveletFamily::bspline(2).unwrap();
        let f = fam.filter_coeffs(5).unwrap();
        let r = envelope_ratios(&fam, &f, PI);
        assert!(r.transfer_bound.is_finite() && r.transfer_bound > 0.0);
    }

    #[test]
    fn approximation_rate_at_fixed_frequency() {
        // |H_j(0.1) - 2^{j/2} φ̂ conj ψ̂(2^j 0.1)| / (2^{j(1/2-α)} 0.1^M) stays
        // within a stable band over j = 3..8
        let fam = WaveletFamily::bspline(2).unwrap();
        let ratios: Vec<f64> = (3..=8)
            .map(|j| envelope_ratios(&fam, &fam.filter_coeffs(j).unwrap(), 0.1).approx)
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max.is_finite());
        assert!(ratios.iter().all(|&r| r <= max && r >= 0.0));
        assert!(ratios[5] <= 2.0 * ratios[0] + 1e-12, "{ratios:?}");
    }

    #[test]
    fn empty_range_rejected() {
        let fam = WaveletFamily::bspline(2).unwrap();
        #[allow(clippy::reversed_empty_ranges)]
        let r = appendix_a_diagnostics(&fam, 3..=2, &grid(8));
        assert!(r.is_err());
    }
}
