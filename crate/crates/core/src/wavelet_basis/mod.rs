//! Compactly supported scaling/wavelet pairs built from B-splines, their
//! Fourier transforms, and the discrete filters they induce.
//!
//! For an order `N ≥ 2` the scaling function is the `N`-fold self
//! convolution of the unit box, shifted so that its support is `[-N, 0]`,
//! and the wavelet is the `N`-th derivative of the `2N`-fold convolution,
//! supported on `[0, 2N]` and rescaled to unit L² norm. Both are splines
//! with integer knots, so every filter coefficient is an exact integral of
//! a product of polynomials.

mod diagnostics;
mod filters;
pub mod poly;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::binomial;
use poly::Poly;

pub use diagnostics::{
    appendix_a_diagnostics, envelope_ratios, ApproximationDiagnostics, EnvelopeRatios, ScaleDiagnostics,
};
pub use filters::{FilterBank, ScaleFilter};

/// Frequency-domain view of a wavelet, enough for every asymptotic
/// computation (K(ψ, d), D_∞,u, V(ψ, d)).
pub trait FrequencyDescriptor: Send + Sync {
    /// Fourier transform ψ̂(ξ) = ∫ ψ(t) e^{-iξt} dt.
    fn psi_hat(&self, xi: f64) -> Complex64;

    /// φ̂(ξ), when a scaling function is attached.
    fn phi_hat(&self, _xi: f64) -> Option<Complex64> {
        None
    }

    /// Number of vanishing moments `M`; `None` when ψ̂ vanishes on a
    /// neighbourhood of the origin.
    fn vanishing_moments(&self) -> Option<usize>;

    /// Decay exponent α of |ψ̂(ξ)|; infinite for band-limited descriptors.
    fn decay_exponent(&self) -> f64;

    /// Constant `C` with |ψ̂(ξ)| ≤ C |ξ|^{-α} for every ξ ≠ 0.
    fn decay_constant(&self) -> f64;

    /// Radius outside of which ψ̂ vanishes identically, if any.
    fn frequency_support(&self) -> Option<f64> {
        None
    }

    /// Degree `N` such that ψ̂(ξ) ξ^N is 2π-periodic, when it exists. Lattice
    /// sums over ξ + 2πl then reduce to Hurwitz zeta values.
    fn homogeneous_degree(&self) -> Option<usize> {
        None
    }

    /// The 2π-periodic factor ψ̂(ξ) ξ^N of [`homogeneous_degree`](Self::homogeneous_degree).
    fn periodic_factor(&self, xi: f64) -> Complex64 {
        let n = self.homogeneous_degree().unwrap_or(0) as i32;
        self.psi_hat(xi) * xi.powi(n)
    }

    /// Positive frequencies where ψ̂ is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Admissible memory interval `((1 + β)/2 - α, M]` for the asymptotic
    /// densities and the limiting variance.
    fn admissible_memory(&self, beta: f64) -> (f64, f64) {
        let lower = (1.0 + beta) / 2.0 - self.decay_exponent();
        let upper = self
            .vanishing_moments()
            .map(|m| m as f64)
            .unwrap_or(f64::INFINITY);
        (lower, upper)
    }
}

/// sin(x)/x with the removable singularity filled in.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// B-spline scaling/wavelet pair of order `N`.
#[derive(Debug, Clone)]
pub struct WaveletFamily {
    order: usize,
    psi_norm: f64,
    /// Pieces of φ on [-N + i, -N + i + 1].
    phi_pieces: Vec<Poly>,
    /// Pieces of the normalized ψ on [i, i + 1].
    psi_pieces: Vec<Poly>,
}

/// Pieces of the cardinal B-spline of order `n` (support `[0, n]`) on
/// `[i, i + 1]`, `i = 0..n`, built by repeated convolution with the box.
fn bspline_pieces(n: usize) -> Vec<Poly> {
    let mut pieces = vec![Poly::constant(1.0)];
    for k in 1..n {
        // B_{k+1}(i + τ) = ∫_τ^1 B_k^{(i-1)} + ∫_0^τ B_k^{(i)}
        let anti: Vec<Poly> = pieces.iter().map(Poly::antiderivative).collect();
        let mut next = Vec::with_capacity(k + 1);
        for i in 0..=k {
            let mut p = Poly::constant(0.0);
            if i >= 1 {
                let prev = &anti[i - 1];
                p = p.add(&Poly::constant(prev.eval(1.0))).add(&prev.scale(-1.0));
            }
            if i < k {
                p = p.add(&anti[i]);
            }
            next.push(p);
        }
        pieces = next;
    }
    pieces
}

impl WaveletFamily {
    /// Builds the order-`N` family; `N ≥ 2` so that α = N > 1.
    pub fn bspline(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidOrder(order));
        }
        let n = order;
        let b = bspline_pieces(n);
        // ψ_unnorm = D^N B_{2N} = Σ_k (-1)^k C(N, k) B_N(· - k)
        let mut psi: Vec<Poly> = Vec::with_capacity(2 * n);
        for i in 0..2 * n {
            let mut p = Poly::constant(0.0);
            for k in 0..=n {
                if i >= k && i - k < n {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    p = p.add(&b[i - k].scale(sign * binomial(n, k)));
                }
            }
            psi.push(p);
        }
        let energy: f64 = psi.iter().map(|p| p.mul(p).integral_unit()).sum();
        let psi_norm = energy.sqrt().recip();
        let psi_pieces = psi.iter().map(|p| p.scale(psi_norm)).collect();
        Ok(WaveletFamily {
            order: n,
            psi_norm,
            phi_pieces: b,
            psi_pieces,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Vanishing moments M (= N).
    pub fn m(&self) -> usize {
        self.order
    }

    /// Decay exponent α (= N).
    pub fn alpha(&self) -> f64 {
        self.order as f64
    }

    /// Support length T = 2N.
    pub fn support_len(&self) -> usize {
        2 * self.order
    }

    /// Normalization constant c_N making ∫ψ² = 1.
    pub fn psi_norm_const(&self) -> f64 {
        self.psi_norm
    }

    pub(crate) fn phi_pieces(&self) -> &[Poly] {
        &self.phi_pieces
    }

    pub(crate) fn psi_pieces(&self) -> &[Poly] {
        &self.psi_pieces
    }

    /// φ(t), supported on `[-N, 0]`.
    pub fn phi(&self, t: f64) -> f64 {
        let x = t + self.order as f64;
        piece_eval(&self.phi_pieces, x)
    }

    /// ψ(t), supported on `[0, 2N]`, unit L² norm.
    pub fn psi(&self, t: f64) -> f64 {
        piece_eval(&self.psi_pieces, t)
    }

    /// ψ before normalization.
    pub fn psi_unnormalized(&self, t: f64) -> f64 {
        self.psi(t) / self.psi_norm
    }

    /// φ̂(ξ) = e^{iNξ/2} (sin(ξ/2)/(ξ/2))^N.
    pub fn phi_hat(&self, xi: f64) -> Complex64 {
        let n = self.order as f64;
        Complex64::from_polar(sinc(xi / 2.0).powi(self.order as i32), n * xi / 2.0)
    }

    /// ψ̂(ξ) = c_N (iξ)^N e^{-iNξ} (sin(ξ/2)/(ξ/2))^{2N}.
    pub fn psi_hat(&self, xi: f64) -> Complex64 {
        let n = self.order as i32;
        let modulus = self.psi_norm * xi.abs().powi(n) * sinc(xi / 2.0).powi(2 * n);
        // (iξ)^N = |ξ|^N e^{iNπ/2 sgn ξ}
        let quarter = std::f64::consts::FRAC_PI_2 * n as f64 * xi.signum();
        Complex64::from_polar(modulus, quarter - n as f64 * xi)
    }

    /// Filters h_{j,·} for j = 0..=max_scale.
    pub fn filter_bank(&self, max_scale: usize) -> Result<FilterBank> {
        FilterBank::build(self, max_scale)
    }

    /// A single scale's filter.
    pub fn filter_coeffs(&self, j: usize) -> Result<ScaleFilter> {
        ScaleFilter::build(self, j)
    }
}

fn piece_eval(pieces: &[Poly], x: f64) -> f64 {
    if !(0.0..=pieces.len() as f64).contains(&x) {
        return 0.0;
    }
    let i = (x.floor() as usize).min(pieces.len() - 1);
    pieces[i].eval(x - i as f64)
}

impl FrequencyDescriptor for WaveletFamily {
    fn psi_hat(&self, xi: f64) -> Complex64 {
        WaveletFamily::psi_hat(self, xi)
    }

    fn phi_hat(&self, xi: f64) -> Option<Complex64> {
        Some(WaveletFamily::phi_hat(self, xi))
    }

    fn vanishing_moments(&self) -> Option<usize> {
        Some(self.order)
    }

    fn decay_exponent(&self) -> f64 {
        self.order as f64
    }

    fn decay_constant(&self) -> f64 {
        // |ψ̂(ξ)| = c |ξ|^N |sinc(ξ/2)|^{2N} ≤ c 2^{2N} |ξ|^{-N}
        self.psi_norm * 4f64.powi(self.order as i32)
    }

    fn homogeneous_degree(&self) -> Option<usize> {
        Some(self.order)
    }

    fn periodic_factor(&self, xi: f64) -> Complex64 {
        // c_N i^N e^{-iNξ} (2 sin(ξ/2))^{2N}
        let n = self.order as i32;
        let modulus = self.psi_norm * (2.0 * (xi / 2.0).sin()).powi(2 * n);
        Complex64::from_polar(modulus, std::f64::consts::FRAC_PI_2 * n as f64 - n as f64 * xi)
    }
}

/// Band-limited descriptor ψ̂ = 1 on π ≤ |ξ| ≤ 2π: the Shannon wavelet,
/// orthonormal, used to check the orthonormal-case identities.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShannonDescriptor;

impl FrequencyDescriptor for ShannonDescriptor {
    fn psi_hat(&self, xi: f64) -> Complex64 {
        let a = xi.abs();
        if (std::f64::consts::PI..=2.0 * std::f64::consts::PI).contains(&a) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn vanishing_moments(&self) -> Option<usize> {
        None
    }

    fn decay_exponent(&self) -> f64 {
        f64::INFINITY
    }

    fn decay_constant(&self) -> f64 {
        0.0
    }

    fn frequency_support(&self) -> Option<f64> {
        Some(2.0 * std::f64::consts::PI)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![std::f64::consts::PI, 2.0 * std::f64::consts::PI]
    }

    fn admissible_memory(&self, _beta: f64) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_panels, Tolerance};

    #[test]
    fn periodic_factor_matches_transform() {
        let fam = WaveletFamily::bspline(3).unwrap();
        for xi in [-7.3, -0.2, 0.9, 4.0, 12.5] {
            let direct = fam.psi_hat(xi) * xi.powi(3);
            assert!((fam.periodic_factor(xi) - direct).norm() < 1e-12 * (1.0 + direct.norm()));
            let shifted = fam.periodic_factor(xi + 2.0 * std::f64::consts::PI);
            assert!((shifted - fam.periodic_factor(xi)).norm() < 1e-11);
        }
    }

    #[test]
    fn rejects_order_one() {
        assert!(matches!(WaveletFamily::bspline(1), Err(Error::InvalidOrder(1))));
        assert!(WaveletFamily::bspline(0).is_err());
    }

    #[test]
    fn order_two_knots_and_norm() {
        let fam = WaveletFamily::bspline(2).unwrap();
        let knots: Vec<f64> = (0..=4).map(|t| fam.psi_unnormalized(t as f64)).collect();
        for (v, e) in knots.iter().zip([0.0, 1.0, -2.0, 1.0, 0.0]) {
            assert!((v - e).abs() < 1e-14, "{knots:?}");
        }
        // closed-form energy of the piecewise linear ψ: Σ (a² + ab + b²)/3
        let energy: f64 = knots
            .windows(2)
            .map(|w| (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0)
            .sum();
        assert!((energy - 8.0 / 3.0).abs() < 1e-14);
        assert!((fam.psi_norm_const() - (3.0f64 / 8.0).sqrt()).abs() < 1e-15);
        assert_eq!(fam.support_len(), 4);
        assert_eq!(fam.m(), 2);
    }

    #[test]
    fn normalization_at_zero() {
        let fam = WaveletFamily::bspline(2).unwrap();
        assert!((fam.phi_hat(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(fam.psi_hat(0.0).norm() < 1e-15);
    }

    fn moment(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let panels = (hi - lo) as usize;
        integrate_panels(f, lo, hi, panels, Tolerance::relative(1e-13))
            .unwrap()
            .value
    }

    #[test]
    fn unit_norms_and_vanishing_moments() {
        for n in 2..=5 {
            let fam = WaveletFamily::bspline(n).unwrap();
            let t = 2.0 * n as f64;
            let phi_int = moment(|x| fam.phi(x), -(n as f64), 0.0);
            assert!((phi_int - 1.0).abs() < 1e-12, "n={n}");
            let l2 = moment(|x| fam.psi(x).powi(2), 0.0, t);
            assert!((l2 - 1.0).abs() < 1e-10, "n={n} {l2}");
            for m in 0..n {
                let mm = moment(|x| x.powi(m as i32) * fam.psi(x), 0.0, t);
                assert!(mm.abs() < 1e-10, "n={n} m={m} {mm}");
            }
            let first_nonzero = moment(|x| x.powi(n as i32) * fam.psi(x), 0.0, t);
            assert!(first_nonzero.abs() > 1e-6);
        }
    }

    #[test]
    fn order_three_moments() {
        let fam = WaveletFamily::bspline(3).unwrap();
        let m1 = moment(|x| x * fam.psi(x), 0.0, 6.0);
        let m2 = moment(|x| x * x * fam.psi(x), 0.0, 6.0);
        assert!(m1.abs() < 1e-10 && m2.abs() < 1e-10);
    }

    fn direct_transform(f: impl Fn(f64) -> f64, lo: f64, hi: f64, xi: f64) -> Complex64 {
        let panels = 4 * (hi - lo) as usize;
        let tol = Tolerance {
            abs: 1e-16,
            rel: 1e-13,
            max_panels: 10_000,
        };
        let re = integrate_panels(|t| f(t) * (xi * t).cos(), lo, hi, panels, tol).unwrap();
        let im = integrate_panels(|t| -f(t) * (xi * t).sin(), lo, hi, panels, tol).unwrap();
        Complex64::new(re.value, im.value)
    }

    #[test]
    fn fourier_closed_forms_match_direct_transforms() {
        for n in [2usize, 3] {
            let fam = WaveletFamily::bspline(n).unwrap();
            let nf = n as f64;
            for &xi in &[0.3, 1.0, 2.5, -4.0, 7.7, 13.0] {
                let phi_q = direct_transform(|t| fam.phi(t), -nf, 0.0, xi);
                let phi_c = fam.phi_hat(xi);
                assert!((phi_q - phi_c).norm() < 1e-10 * phi_c.norm().max(1e-3), "phi n={n} xi={xi}");
                // |φ̂| closed form
                let m = (2.0 * (xi / 2.0).sin() / xi).abs().powi(n as i32);
                assert!((phi_c.norm() - m).abs() < 1e-10 * m);
                let psi_q = direct_transform(|t| fam.psi(t), 0.0, 2.0 * nf, xi);
                let psi_c = fam.psi_hat(xi);
                assert!((psi_q - psi_c).norm() < 1e-9 * psi_c.norm().max(1e-3), "psi n={n} xi={xi} {psi_q} {psi_c}");
                let modulus = fam.psi_norm_const()
                    * xi.abs().powi(n as i32)
                    * (2.0 * (xi / 2.0).sin() / xi).abs().powi(2 * n as i32);
                assert!((psi_c.norm() - modulus).abs() < 1e-12 * modulus.max(1e-300));
            }
        }
    }

    #[test]
    fn decay_bound_holds() {
        let fam = WaveletFamily::bspline(3).unwrap();
        let c = fam.decay_constant();
        for k in 1..2000 {
            let xi = 0.01 * k as f64 * 1.37;
            assert!(fam.psi_hat(xi).norm() <= c * xi.powf(-fam.alpha()) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn shannon_descriptor_band() {
        let s = ShannonDescriptor;
        assert_eq!(s.psi_hat(4.0).re, 1.0);
        assert_eq!(s.psi_hat(-4.0).re, 1.0);
        assert_eq!(s.psi_hat(1.0).re, 0.0);
        assert_eq!(s.psi_hat(7.0).re, 0.0);
    }
}
