//! Large-scale limits: the densities D_∞,u(·; d), the variance constant
//! K(ψ, d) and the norms ‖D_∞,u‖₂².

use std::f64::consts::PI;

use num_complex::Complex64;

use super::density::e_u;
use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss, integrate, integrate_breaks, Integral, Tolerance};
use crate::special::hurwitz_zeta;
use crate::wavelet_basis::FrequencyDescriptor;

/// Absolute bound on the neglected tail of truncated lattice sums.
pub const TAIL_BOUND: f64 = 1e-10;

/// Relative accuracy requested for K(ψ, d).
pub const K_TOLERANCE: f64 = 1e-10;

/// Interval of d on which D_∞,u is defined: the lattice sum converges for
/// d > 1/2 - α and the l = 0 term stays bounded for d ≤ M.
pub fn density_domain(desc: &dyn FrequencyDescriptor) -> (f64, f64) {
    desc.admissible_memory(0.0)
}

/// Interval of d on which K(ψ, d) is finite: (1/2 - α, M + 1/2).
pub fn k_domain(desc: &dyn FrequencyDescriptor) -> (f64, f64) {
    let (lower, upper) = desc.admissible_memory(0.0);
    (lower, upper + 0.5)
}

fn check(d: f64, (lower, upper): (f64, f64), upper_open: bool) -> Result<()> {
    let above = if upper_open { d < upper } else { d <= upper };
    if d > lower && above {
        Ok(())
    } else {
        Err(Error::MemoryOutOfRange { d, lower, upper })
    }
}

/// Σ_q |a + P q|^{-s} over q ∈ Z for a ∈ [0, P).
fn lattice_power_sum(s: f64, a: f64, period: f64) -> f64 {
    let x = a / period;
    let mut total = 0.0;
    if x > 0.0 {
        total += hurwitz_zeta(s, x).0;
    }
    total += hurwitz_zeta(s, 1.0 - x).0;
    period.powf(-s) * total
}

fn summand(desc: &dyn FrequencyDescriptor, d: f64, u: usize, xi: f64) -> Vec<Complex64> {
    let p = 2f64.powi(-(u as i32));
    let w = xi.abs().powf(-2.0 * d) * desc.psi_hat(xi).conj() * desc.psi_hat(p * xi);
    e_u(u, xi).into_iter().map(|e| e * w).collect()
}

/// D_∞,u(λ; d) = Σ_l |λ + 2lπ|^{-2d} e_u(λ + 2lπ) conj ψ̂(λ + 2lπ) ψ̂(2^{-u}(λ + 2lπ)).
///
/// Homogeneous descriptors are summed in closed form through Hurwitz zeta
/// values, band-limited ones exactly over their support; otherwise the
/// series is truncated where the bound C² 2^{uα} Σ (π(2|l| - 1))^{-2(d+α)}
/// on the tail falls below [`TAIL_BOUND`].
pub fn cross_density_asymptotic(
    desc: &dyn FrequencyDescriptor,
    d: f64,
    u: usize,
    lambda: f64,
) -> Result<Vec<Complex64>> {
    check(d, density_domain(desc), false)?;
    let width = 1usize << u;
    let mut out = vec![Complex64::new(0.0, 0.0); width];
    if let Some(n) = desc.homogeneous_degree() {
        // ψ̂(ξ) = P(ξ) ξ^{-N} with P 2π-periodic: on each class
        // ξ = λ + 2rπ + 2^{u+1}π q the product e_u conj P(ξ) P(2^{-u}ξ) is
        // constant and the rest is 2^{uN} |ξ|^{-2d-2N}.
        let s = 2.0 * d + 2.0 * n as f64;
        let period = 2.0 * PI * width as f64;
        let scale = 2f64.powi((u * n) as i32);
        for r in 0..width {
            let xi = lambda + 2.0 * PI * r as f64;
            let a = xi.rem_euclid(period);
            let g = desc.periodic_factor(xi).conj() * desc.periodic_factor(xi / width as f64);
            if g == Complex64::new(0.0, 0.0) {
                continue;
            }
            let lattice = if a == 0.0 {
                // the ξ = 0 term is dropped: P vanishes there
                2.0 * period.powf(-s) * hurwitz_zeta(s, 1.0).0
            } else {
                lattice_power_sum(s, a, period)
            };
            for (o, e) in out.iter_mut().zip(e_u(u, xi)) {
                *o += e * g * (scale * lattice);
            }
        }
        return Ok(out);
    }
    let range = if let Some(radius) = desc.frequency_support() {
        let lo = ((-radius - lambda) / (2.0 * PI)).floor() as i64;
        let hi = ((radius - lambda) / (2.0 * PI)).ceil() as i64;
        lo..=hi
    } else {
        let alpha = desc.decay_exponent();
        let c = desc.decay_constant();
        let s = 2.0 * (d + alpha);
        let amp = 2.0 * c * c * 2f64.powf(u as f64 * alpha) * PI.powf(-s) / (2.0 * (s - 1.0));
        // amp (2L + 1)^{1-s} ≤ TAIL_BOUND
        let l = ((amp / TAIL_BOUND).powf(1.0 / (s - 1.0)) / 2.0).ceil() as i64 + 1;
        -l..=l
    };
    for l in range {
        let xi = lambda + 2.0 * PI * l as f64;
        if xi == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(summand(desc, d, u, xi)) {
            *o += v;
        }
    }
    Ok(out)
}

/// K(ψ, d) = ∫ |ξ|^{-2d} |ψ̂(ξ)|² dξ.
///
/// The integral over (0, 1) is taken after the substitution ξ = t^p that
/// flattens the ξ^{2(M-d)} behaviour at the origin; (1, R) is covered by
/// panels of length 2π and the remainder beyond R is bounded by
/// C² R^{1-2(d+α)} / (2(d+α) - 1).
pub fn k_constant(desc: &dyn FrequencyDescriptor, d: f64) -> Result<Integral> {
    check(d, k_domain(desc), true)?;
    let tol = Tolerance::relative(K_TOLERANCE);
    let g = |xi: f64| xi.powf(-2.0 * d) * desc.psi_hat(xi).norm_sqr();
    if let Some(radius) = desc.frequency_support() {
        let mut b = vec![0.0];
        b.extend(desc.breakpoints().into_iter().filter(|&x| x > 0.0 && x < radius));
        b.push(radius);
        return Ok(integrate_breaks(g, &b, tol)?.scale(2.0));
    }
    let near = match desc.vanishing_moments() {
        Some(m) => {
            let e = 2.0 * (m as f64 - d);
            let p = 1.0 / (e + 1.0);
            integrate(|t: f64| g(t.powf(p)) * p * t.powf(p - 1.0), 0.0, 1.0, tol)?
        }
        None => integrate(g, 0.0, 1.0, tol)?,
    };
    let alpha = desc.decay_exponent();
    let c = desc.decay_constant();
    let s = 2.0 * (d + alpha);
    // tail bound c² R^{1-s} / (s - 1) below TAIL_BOUND · 1e-2
    let radius = (c * c / ((s - 1.0) * TAIL_BOUND * 1e-2)).powf(1.0 / (s - 1.0)).max(4.0 * PI);
    let periods = (radius / (2.0 * PI)).ceil() as usize;
    let adaptive_periods = periods.min(64);
    let mut b = vec![1.0];
    b.extend((1..=adaptive_periods).map(|k| 2.0 * PI * k as f64));
    let mid = integrate_breaks(g, &b, tol)?;
    // far panels: smooth on each period, fixed high-order Gauss rule
    let far = if periods > adaptive_periods {
        let a = 2.0 * PI * adaptive_periods as f64;
        composite_gauss(g, a, 2.0 * PI * periods as f64, periods - adaptive_periods, 24)
    } else {
        0.0
    };
    let edge = 2.0 * PI * periods as f64;
    let tail = c * c * edge.powf(1.0 - s) / (s - 1.0);
    let half = near.add(mid).add(Integral {
        value: far,
        error: tail,
        evaluations: 24 * (periods - adaptive_periods),
    });
    Ok(half.scale(2.0))
}

/// ∫_{-π}^{π} |D_∞,u(λ; d)|² dλ.
pub fn asymptotic_norm_sq(desc: &dyn FrequencyDescriptor, d: f64, u: usize) -> Result<Integral> {
    check(d, density_domain(desc), false)?;
    let f = |l: f64| {
        cross_density_asymptotic(desc, d, u, l)
            .map(|v| v.iter().map(Complex64::norm_sqr).sum::<f64>())
            .unwrap_or(f64::NAN)
    };
    let mut b: Vec<f64> = vec![0.0];
    b.extend((0..20).rev().map(|k| PI * 0.5f64.powi(k + 1)));
    let mut brk = desc.breakpoints();
    brk.retain(|&x| x > 0.0 && x < PI);
    b.extend(brk);
    b.push(PI);
    b.sort_by(f64::total_cmp);
    b.dedup();
    let r = integrate_breaks(f, &b, Tolerance::relative(1e-10))?;
    if !r.value.is_finite() {
        return Err(Error::Quadrature { achieved: f64::NAN });
    }
    // |D(-λ)| = |D(λ)|
    Ok(r.scale(2.0))
}

/// ∫_{-π}^{π} D_∞,0(λ; d) dλ, equal to K(ψ, d).
pub fn asymptotic_density_integral(desc: &dyn FrequencyDescriptor, d: f64) -> Result<Integral> {
    check(d, density_domain(desc), false)?;
    let f = |l: f64| {
        cross_density_asymptotic(desc, d, 0, l)
            .map(|v| v[0].re)
            .unwrap_or(f64::NAN)
    };
    let mut b: Vec<f64> = vec![0.0];
    b.extend((0..20).rev().map(|k| PI * 0.5f64.powi(k + 1)));
    b.push(PI);
    Ok(integrate_breaks(f, &b, Tolerance::relative(1e-10))?.scale(2.0))
}
