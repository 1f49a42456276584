//! Log-scale regression estimator of the memory parameter: empirical scale
//! variances, regression weights, the limiting covariance matrix V(ψ, d),
//! optimal weights and normal-approximation confidence intervals.
//!
//! Scales are indexed `J0..=J0+ℓ` and the weight vector `w` has `ℓ + 1`
//! entries, `w_i` multiplying `log σ̂²_{J0+i}`. Valid weights satisfy
//! `Bᵀw = b` with `B = [1 | i]` and `b = (0, 1/(2 log 2))`.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dwt::{max_scale, WaveletDecomposition};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::quadrature::KahanSum;
use crate::spectra::{asymptotic_norm_sq, density_domain, k_constant, k_domain};
use crate::wavelet_basis::FrequencyDescriptor;

/// Tolerance on the two weight constraints, relative to the size of the
/// sums involved.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Default smoothness exponent used by [`auto_j0`] when β is unknown.
pub const DEFAULT_BETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleEntry {
    pub j: usize,
    pub variance: f64,
    pub count: usize,
}

/// σ̂²_j = n_j^{-1} Σ_k W²_{j,k} for a contiguous range of scales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSpectrum {
    pub entries: Vec<ScaleEntry>,
}

impl ScaleSpectrum {
    pub fn j0(&self) -> usize {
        self.entries[0].j
    }

    pub fn ell(&self) -> usize {
        self.entries.len() - 1
    }

    /// m = Σ n_j over the scales held.
    pub fn total_count(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }
}

pub fn scale_spectrum(decomp: &WaveletDecomposition, j0: usize, ell: usize) -> Result<ScaleSpectrum> {
    if j0 + ell > decomp.max_scale() {
        return Err(Error::ScaleTooLarge {
            requested: j0 + ell,
            max: decomp.max_scale(),
        });
    }
    let entries = (j0..=j0 + ell)
        .map(|j| {
            let c = decomp.coeffs(j)?;
            if c.is_empty() {
                return Err(Error::IndexOutOfRange(format!("scale {j} holds no coefficients")));
            }
            let s: KahanSum = c.iter().map(|w| w * w).collect();
            Ok(ScaleEntry {
                j,
                variance: s.value() / c.len() as f64,
                count: c.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScaleSpectrum { entries })
}

/// b = (0, 1/(2 log 2)).
pub fn target() -> [f64; 2] {
    [0.0, 0.5 / LN_2]
}

/// Checks Σ w_i = 0 and 2 log 2 Σ i w_i = 1.
pub fn check_weights(w: &[f64]) -> Result<()> {
    if w.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least two weights, got {}", w.len())));
    }
    let sum: f64 = w.iter().sum();
    let abs: f64 = w.iter().map(|x| x.abs()).sum();
    let slope: f64 = w.iter().enumerate().map(|(i, x)| i as f64 * x).sum::<f64>() * 2.0 * LN_2;
    let slope_abs: f64 = w.iter().enumerate().map(|(i, x)| i as f64 * x.abs()).sum::<f64>() * 2.0 * LN_2;
    if sum.abs() > WEIGHT_TOLERANCE * abs.max(1.0) || (slope - 1.0).abs() > WEIGHT_TOLERANCE * slope_abs.max(1.0)
    {
        return Err(Error::InvalidArgument(format!(
            "weights violate the constraints: Σw = {sum:e}, 2log2 Σiw = {slope}"
        )));
    }
    Ok(())
}

/// Given the columns Q·1 and Q·i for some symmetric Q, returns
/// w = Q B (Bᵀ Q B)^{-1} b.
fn constrained_weights(q1: &[f64], qi: &[f64]) -> Result<Vec<f64>> {
    let g = Matrix::from_fn(2, |a, c| {
        let col = if c == 0 { q1 } else { qi };
        col.iter()
            .enumerate()
            .map(|(i, x)| if a == 0 { *x } else { i as f64 * x })
            .sum()
    });
    let y = Lu::new(&g)?.solve(&target());
    let w: Vec<f64> = q1.iter().zip(qi).map(|(a, c)| a * y[0] + c * y[1]).collect();
    check_weights(&w)?;
    Ok(w)
}

/// Weighted least-squares weights w = D B (BᵀDB)^{-1} b.
pub fn wls_weights(ell: usize, d: &Matrix) -> Result<Vec<f64>> {
    if ell < 1 {
        return Err(Error::InvalidArgument("ℓ must be at least 1".into()));
    }
    if d.dim() != ell + 1 {
        return Err(Error::InvalidArgument(format!("weight matrix is {0}×{0}, expected {1}×{1}", d.dim(), ell + 1)));
    }
    if !d.is_symmetric(1e-12) {
        return Err(Error::InvalidArgument("weight matrix is not symmetric".into()));
    }
    let low = d.symmetric_eigenvalues()[0];
    if low <= 0.0 {
        return Err(Error::NotPositiveSemidefinite { eigenvalue: low });
    }
    let ones = vec![1.0; ell + 1];
    let idx: Vec<f64> = (0..=ell).map(|i| i as f64).collect();
    constrained_weights(&d.mul_vec(&ones), &d.mul_vec(&idx))
}

/// Ordinary least-squares slope weights.
pub fn ls_weights(ell: usize) -> Result<Vec<f64>> {
    wls_weights(ell, &Matrix::identity(ell + 1))
}

/// V(ψ, d) together with the absolute error carried by its entries.
#[derive(Debug, Clone)]
pub struct AsymptoticVariance {
    pub matrix: Matrix,
    pub error: f64,
    pub k: f64,
}

/// V(ψ,d)_{i,j} = 4π 2^{2d|i-j|} 2^{min(i,j)} K(ψ,d)^{-2} ∫|D_∞,|i-j|(λ;d)|² dλ,
/// for i, j = 0..=ℓ.
pub fn avar_matrix(desc: &dyn FrequencyDescriptor, d: f64, ell: usize) -> Result<AsymptoticVariance> {
    let (lo, hi) = density_domain(desc);
    let (_, khi) = k_domain(desc);
    if !(d > lo && d <= hi && d < khi) {
        return Err(Error::MemoryOutOfRange {
            d,
            lower: lo,
            upper: hi.min(khi),
        });
    }
    let k = k_constant(desc, d)?;
    let norms = (0..=ell)
        .into_par_iter()
        .map(|u| asymptotic_norm_sq(desc, d, u))
        .collect::<Result<Vec<_>>>()?;
    let entry = |i: usize, j: usize, x: f64| {
        let u = i.abs_diff(j);
        4.0 * PI * 2f64.powf(2.0 * d * u as f64) * 2f64.powi(i.min(j) as i32) * x / (k.value * k.value)
    };
    let matrix = Matrix::from_fn(ell + 1, |i, j| entry(i, j, norms[i.abs_diff(j)].value));
    let mut error: f64 = 0.0;
    for i in 0..=ell {
        for j in 0..=ell {
            let n = &norms[i.abs_diff(j)];
            let v = matrix[(i, j)];
            let rel = n.error / n.value.abs().max(f64::MIN_POSITIVE) + 2.0 * k.error / k.value;
            error = error.max(if n.value == 0.0 { entry(i, j, n.error) } else { v.abs() * rel });
        }
    }
    let scale = (0..=ell).map(|i| matrix[(i, i)]).fold(0.0, f64::max);
    let low = matrix.symmetric_eigenvalues()[0];
    if low < -1e-10 * scale.max(1.0) {
        return Err(Error::NotPositiveSemidefinite { eigenvalue: low });
    }
    Ok(AsymptoticVariance {
        matrix,
        error,
        k: k.value,
    })
}

/// w^opt = V^{-1} B (Bᵀ V^{-1} B)^{-1} b for a given V.
pub fn optimal_weights_for(v: &Matrix) -> Result<Vec<f64>> {
    let ell = v.dim() - 1;
    let lu = Lu::new(v)?;
    let ones = vec![1.0; ell + 1];
    let idx: Vec<f64> = (0..=ell).map(|i| i as f64).collect();
    constrained_weights(&lu.solve(&ones), &lu.solve(&idx))
}

pub fn optimal_weights(desc: &dyn FrequencyDescriptor, d: f64, ell: usize) -> Result<Vec<f64>> {
    optimal_weights_for(&avar_matrix(desc, d, ell)?.matrix)
}

/// (2 - 2^{-ℓ}) wᵀ V w, the limit of m Var(d̂).
pub fn limiting_variance(v: &Matrix, w: &[f64]) -> f64 {
    let ell = v.dim() - 1;
    (2.0 - 2f64.powi(-(ell as i32))) * v.quadratic_form(w)
}

/// J0(n) = round(log2(n) / (1 + 2β)).
pub fn auto_j0(n: usize, beta: f64) -> usize {
    ((n as f64).log2() / (1.0 + 2.0 * beta)).round().max(0.0) as usize
}

/// [`auto_j0`] clipped so that scales J0..=J0+ℓ all exist for a sample of
/// length `n` analysed with filters of support length `support_len`.
pub fn resolve_j0(n: usize, support_len: usize, ell: usize, beta: f64) -> Result<usize> {
    let jn = max_scale(n, support_len)
        .ok_or_else(|| Error::InvalidArgument(format!("sample of length {n} has no wavelet coefficients")))?;
    if jn < ell {
        return Err(Error::ScaleTooLarge { requested: ell, max: jn });
    }
    Ok(auto_j0(n, beta).min(jn - ell))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionSpec {
    pub j0: usize,
    pub ell: usize,
    pub weights: Vec<f64>,
}

impl RegressionSpec {
    pub fn new(j0: usize, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(RegressionSpec {
            j0,
            ell: weights.len() - 1,
            weights,
        })
    }

    pub fn least_squares(j0: usize, ell: usize) -> Result<Self> {
        Self::new(j0, ls_weights(ell)?)
    }
}

/// d̂ = Σ_i w_i log σ̂²_{J0+i}.
pub fn point_estimate(spectrum: &ScaleSpectrum, spec: &RegressionSpec) -> Result<f64> {
    let used = used_entries(spectrum, spec)?;
    Ok(used.iter().zip(&spec.weights).map(|(e, w)| w * e.variance.ln()).sum())
}

fn used_entries<'a>(spectrum: &'a ScaleSpectrum, spec: &RegressionSpec) -> Result<&'a [ScaleEntry]> {
    let first = spectrum.j0();
    if spec.j0 < first || spec.j0 + spec.ell > first + spectrum.ell() {
        return Err(Error::IndexOutOfRange(format!(
            "regression scales {}..={} not covered by spectrum {}..={}",
            spec.j0,
            spec.j0 + spec.ell,
            first,
            first + spectrum.ell()
        )));
    }
    let used = &spectrum.entries[spec.j0 - first..=spec.j0 - first + spec.ell];
    if let Some(e) = used.iter().find(|e| !(e.variance > 0.0)) {
        return Err(Error::DegenerateVariance(e.j));
    }
    Ok(used)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleRow {
    pub j: usize,
    pub count: usize,
    pub variance: f64,
    pub log_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub d_hat: f64,
    pub j0: usize,
    pub ell: usize,
    pub weights: Vec<f64>,
    pub m: usize,
    /// (2 - 2^{-ℓ}) wᵀV(ψ, d̂)w; absent when d̂ leaves the interval on which
    /// V is defined.
    pub limiting_variance: Option<f64>,
    pub limiting_variance_error: Option<f64>,
    pub variance_note: Option<String>,
    pub interval: Option<ConfidenceInterval>,
    pub scales: Vec<ScaleRow>,
}

/// Point estimate plus the plug-in limiting variance V(ψ, d̂) and an
/// interval at `level`.
pub fn estimate_d(
    spectrum: &ScaleSpectrum,
    spec: &RegressionSpec,
    desc: &dyn FrequencyDescriptor,
    level: f64,
) -> Result<EstimateReport> {
    let used = used_entries(spectrum, spec)?;
    let d_hat = point_estimate(spectrum, spec)?;
    let (limiting_variance, limiting_variance_error, variance_note) = match avar_matrix(desc, d_hat, spec.ell) {
        Ok(v) => {
            let lv = limiting_variance(&v.matrix, &spec.weights);
            let w1: f64 = spec.weights.iter().map(|x| x.abs()).sum();
            let err = (2.0 - 2f64.powi(-(spec.ell as i32))) * v.error * w1 * w1;
            (Some(lv), Some(err), None)
        }
        Err(e @ Error::MemoryOutOfRange { .. }) => (None, None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let mut report = EstimateReport {
        d_hat,
        j0: spec.j0,
        ell: spec.ell,
        weights: spec.weights.clone(),
        m: used.iter().map(|e| e.count).sum(),
        limiting_variance,
        limiting_variance_error,
        variance_note,
        interval: None,
        scales: used
            .iter()
            .map(|e| ScaleRow {
                j: e.j,
                count: e.count,
                variance: e.variance,
                log_variance: e.variance.ln(),
            })
            .collect(),
    };
    report.interval = confidence_interval(&report, level);
    Ok(report)
}

/// d̂ ± z sqrt((2 - 2^{-ℓ}) wᵀVw / m), `None` without a variance
/// prediction or for a level outside (0, 1).
pub fn confidence_interval(report: &EstimateReport, level: f64) -> Option<ConfidenceInterval> {
    let v = report.limiting_variance?;
    if !(level > 0.0 && level < 1.0) || report.m == 0 || !v.is_finite() {
        return None;
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let half = z * (v / report.m as f64).sqrt();
    Some(ConfidenceInterval {
        level,
        lower: report.d_hat - half,
        upper: report.d_hat + half,
    })
}

/// Least-squares preliminary estimate, then optimal weights at that value
/// and a second estimate.
pub fn estimate_two_step(
    spectrum: &ScaleSpectrum,
    j0: usize,
    ell: usize,
    desc: &dyn FrequencyDescriptor,
    level: f64,
) -> Result<EstimateReport> {
    let prelim = point_estimate(spectrum, &RegressionSpec::least_squares(j0, ell)?)?;
    let spec = RegressionSpec::new(j0, optimal_weights(desc, prelim, ell)?)?;
    estimate_d(spectrum, &spec, desc, level)
}
