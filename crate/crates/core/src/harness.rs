//! Monte Carlo experiments: bias and variance of d̂ over a ladder of sample
//! sizes, approximation-rate tables, and the covariance of empirical scale
//! variances against its prediction.
//!
//! Replicates run in parallel but every statistic is aggregated in
//! replicate order, so identical configurations give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dwt::{decompose, max_scale, WaveletDecomposition};
use crate::error::{Error, Result};
use crate::estimator::{
    avar_matrix, limiting_variance, ls_weights, optimal_weights, point_estimate, resolve_j0, scale_spectrum,
    RegressionSpec, DEFAULT_BETA,
};
use crate::quadrature::KahanSum;
use crate::simulate::SamplerPlan;
use crate::spectra::{asymptotic_norm_sq, empvar_cov_prediction, k_constant, rate_check, MemoryModel, RateCheck};
use crate::wavelet_basis::WaveletFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalePolicy {
    /// J0 = round(log2 n / (1 + 2β)), clipped to the available scales.
    Auto {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    Fixed {
        j0: usize,
    },
}

impl Default for ScalePolicy {
    fn default() -> Self {
        ScalePolicy::Auto { beta: DEFAULT_BETA }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightPolicy {
    #[default]
    Ls,
    /// Optimal weights evaluated at the model's true d.
    Opt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default = "default_j_min")]
    pub j_min: usize,
    #[serde(default = "default_j_max")]
    pub j_max: usize,
    /// λ-grid points on (0, π) for the sup-norm density error.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Coarse scale j of the covariance check.
    #[serde(default = "default_cov_scale")]
    pub cov_scale: usize,
    #[serde(default = "default_cov_lags")]
    pub cov_lags: Vec<usize>,
    #[serde(default = "default_cov_n")]
    pub cov_n: usize,
    #[serde(default = "default_cov_replicates")]
    pub cov_replicates: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            j_min: default_j_min(),
            j_max: default_j_max(),
            grid: default_grid(),
            cov_scale: default_cov_scale(),
            cov_lags: default_cov_lags(),
            cov_n: default_cov_n(),
            cov_replicates: default_cov_replicates(),
        }
    }
}

/// An experiment, usually read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model in the syntax of [`MemoryModel::parse`].
    pub model: String,
    /// B-spline order N.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_ns")]
    pub n: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default)]
    pub scales: ScalePolicy,
    #[serde(default = "default_ell")]
    pub ell: usize,
    #[serde(default)]
    pub weights: WeightPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Rate and covariance tables; skipped when absent.
    #[serde(default)]
    pub theory: Option<TheoryConfig>,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_order() -> usize {
    2
}
fn default_ns() -> Vec<usize> {
    vec![1 << 12, 1 << 14, 1 << 16]
}
fn default_replicates() -> u64 {
    500
}
fn default_ell() -> usize {
    3
}
fn default_j_min() -> usize {
    3
}
fn default_j_max() -> usize {
    8
}
fn default_grid() -> usize {
    128
}
fn default_cov_scale() -> usize {
    6
}
fn default_cov_lags() -> Vec<usize> {
    vec![0, 1]
}
fn default_cov_n() -> usize {
    1 << 16
}
fn default_cov_replicates() -> u64 {
    2000
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn parsed_model(&self) -> Result<MemoryModel> {
        MemoryModel::parse(&self.model)
    }

    pub fn family(&self) -> Result<WaveletFamily> {
        WaveletFamily::bspline(self.order)
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.parsed_model()?;
        let family = self.family()?;
        model.require_moments(family.m())?;
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n.is_empty() {
            return Err(Error::Config("the n list is empty".into()));
        }
        if self.ell < 1 {
            return Err(Error::Config("ell must be at least 1".into()));
        }
        for &n in &self.n {
            self.start_scale(n)?;
        }
        if let Some(t) = &self.theory {
            if t.j_min > t.j_max || t.grid == 0 || t.cov_replicates < 2 {
                return Err(Error::Config("invalid theory section".into()));
            }
            if t.cov_lags.iter().any(|&u| u > t.cov_scale) {
                return Err(Error::Config("covariance lag exceeds the covariance scale".into()));
            }
            let jn = max_scale(t.cov_n, family.support_len()).unwrap_or(0);
            if t.cov_scale > jn {
                return Err(Error::Config(format!(
                    "covariance scale {} exceeds J(n) = {jn} for n = {}",
                    t.cov_scale, t.cov_n
                )));
            }
        }
        Ok(())
    }

    /// J0 for sample size `n`, checked against J(n).
    pub fn start_scale(&self, n: usize) -> Result<usize> {
        let t = 2 * self.order;
        match self.scales {
            ScalePolicy::Auto { beta } => resolve_j0(n, t, self.ell, beta),
            ScalePolicy::Fixed { j0 } => {
                let jn = max_scale(n, t)
                    .ok_or_else(|| Error::Config(format!("n = {n} is too short for the wavelet")))?;
                if j0 + self.ell > jn {
                    return Err(Error::ScaleTooLarge {
                        requested: j0 + self.ell,
                        max: jn,
                    });
                }
                Ok(j0)
            }
        }
    }

    fn weights(&self, model: &MemoryModel, family: &WaveletFamily) -> Result<Vec<f64>> {
        match self.weights {
            WeightPolicy::Ls => ls_weights(self.ell),
            WeightPolicy::Opt => optimal_weights(family, model.d, self.ell),
        }
    }
}

/// Mean and unbiased variance with compensated sums.
fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().copied().collect::<KahanSum>().value() / n;
    let ss = x.iter().map(|v| (v - mean) * (v - mean)).collect::<KahanSum>().value();
    (mean, if x.len() > 1 { ss / (n - 1.0) } else { 0.0 })
}

/// Sample covariance and its standard error from the spread of the
/// centred products.
pub fn mc_covariance(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, _) = mean_var(a);
    let (mb, _) = mean_var(b);
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let (mp, vp) = mean_var(&prods);
    let r = a.len() as f64;
    (mp * r / (r - 1.0), (vp / r).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasVarianceRow {
    pub n: usize,
    pub j0: usize,
    pub ell: usize,
    pub m: usize,
    pub replicates: u64,
    pub mean_d: f64,
    pub bias: f64,
    pub bias_se: f64,
    pub variance: f64,
    pub mse: f64,
    pub m_var: f64,
    /// (2 - 2^{-ℓ}) wᵀV(ψ, d)w at the true d.
    pub predicted: Option<f64>,
    pub predicted_error: Option<f64>,
    pub bias_envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub n: usize,
    pub replicate: u64,
    pub d_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasVarianceReport {
    pub rows: Vec<BiasVarianceRow>,
    pub estimates: Vec<EstimateRow>,
    /// Smallest C with |bias| ≤ C((m/n)^β + 1/m) on every row.
    pub bias_constant: f64,
    /// Smallest C with Var ≤ C/m on every row.
    pub variance_constant: f64,
    pub checks: Vec<EnvelopeCheck>,
}

/// Replicate stream for sample-size index `i`.
fn stream(i: usize, r: u64) -> u64 {
    ((i as u64) << 32) | r
}

pub fn run_bias_variance(config: &ExperimentConfig) -> Result<BiasVarianceReport> {
    config.validate()?;
    let model = config.parsed_model()?;
    let family = config.family()?;
    let weights = config.weights(&model, &family)?;
    let avar = avar_matrix(&family, model.d, config.ell).ok();
    let beta = model.beta();
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for (i, &n) in config.n.iter().enumerate() {
        let j0 = config.start_scale(n)?;
        let spec = RegressionSpec::new(j0, weights.clone())?;
        let bank = family.filter_bank(j0 + config.ell)?;
        let plan = SamplerPlan::new(&model, n, config.seed)?;
        let results = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let x = plan.sample(stream(i, r));
                let dec = decompose(&x, &bank, j0 + config.ell)?;
                let s = scale_spectrum(&dec, j0, config.ell)?;
                Ok((point_estimate(&s, &spec)?, s.total_count()))
            })
            .collect::<Result<Vec<(f64, usize)>>>()?;
        let m = results[0].1;
        let d_hats: Vec<f64> = results.iter().map(|r| r.0).collect();
        let (mean_d, variance) = mean_var(&d_hats);
        let bias = mean_d - model.d;
        let r = config.replicates as f64;
        let predicted = avar.as_ref().map(|v| limiting_variance(&v.matrix, &weights));
        let predicted_error = avar.as_ref().map(|v| {
            let w1: f64 = weights.iter().map(|w| w.abs()).sum();
            (2.0 - 2f64.powi(-(config.ell as i32))) * v.error * w1 * w1
        });
        let ratio = m as f64 / n as f64;
        rows.push(BiasVarianceRow {
            n,
            j0,
            ell: config.ell,
            m,
            replicates: config.replicates,
            mean_d,
            bias,
            bias_se: (variance / r).sqrt(),
            variance,
            mse: bias * bias + variance,
            m_var: m as f64 * variance,
            predicted,
            predicted_error,
            bias_envelope: ratio.powf(beta) + 1.0 / m as f64,
        });
        estimates.extend(d_hats.iter().enumerate().map(|(k, &d_hat)| EstimateRow {
            n,
            replicate: k as u64,
            d_hat,
        }));
    }
    let bias_constant = rows.iter().map(|r| r.bias.abs() / r.bias_envelope).fold(0.0, f64::max);
    let variance_constant = rows.iter().map(|r| r.m_var).fold(0.0, f64::max);
    let checks = bias_variance_checks(&rows);
    Ok(BiasVarianceReport {
        rows,
        estimates,
        bias_constant,
        variance_constant,
        checks,
    })
}

fn bias_variance_checks(rows: &[BiasVarianceRow]) -> Vec<EnvelopeCheck> {
    let mut out = Vec::new();
    for r in rows {
        if let Some(p) = r.predicted {
            let q = r.m_var / p;
            out.push(EnvelopeCheck {
                name: format!("variance envelope n={}", r.n),
                passed: (0.5..=2.0).contains(&q),
                detail: format!("m·Var / predicted = {q:.4}"),
            });
        }
    }
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let se = (first.bias_se.powi(2) + last.bias_se.powi(2)).sqrt();
        out.push(EnvelopeCheck {
            name: "bias does not grow with n".into(),
            passed: last.bias.abs() <= first.bias.abs() + 3.0 * se,
            detail: format!(
                "|bias| {:.3e} at n={} vs {:.3e} at n={} (3 SE = {:.3e})",
                last.bias.abs(),
                last.n,
                first.bias.abs(),
                first.n,
                3.0 * se
            ),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceRow {
    pub j: usize,
    pub u: usize,
    pub n: usize,
    pub n_j: usize,
    pub n_ju: usize,
    pub replicates: u64,
    pub mc_cov: f64,
    pub mc_se: f64,
    pub predicted: f64,
    /// n_{j-u} Cov / (σ²_j σ²_{j-u}) from the Monte Carlo covariance.
    pub normalized: f64,
    /// 4π ‖D_∞,u‖² / (2^{-2du} K(ψ,d)²).
    pub limit: f64,
    pub limit_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    pub rates: Vec<RateCheck>,
    pub covariances: Vec<CovarianceRow>,
    pub checks: Vec<EnvelopeCheck>,
}

/// (σ̂²_j, S_{j-u} / n_{j-u}) where S_{j-u} sums the squares of the first
/// 2^u n_j coefficients at scale j - u, the pairing for which the
/// covariance equals (2/n_{j-u}) M²_{n_j}(D_{j,u}) exactly.
pub fn empirical_variance_pair(decomp: &WaveletDecomposition, j: usize, u: usize) -> Result<(f64, f64)> {
    let coarse = decomp.coeffs(j)?;
    let fine = decomp.coeffs(j - u)?;
    let n_j = coarse.len();
    let take = n_j << u;
    if n_j == 0 || take > fine.len() {
        return Err(Error::IndexOutOfRange(format!("scale pair ({j}, {}) is too short", j - u)));
    }
    let a = coarse.iter().map(|w| w * w).collect::<KahanSum>().value() / n_j as f64;
    let b = fine[..take].iter().map(|w| w * w).collect::<KahanSum>().value() / fine.len() as f64;
    Ok((a, b))
}

pub fn run_theory_checks(config: &ExperimentConfig) -> Result<TheoryReport> {
    config.validate()?;
    let t = config.theory.clone().unwrap_or_default();
    let model = config.parsed_model()?;
    let family = config.family()?;
    let bank = family.filter_bank(t.j_max.max(t.cov_scale))?;
    let rates = (t.j_min..=t.j_max)
        .into_par_iter()
        .map(|j| rate_check(&model, &family, &bank, j, t.grid))
        .collect::<Result<Vec<_>>>()?;

    let plan = SamplerPlan::new(&model, t.cov_n, config.seed)?;
    let j = t.cov_scale;
    let pairs = (0..t.cov_replicates)
        .into_par_iter()
        .map(|r| {
            let dec = decompose(&plan.sample(r), &bank, j)?;
            t.cov_lags
                .iter()
                .map(|&u| empirical_variance_pair(&dec, j, u))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let k = k_constant(&family, model.d)?;
    let t_bank = config.family()?.support_len();
    let mut covariances = Vec::new();
    for (idx, &u) in t.cov_lags.iter().enumerate() {
        let a: Vec<f64> = pairs.iter().map(|p| p[idx].0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p[idx].1).collect();
        let (mc_cov, mc_se) = mc_covariance(&a, &b);
        let n_j = crate::dwt::scale_count(t.cov_n, t_bank, j);
        let n_ju = crate::dwt::scale_count(t.cov_n, t_bank, j - u);
        let predicted = empvar_cov_prediction(&model, &bank, j, u, n_j, n_ju)?;
        let s1 = crate::spectra::variance_sigma2(&model, &bank, j)?.value;
        let s2 = crate::spectra::variance_sigma2(&model, &bank, j - u)?.value;
        let norm = asymptotic_norm_sq(&family, model.d, u)?;
        let factor = 4.0 * std::f64::consts::PI * 2f64.powf(2.0 * model.d * u as f64) / (k.value * k.value);
        covariances.push(CovarianceRow {
            j,
            u,
            n: t.cov_n,
            n_j,
            n_ju,
            replicates: t.cov_replicates,
            mc_cov,
            mc_se,
            predicted,
            normalized: n_ju as f64 * mc_cov / (s1 * s2),
            limit: factor * norm.value,
            limit_error: factor * (norm.error + 2.0 * norm.value * k.error / k.value),
        });
    }
    let checks = theory_checks(&rates, &covariances);
    Ok(TheoryReport {
        rates,
        covariances,
        checks,
    })
}

/// Growth of log2 e_j: least-squares slope against j.
pub fn log2_slope(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ys: Vec<f64> = values.iter().map(|v| v.log2()).collect();
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = ys.iter().enumerate().map(|(i, y)| (i as f64 - xm) * (y - ym)).sum();
    let den: f64 = (0..values.len()).map(|i| (i as f64 - xm).powi(2)).sum();
    num / den
}

/// Normalized approximation errors e_j (first entry at the smallest j) are
/// bounded by `3 e_first` and settling: the log2 slope over the upper half
/// of the range is non-positive or at most half the slope over the lower
/// half. Errors at a sharp rate may approach their limit from below, so
/// this does not require them to decrease.
pub fn rate_trend_ok(values: &[f64]) -> bool {
    if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let bounded = values.iter().all(|&v| v <= 3.0 * values[0]);
    if values.len() < 4 || values.iter().any(|&v| v <= 0.0) {
        return bounded;
    }
    let mid = values.len() / 2;
    let head = log2_slope(&values[..=mid]);
    let tail = log2_slope(&values[mid..]);
    bounded && tail <= head.max(0.0) / 2.0
}

fn theory_checks(rates: &[RateCheck], covs: &[CovarianceRow]) -> Vec<EnvelopeCheck> {
    let mut out = Vec::new();
    if !rates.is_empty() {
        let v: Vec<f64> = rates.iter().map(|r| r.variance_error).collect();
        let d: Vec<f64> = rates.iter().map(|r| r.density_error).collect();
        out.push(EnvelopeCheck {
            name: "variance approximation rate".into(),
            passed: rate_trend_ok(&v),
            detail: format!("normalized errors {v:?}"),
        });
        out.push(EnvelopeCheck {
            name: "density approximation rate".into(),
            passed: rate_trend_ok(&d),
            detail: format!("normalized errors {d:?}"),
        });
    }
    for c in covs {
        out.push(EnvelopeCheck {
            name: format!("covariance prediction j={} u={}", c.j, c.u),
            passed: (c.mc_cov - c.predicted).abs() <= 3.0 * c.mc_se,
            detail: format!("MC {:.4e} ± {:.1e} vs predicted {:.4e}", c.mc_cov, c.mc_se, c.predicted),
        });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputFile>,
    /// SHA-256 over the concatenated per-file digests.
    pub content_hash: String,
    pub bias_constant: f64,
    pub variance_constant: f64,
    pub checks: Vec<EnvelopeCheck>,
    pub passed: bool,
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<OutputFile> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    drop(w);
    Ok(OutputFile {
        file: name.to_string(),
        sha256: hex::encode(Sha256::digest(fs::read(&path)?)),
    })
}

/// Runs the configured experiments and writes `bias_variance.csv`,
/// `estimates.csv`, optionally `rates.csv` and `covariance.csv`, and
/// `manifest.json` into `dir`.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let bv = run_bias_variance(config)?;
    let theory = match config.theory {
        Some(_) => Some(run_theory_checks(config)?),
        None => None,
    };
    fs::create_dir_all(dir)?;
    let mut outputs = vec![
        write_csv(dir, "bias_variance.csv", &bv.rows)?,
        write_csv(dir, "estimates.csv", &bv.estimates)?,
    ];
    let mut checks = bv.checks.clone();
    if let Some(t) = &theory {
        outputs.push(write_csv(dir, "rates.csv", &t.rates)?);
        outputs.push(write_csv(dir, "covariance.csv", &t.covariances)?);
        checks.extend(t.checks.iter().cloned());
    }
    let mut hasher = Sha256::new();
    for o in &outputs {
        hasher.update(o.sha256.as_bytes());
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        outputs,
        content_hash: hex::encode(hasher.finalize()),
        bias_constant: bv.bias_constant,
        variance_constant: bv.variance_constant,
        passed: checks.iter().all(|c| c.passed),
        checks,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
