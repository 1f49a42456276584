//! M(d) models: f(λ) = |1 - e^{-iλ}|^{-2d} f*(λ).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::special::hurwitz_zeta;

/// Short-memory factor f*.
#[derive(Clone)]
pub enum ShortMemory {
    /// σ² |1 - Σ θ_k e^{-iλk}|² / |1 - Σ φ_k e^{-iλk}|².
    Arma { sigma2: f64, ar: Vec<f64>, ma: Vec<f64> },
    /// `scale` times the factor of the discretely sampled fractional
    /// Brownian motion, which equals 1 at the origin.
    Fbm { hurst: f64, scale: f64 },
    /// Any even, positive, bounded 2π-periodic function.
    Custom {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        beta: f64,
    },
}

impl fmt::Debug for ShortMemory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShortMemory::Arma { sigma2, ar, ma } => f
                .debug_struct("Arma")
                .field("sigma2", sigma2)
                .field("ar", ar)
                .field("ma", ma)
                .finish(),
            ShortMemory::Fbm { hurst, scale } => f
                .debug_struct("Fbm")
                .field("hurst", hurst)
                .field("scale", scale)
                .finish(),
            ShortMemory::Custom { beta, .. } => f.debug_struct("Custom").field("beta", beta).finish(),
        }
    }
}

/// Normalizing constant turning the FBM factor into the spectral density
/// of unit-variance fractional Gaussian noise,
/// Γ(2H + 1) sin(πH) / (2π).
pub fn fgn_constant(hurst: f64) -> f64 {
    gamma(2.0 * hurst + 1.0) * (PI * hurst).sin() / (2.0 * PI)
}

/// Maps λ into [-π, π].
pub(crate) fn wrap(lambda: f64) -> f64 {
    if (-PI..=PI).contains(&lambda) {
        lambda
    } else {
        (lambda + PI).rem_euclid(2.0 * PI) - PI
    }
}

/// |1 - e^{-iλ}| = 2 |sin(λ/2)|.
pub(crate) fn diff_modulus(lambda: f64) -> f64 {
    2.0 * (lambda / 2.0).sin().abs()
}

fn poly_modulus_sq(coeffs: &[f64], lambda: f64) -> f64 {
    // |1 - Σ c_k e^{-iλk}|²
    let mut acc = Complex64::new(1.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate() {
        acc -= Complex64::from_polar(c, -lambda * (k + 1) as f64);
    }
    acc.norm_sqr()
}

/// f*_FBM(λ) = |2 sin(λ/2)/λ|^{2H+1} + |2 sin(λ/2)|^{2H+1} Σ_{k≠0} |λ + 2kπ|^{-2H-1},
/// with the series summed through Hurwitz zeta values.
pub fn fbm_factor(hurst: f64, lambda: f64) -> f64 {
    let lambda = wrap(lambda);
    let s = 2.0 * hurst + 1.0;
    let x = lambda / (2.0 * PI);
    let (z1, _) = hurwitz_zeta(s, 1.0 + x);
    let (z2, _) = hurwitz_zeta(s, 1.0 - x);
    let series = (2.0 * PI).powf(-s) * (z1 + z2);
    let two_sin = diff_modulus(lambda);
    let head = if lambda == 0.0 {
        1.0
    } else {
        (two_sin / lambda.abs()).powf(s)
    };
    head + two_sin.powf(s) * series
}

impl ShortMemory {
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            ShortMemory::Arma { sigma2, ar, ma } => {
                sigma2 * poly_modulus_sq(ma, lambda) / poly_modulus_sq(ar, lambda)
            }
            ShortMemory::Fbm { hurst, scale } => scale * fbm_factor(*hurst, lambda),
            ShortMemory::Custom { f, .. } => f(wrap(lambda)),
        }
    }

    /// Smoothness exponent β of the class H(β, L) containing f*.
    pub fn beta(&self) -> f64 {
        match self {
            ShortMemory::Arma { .. } => 2.0,
            ShortMemory::Fbm { hurst, .. } => (2.0 * hurst + 1.0).min(2.0),
            ShortMemory::Custom { beta, .. } => *beta,
        }
    }
}

/// Generalized spectral density |1 - e^{-iλ}|^{-2d} f*(λ) with its class
/// metadata.
#[derive(Debug, Clone)]
pub struct MemoryModel {
    pub d: f64,
    pub fstar: ShortMemory,
    label: String,
}

fn check_stable(ar: &[f64]) -> Result<()> {
    // 1 - Σ φ_k z^k must not vanish on |z| = 1; look for a sign of trouble
    // on a fine grid of the circle.
    if ar.is_empty() {
        return Ok(());
    }
    let min = (0..=4096)
        .map(|k| poly_modulus_sq(ar, PI * k as f64 / 4096.0))
        .fold(f64::INFINITY, f64::min);
    if min < 1e-10 {
        return Err(Error::InvalidArgument(
            "AR polynomial vanishes on the unit circle".into(),
        ));
    }
    Ok(())
}

impl MemoryModel {
    /// ARFIMA(p, d, q) with the sign conventions 1 - Σ φ_k z^k and 1 - Σ θ_k z^k.
    pub fn arfima(ar: Vec<f64>, d: f64, ma: Vec<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !d.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ARFIMA needs σ² > 0 and finite d (got σ² = {sigma2}, d = {d})"
            )));
        }
        check_stable(&ar)?;
        if poly_modulus_sq(&ma, 0.0) == 0.0 {
            return Err(Error::InvalidArgument("MA polynomial vanishes at frequency zero".into()));
        }
        let label = if ar.is_empty() && ma.is_empty() && sigma2 == 1.0 {
            format!("arfima:0,{d},0")
        } else {
            let mut s = format!("arfima:{},{d},{}", ar.len(), ma.len());
            if !ar.is_empty() {
                s += &format!(";ar={}", join(&ar));
            }
            if !ma.is_empty() {
                s += &format!(";ma={}", join(&ma));
            }
            if sigma2 != 1.0 {
                s += &format!(";sigma2={sigma2}");
            }
            s
        };
        Ok(MemoryModel {
            d,
            fstar: ShortMemory::Arma { sigma2, ar, ma },
            label,
        })
    }

    /// Fractionally integrated white noise, f* ≡ σ².
    pub fn white_noise(d: f64, sigma2: f64) -> Result<Self> {
        let mut m = Self::arfima(Vec::new(), d, Vec::new(), sigma2)?;
        m.label = if sigma2 == 1.0 {
            format!("white:{d}")
        } else {
            format!("white:{d},{sigma2}")
        };
        Ok(m)
    }

    /// Unit-variance fractional Gaussian noise, d = H - 1/2.
    pub fn fgn(hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        Ok(MemoryModel {
            d: hurst - 0.5,
            fstar: ShortMemory::Fbm {
                hurst,
                scale: fgn_constant(hurst),
            },
            label: format!("fgn:{hurst}"),
        })
    }

    /// Discretely sampled fractional Brownian motion, d = H + 1/2 and
    /// f*(0) = 1.
    pub fn fbm(hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        Ok(MemoryModel {
            d: hurst + 0.5,
            fstar: ShortMemory::Fbm { hurst, scale: 1.0 },
            label: format!("fbm:{hurst}"),
        })
    }

    pub fn custom(d: f64, f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::InvalidArgument(format!("β must lie in (0, 2], got {beta}")));
        }
        if !(f(0.0) > 0.0) {
            return Err(Error::InvalidArgument("f*(0) must be positive".into()));
        }
        Ok(MemoryModel {
            d,
            fstar: ShortMemory::Custom { f, beta },
            label: format!("custom:{d}"),
        })
    }

    /// Parses `fgn:H`, `fbm:H`, `white:d[,σ²]` or
    /// `arfima:p,d,q[;ar=φ1,..][;ma=θ1,..][;sigma2=s]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::ModelParse(spec.to_string());
        let (kind, rest) = spec.trim().split_once(':').ok_or_else(bad)?;
        let mut parts = rest.split(';');
        let head: Vec<f64> = parts
            .next()
            .ok_or_else(bad)?
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let mut ar = Vec::new();
        let mut ma = Vec::new();
        let mut sigma2 = 1.0;
        for opt in parts {
            let (key, value) = opt.split_once('=').ok_or_else(bad)?;
            let values: Vec<f64> = value
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            match key.trim() {
                "ar" => ar = values,
                "ma" => ma = values,
                "sigma2" if values.len() == 1 => sigma2 = values[0],
                _ => return Err(bad()),
            }
        }
        match (kind.trim(), head.as_slice()) {
            ("fgn", [h]) if ar.is_empty() && ma.is_empty() => Self::fgn(*h),
            ("fbm", [h]) if ar.is_empty() && ma.is_empty() => Self::fbm(*h),
            ("white", [d]) => Self::white_noise(*d, sigma2),
            ("white", [d, s]) => Self::white_noise(*d, *s),
            ("arfima", [p, d, q]) => {
                if *p as usize != ar.len() || *q as usize != ma.len() || p.fract() != 0.0 || q.fract() != 0.0 {
                    return Err(bad());
                }
                Self::arfima(ar, *d, ma, sigma2)
            }
            _ => Err(bad()),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn fstar(&self, lambda: f64) -> f64 {
        self.fstar.eval(lambda)
    }

    pub fn fstar_at_zero(&self) -> f64 {
        self.fstar.eval(0.0)
    }

    pub fn beta(&self) -> f64 {
        self.fstar.beta()
    }

    /// Smallest integer K > d - 1/2 (at least 0): Δ^K X is stationary.
    pub fn differencing_order(&self) -> usize {
        let k = (self.d - 0.5).floor() + 1.0;
        if k < 0.0 {
            0
        } else {
            k as usize
        }
    }

    /// Generalized spectral density f(λ).
    pub fn gsd(&self, lambda: f64) -> Result<f64> {
        if lambda == 0.0 && self.d > 0.0 {
            return Err(Error::PoleAtZero(self.d));
        }
        if lambda == 0.0 {
            return Ok(if self.d == 0.0 { self.fstar(0.0) } else { 0.0 });
        }
        Ok(diff_modulus(lambda).powf(-2.0 * self.d) * self.fstar(lambda))
    }

    /// |1 - e^{-iλ}|^{2(m - d)} f*(λ): the density of Δ^m X, bounded when
    /// m ≥ d.
    pub fn differenced_density(&self, m: usize, lambda: f64) -> f64 {
        let e = 2.0 * (m as f64 - self.d);
        let base = diff_modulus(lambda);
        let factor = if e == 0.0 { 1.0 } else { base.powf(e) };
        factor * self.fstar(lambda)
    }

    /// Smallest L with |f*(λ) - f*(0)| ≤ L f*(0) |λ|^β over `points`
    /// frequencies of (0, π].
    pub fn holder_constant(&self, points: usize) -> f64 {
        let f0 = self.fstar_at_zero();
        let beta = self.beta();
        (1..=points)
            .map(|k| {
                let l = PI * k as f64 / points as f64;
                (self.fstar(l) - f0).abs() / (f0 * l.powf(beta))
            })
            .fold(0.0, f64::max)
    }

    /// Rejects wavelets with fewer vanishing moments than K.
    pub fn require_moments(&self, vanishing_moments: usize) -> Result<()> {
        let k = self.differencing_order();
        if vanishing_moments < k {
            return Err(Error::DifferencingOrder {
                vanishing_moments,
                required: k,
            });
        }
        Ok(())
    }
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("Hurst index must lie in (0, 1), got {h}")));
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}
