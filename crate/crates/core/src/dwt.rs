//! Wavelet coefficients of a finite sample by direct convolution and
//! downsampling.
//!
//! The input is indexed `x_1..x_n`; scale `j` keeps only the coefficients
//! `W_{j,k} = Σ_l x_l h_{j, 2^j k - l}` whose filter window lies inside the
//! sample, `0 ≤ k ≤ 2^{-j}(n - T + 1) - T`. Nothing is padded.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::binomial;
use crate::wavelet_basis::{FilterBank, ScaleFilter};

/// Number of in-sample coefficients at scale `j`:
/// `floor(2^{-j}(n - T + 1)) - T + 1`, clamped at zero.
pub fn scale_count(n: usize, support_len: usize, j: usize) -> usize {
    if n + 1 < support_len {
        return 0;
    }
    let usable = (n + 1 - support_len) >> j;
    (usable + 1).saturating_sub(support_len)
}

/// Largest `j` with at least one coefficient, `None` when even scale 0 is
/// empty.
pub fn max_scale(n: usize, support_len: usize) -> Option<usize> {
    if scale_count(n, support_len, 0) == 0 {
        return None;
    }
    let mut j = 0;
    while scale_count(n, support_len, j + 1) > 0 {
        j += 1;
    }
    Some(j)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveletDecomposition {
    pub n: usize,
    pub support_len: usize,
    scales: Vec<Vec<f64>>,
}

impl WaveletDecomposition {
    /// Wraps precomputed per-scale coefficients, scale 0 first.
    pub fn from_scales(n: usize, support_len: usize, scales: Vec<Vec<f64>>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidArgument("decomposition needs at least one scale".into()));
        }
        Ok(WaveletDecomposition {
            n,
            support_len,
            scales,
        })
    }

    pub fn max_scale(&self) -> usize {
        self.scales.len() - 1
    }

    pub fn coeffs(&self, j: usize) -> Result<&[f64]> {
        self.scales
            .get(j)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::IndexOutOfRange(format!("scale {j} > {}", self.max_scale())))
    }

    pub fn count(&self, j: usize) -> usize {
        self.scales.get(j).map_or(0, Vec::len)
    }

    pub fn get(&self, j: usize, k: usize) -> Result<f64> {
        let c = self.coeffs(j)?;
        c.get(k)
            .copied()
            .ok_or_else(|| Error::IndexOutOfRange(format!("k = {k} at scale {j} (n_j = {})", c.len())))
    }

    /// `(j, k, W_{j,k})` in scale-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.scales
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().enumerate().map(move |(k, &w)| (j, k, w)))
    }
}

fn check_range(n: usize, bank: &FilterBank, j_max: usize) -> Result<()> {
    let t = bank.support_len();
    let jn = max_scale(n, t).ok_or_else(|| {
        Error::InvalidArgument(format!("sample of length {n} too short for support length {t}"))
    })?;
    if j_max > jn {
        return Err(Error::ScaleTooLarge {
            requested: j_max,
            max: jn,
        });
    }
    if j_max > bank.max_scale() {
        return Err(Error::MissingScale(j_max));
    }
    Ok(())
}

/// Σ_i taps[i] y[base - i], i.e. a correlation against the reversed
/// window of `y` ending at `base`.
fn window_dot(taps: &[f64], y: &[f64], base: usize) -> f64 {
    taps.iter()
        .enumerate()
        .map(|(i, &h)| h * y[base - i])
        .sum()
}

fn filter_scale(x: &[f64], filter: &ScaleFilter, count: usize) -> Vec<f64> {
    // x_l with l = 2^j k - m, m = offset + i; 0-based position l - 1.
    let step = 1usize << filter.j;
    let lead = (-filter.offset) as usize - 1;
    // Rounding leaves the stored taps with a remainder modulo (1 - z)^M of
    // size eps Σ|h| L^{M-1}, all of it on the first M taps. Those taps are
    // replaced by the exact (1 - z)^M h̃ values.
    let m = filter.vanishing_moments.min(filter.coeffs.len());
    let head = dd::exact_head(&filter.coeffs, m);
    let tail = &filter.coeffs[m..];
    (0..count)
        .map(|k| {
            let base = step * k + lead;
            let h: f64 = head
                .iter()
                .enumerate()
                .map(|(i, &(hi, lo))| (hi + lo) * x[base - i])
                .sum();
            window_dot(tail, x, base - m) + h
        })
        .collect()
}

/// `W_{j,k}` for `j = 0..=j_max` and every `k` in the valid index set.
pub fn decompose(x: &[f64], bank: &FilterBank, j_max: usize) -> Result<WaveletDecomposition> {
    check_range(x.len(), bank, j_max)?;
    let t = bank.support_len();
    let scales = (0..=j_max)
        .into_par_iter()
        .map(|j| Ok(filter_scale(x, bank.scale(j)?, scale_count(x.len(), t, j))))
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveletDecomposition {
        n: x.len(),
        support_len: t,
        scales,
    })
}

/// Δ^m x, aligned so that entry `l - 1` holds the difference ending at
/// `x_l` (entries before index `m` are left at zero and never read).
pub fn difference(x: &[f64], m: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..=m)
        .map(|r| if r % 2 == 0 { 1.0 } else { -1.0 } * binomial(m, r))
        .collect();
    let mut y = vec![0.0; x.len()];
    for l in m..x.len() {
        y[l] = window_dot(&weights, x, l);
    }
    y
}

/// Same coefficients computed as `↓^j [h̃_j ⋆ Δ^M x]`.
///
/// The reduced filter grows like `2^{j(M + 1/2)}` while the coefficients
/// stay O(1), so the differenced series, the deflated taps and the dot
/// products are all carried in double-double arithmetic.
pub fn decompose_via_difference(
    x: &[f64],
    bank: &FilterBank,
    j_max: usize,
) -> Result<WaveletDecomposition> {
    check_range(x.len(), bank, j_max)?;
    let t = bank.support_len();
    let m = bank.vanishing_moments();
    let y = dd::difference(x, m);
    let scales = (0..=j_max)
        .into_par_iter()
        .map(|j| {
            let f = bank.scale(j)?;
            let taps = dd::deflate(&f.coeffs, m);
            let step = 1usize << j;
            let lead = (-f.offset) as usize - 1;
            Ok((0..scale_count(x.len(), t, j))
                .map(|k| dd::window_dot(&taps, &y, step * k + lead))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveletDecomposition {
        n: x.len(),
        support_len: t,
        scales,
    })
}

/// Unevaluated sums `hi + lo` with |lo| ≤ ulp(hi)/2.
mod dd {
    pub type Dd = (f64, f64);

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn add(a: Dd, b: Dd) -> Dd {
        let (s, e) = two_sum(a.0, b.0);
        let e = e + (a.1 + b.1);
        let hi = s + e;
        (hi, e - (hi - s))
    }

    fn neg(a: Dd) -> Dd {
        (-a.0, -a.1)
    }

    pub fn difference(x: &[f64], m: usize) -> Vec<Dd> {
        let mut y: Vec<Dd> = x.iter().map(|&v| (v, 0.0)).collect();
        for s in 1..=m {
            for l in (s..y.len()).rev() {
                y[l] = add(y[l], neg(y[l - 1]));
            }
        }
        for v in y.iter_mut().take(m) {
            *v = (0.0, 0.0);
        }
        y
    }

    /// Quotient of `q` by `(1 - z)^times`, same recursion as the filter
    /// bank's deflation.
    pub fn deflate(q: &[f64], times: usize) -> Vec<Dd> {
        let mut cur: Vec<Dd> = q.iter().map(|&v| (v, 0.0)).collect();
        for _ in 0..times {
            let n = cur.len() - 1;
            let mut b = vec![(0.0, 0.0); n];
            let mut carry = (0.0, 0.0);
            for k in (1..=n).rev() {
                carry = add(carry, cur[k]);
                b[k - 1] = carry;
            }
            cur = b.into_iter().map(neg).collect();
        }
        cur
    }

    /// First `m` taps of `(1 - z)^m · deflate(q, m)`; the remaining taps
    /// coincide with `q` to double-double accuracy.
    pub fn exact_head(q: &[f64], m: usize) -> Vec<Dd> {
        let c = deflate(q, m);
        let mut head = vec![(0.0, 0.0); m];
        // coefficient k of (1 - z)^m C is Σ_r (-1)^r binom(m, r) c_{k-r}
        for (k, out) in head.iter_mut().enumerate() {
            for r in 0..=k.min(m) {
                if let Some(&v) = c.get(k - r) {
                    let w = if r % 2 == 0 { 1.0 } else { -1.0 } * super::binomial(m, r);
                    let p = w * v.0;
                    *out = add(*out, (p, w.mul_add(v.0, -p) + w * v.1));
                }
            }
        }
        head
    }

    pub fn window_dot(taps: &[Dd], y: &[Dd], base: usize) -> f64 {
        let mut acc = (0.0, 0.0);
        for (i, &(th, tl)) in taps.iter().enumerate() {
            let (yh, yl) = y[base - i];
            let p = th * yh;
            let e = th.mul_add(yh, -p) + (th * yl + tl * yh);
            acc = add(acc, (p, e));
        }
        acc.0 + acc.1
    }
}

/// `W_{j,k}` together with the `2^u` finer coefficients
/// `W_{j-u, 2^u k + v}`, `v = 0..2^u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetweenScaleVector {
    pub j: usize,
    pub u: usize,
    pub k: usize,
    pub coarse: f64,
    pub fine: Vec<f64>,
}

pub fn between_scale(
    decomp: &WaveletDecomposition,
    j: usize,
    u: usize,
    k: usize,
) -> Result<BetweenScaleVector> {
    if u > j {
        return Err(Error::IndexOutOfRange(format!("scale lag {u} exceeds scale {j}")));
    }
    let coarse = decomp.get(j, k)?;
    let fine = (0..1usize << u)
        .map(|v| decomp.get(j - u, (k << u) + v))
        .collect::<Result<Vec<_>>>()?;
    Ok(BetweenScaleVector {
        j,
        u,
        k,
        coarse,
        fine,
    })
}
