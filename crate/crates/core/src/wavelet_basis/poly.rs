//! Dense polynomials in a local variable τ ∈ [0, 1], used for the
//! piecewise-polynomial (spline) pieces of φ and ψ.

/// Polynomial Σ c_k τ^k, lowest degree first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// ∫_0^τ p(s) ds
    pub fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(0.0);
        out.extend(self.0.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|k| self.0.get(k).copied().unwrap_or(0.0) + other.0.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly(self.0.iter().map(|v| v * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// q(τ) = p(c + r τ)
    pub fn compose_affine(&self, c: f64, r: f64) -> Poly {
        // Horner in polynomial arithmetic: p(x) = (...(p_n x + p_{n-1}) x + ...)
        let lin = Poly(vec![c, r]);
        let mut acc = Poly(vec![0.0]);
        for &coef in self.0.iter().rev() {
            acc = acc.mul(&lin).add(&Poly::constant(coef));
        }
        acc
    }

    /// ∫_0^1 p(τ) dτ
    pub fn integral_unit(&self) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(k, &c)| c / (k + 1) as f64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_composition() {
        let p = Poly(vec![1.0, -2.0, 3.0]);
        let q = p.compose_affine(0.25, 0.5);
        for t in [0.0, 0.3, 1.0] {
            assert!((q.eval(t) - p.eval(0.25 + 0.5 * t)).abs() < 1e-15);
        }
    }

    #[test]
    fn calculus() {
        let p = Poly(vec![0.0, 0.0, 3.0]);
        assert!((p.integral_unit() - 1.0).abs() < 1e-15);
        assert_eq!(p.derivative(), Poly(vec![0.0, 6.0]));
        assert_eq!(p.antiderivative().eval(2.0), 8.0);
    }
}
