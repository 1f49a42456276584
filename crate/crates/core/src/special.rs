//! Special functions not covered by `statrs`.

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

// B_{2k} / (2k)!
const BERNOULLI_OVER_FACT: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
    43_867.0 / 5_109_094_217_170_944_000.0,
    -174_611.0 / 802_857_662_698_291_200_000.0,
];

/// Hurwitz zeta function ζ(s, a) = Σ_{k≥0} (k + a)^{-s} for s > 1, a > 0,
/// by Euler-Maclaurin summation.
///
/// Returns the value and a bound on the Euler-Maclaurin remainder.
pub fn hurwitz_zeta(s: f64, a: f64) -> (f64, f64) {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    const DIRECT: usize = 12;
    let mut sum = 0.0;
    for k in 0..DIRECT {
        sum += (k as f64 + a).powf(-s);
    }
    let x = DIRECT as f64 + a;
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) times x^{-s-2k+1}
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    let mut last = 0.0;
    for (k, &b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        let term = b * rising * xpow;
        tail += term;
        last = term.abs();
        let k2 = 2.0 * (k + 1) as f64;
        rising *= (s + k2 - 1.0) * (s + k2);
        xpow /= x * x;
    }
    (sum + tail, last)
}
