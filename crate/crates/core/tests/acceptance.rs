//! The eight acceptance criteria. Each test prints one `criterion k: PASS`
//! or `FAIL` line with the quantities it checked, then asserts.
//!
//! Run with `cargo test -p memwave --test acceptance -- --nocapture`.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use memwave::dwt::{decompose, decompose_via_difference, scale_count};
use memwave::estimator::{
    avar_matrix, check_weights, estimate_two_step, ls_weights, optimal_weights, point_estimate, scale_spectrum,
    wls_weights, RegressionSpec,
};
use memwave::harness::{empirical_variance_pair, log2_slope, mc_covariance, rate_trend_ok, run_bias_variance, BiasVarianceReport, ExperimentConfig};
use memwave::linalg::Matrix;
use memwave::simulate::SamplerPlan;
use memwave::spectra::{cross_density_asymptotic, empvar_cov_prediction, k_constant, rate_check, wavelet_cov, MemoryModel};
use memwave::{ShannonDescriptor, WaveletFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(k: usize, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let ok_time = elapsed <= limit;
    let verdict = if ok && ok_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {k} {name}: {verdict} ({detail}; {:.1}s of {}s)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {k} failed: {detail}");
    assert!(ok_time, "criterion {k} exceeded its time budget");
}

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn criterion_1_filter_algebra() {
    let start = Instant::now();
    let (mut worst_moment, mut worst_deflation, mut worst_route) = (0.0f64, 0.0f64, 0.0f64);
    for order in [2usize, 3] {
        let bank = WaveletFamily::bspline(order).unwrap().filter_bank(8).unwrap();
        for f in bank.iter() {
            for m in 0..order as u32 {
                worst_moment = worst_moment.max(f.moment(m).abs() / f.abs_sum());
            }
            worst_deflation = worst_deflation.max(f.deflation_residual);
        }
        let x = noise(1 << 12, order as u64);
        let a = decompose(&x, &bank, 8).unwrap();
        let b = decompose_via_difference(&x, &bank, 8).unwrap();
        for ((_, _, w1), (_, _, w2)) in a.iter().zip(b.iter()) {
            worst_route = worst_route.max((w1 - w2).abs());
        }
    }
    let ok = worst_moment < 1e-9 && worst_deflation < 1e-9 && worst_route < 1e-10;
    report(
        1,
        "filter algebra",
        ok,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("moments {worst_moment:.1e}, deflation {worst_deflation:.1e}, routes {worst_route:.1e}"),
    );
}

#[test]
fn criterion_2_orthonormal_golden_values() {
    let start = Instant::now();
    let k = k_constant(&ShannonDescriptor, 0.0).unwrap().value;
    let k_err = (k / (2.0 * PI) - 1.0).abs();
    let mut d_err = 0.0f64;
    for i in 1..200 {
        // grid on (-π, π) avoiding 0 and ±π, where the indicator has edges
        let lambda = -PI + 2.0 * PI * (i as f64 + 0.37) / 200.0;
        for u in 0..=2usize {
            let v = cross_density_asymptotic(&ShannonDescriptor, 0.0, u, lambda).unwrap();
            let want = if u == 0 { 1.0 } else { 0.0 };
            d_err = d_err.max((v[0].re - want).abs().max(v[0].im.abs()));
            for c in &v[1..] {
                d_err = d_err.max(c.norm());
            }
        }
    }
    let v = avar_matrix(&ShannonDescriptor, 0.0, 4).unwrap().matrix;
    let mut v_err = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            let diag = 2f64.powi(i.max(j) as i32 + 1);
            let want = if i == j { diag } else { 0.0 };
            v_err = v_err.max((v[(i, j)] - want).abs() / diag);
        }
    }
    let ok = k_err < 1e-8 && d_err < 1e-8 && v_err < 1e-6;
    report(
        2,
        "orthonormal golden values",
        ok,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("K rel {k_err:.1e}, D abs {d_err:.1e}, V rel {v_err:.1e}"),
    );
}

#[test]
fn criterion_3_approximation_rates() {
    let start = Instant::now();
    let fam = WaveletFamily::bspline(2).unwrap();
    let bank = fam.filter_bank(9).unwrap();
    let models = [
        MemoryModel::fgn(0.6).unwrap(),
        MemoryModel::fgn(0.8).unwrap(),
        MemoryModel::arfima(vec![], -0.3, vec![], 1.0).unwrap(),
        MemoryModel::arfima(vec![], 0.2, vec![], 1.0).unwrap(),
        MemoryModel::arfima(vec![], 0.45, vec![], 1.0).unwrap(),
    ];
    // bounded by 3x the j = 3 value and non-increasing in trend, read as a
    // non-positive least-squares slope of log2 e_j against j
    let literal = |e: &[f64]| e.iter().all(|&v| v <= 3.0 * e[0]) && log2_slope(e) <= 0.0;
    let mut ok = true;
    let mut detail = Vec::new();
    for m in &models {
        let rows: Vec<_> = (3..=9).map(|j| rate_check(m, &fam, &bank, j, 128).unwrap()).collect();
        let v: Vec<f64> = rows.iter().map(|r| r.variance_error).collect();
        let d: Vec<f64> = rows.iter().map(|r| r.density_error).collect();
        let good = literal(&v) && literal(&d);
        ok &= good;
        detail.push(format!(
            "{m} slopes {:+.3},{:+.3} last/first {:.2},{:.2} settling {}{}",
            log2_slope(&v),
            log2_slope(&d),
            v[6] / v[0],
            d[6] / d[0],
            rate_trend_ok(&v) && rate_trend_ok(&d),
            if good { "" } else { " FAILED" }
        ));
    }
    report(3, "approximation rates", ok, start.elapsed(), Duration::from_secs(120), &detail.join("; "));
}

#[test]
fn criterion_4_exact_covariance_oracle() {
    let start = Instant::now();
    let model = MemoryModel::fgn(0.7).unwrap();
    let bank = WaveletFamily::bspline(2).unwrap().filter_bank(3).unwrap();
    let plan = SamplerPlan::new(&model, 1 << 12, 4).unwrap();
    let reps = 20_000u64;
    let draws: Vec<[f64; 6]> = (0..reps)
        .map(|r| {
            let d = decompose(&plan.sample(r), &bank, 3).unwrap();
            let mut out = [0.0; 6];
            for (a, j) in [2usize, 3].iter().enumerate() {
                for k in 0..3 {
                    out[3 * a + k] = d.get(*j, k).unwrap();
                }
            }
            out
        })
        .collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for (a, j) in [2usize, 3].iter().enumerate() {
        let w0: Vec<f64> = draws.iter().map(|x| x[3 * a]).collect();
        for tau in 0..3 {
            let wt: Vec<f64> = draws.iter().map(|x| x[3 * a + tau]).collect();
            let (cov, se) = mc_covariance(&w0, &wt);
            let exact = wavelet_cov(&model, &bank, *j, 0, *j, tau as i64).unwrap().value;
            let z = (cov - exact) / se;
            ok &= z.abs() <= 3.0;
            detail.push(format!("j={j} τ={tau} z={z:.2}"));
        }
    }
    report(4, "exact covariance oracle", ok, start.elapsed(), Duration::from_secs(300), &detail.join(", "));
}

#[test]
fn criterion_5_empirical_variance_covariance() {
    let start = Instant::now();
    let model = MemoryModel::fgn(0.7).unwrap();
    let family = WaveletFamily::bspline(2).unwrap();
    let bank = family.filter_bank(4).unwrap();
    let n = 1 << 14;
    let j = 4;
    let plan = SamplerPlan::new(&model, n, 5).unwrap();
    let pairs: Vec<[(f64, f64); 2]> = (0..5000u64)
        .map(|r| {
            let d = decompose(&plan.sample(r), &bank, j).unwrap();
            [
                empirical_variance_pair(&d, j, 0).unwrap(),
                empirical_variance_pair(&d, j, 1).unwrap(),
            ]
        })
        .collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for u in 0..2usize {
        let a: Vec<f64> = pairs.iter().map(|p| p[u].0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p[u].1).collect();
        let (cov, se) = mc_covariance(&a, &b);
        let t = family.support_len();
        let pred = empvar_cov_prediction(&model, &bank, j, u, scale_count(n, t, j), scale_count(n, t, j - u)).unwrap();
        let z = (cov - pred) / se;
        ok &= z.abs() <= 3.0;
        detail.push(format!("u={u} MC {cov:.4e} predicted {pred:.4e} z={z:.2}"));
    }
    report(5, "empirical variance covariance", ok, start.elapsed(), Duration::from_secs(300), &detail.join(", "));
}

/// FGN(0.7), ℓ = 2, LS weights, n ∈ {2^13, 2^15}, automatic J0, R = 1000;
/// shared by criteria 6 and 7.
fn fgn_ladder() -> &'static (BiasVarianceReport, Duration) {
    static CELL: OnceLock<(BiasVarianceReport, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let cfg = ExperimentConfig::from_toml(
            r#"
model = "fgn:0.7"
order = 2
n = [8192, 32768]
replicates = 1000
ell = 2
weights = "ls"
seed = 2024
[scales]
policy = "auto"
"#,
        )
        .unwrap();
        (run_bias_variance(&cfg).unwrap(), start.elapsed())
    })
}

#[test]
fn criterion_6_variance_limit() {
    let start = Instant::now();
    let (r, shared) = fgn_ladder();
    let fam = WaveletFamily::bspline(2).unwrap();
    let v = avar_matrix(&fam, 0.2, 2).unwrap().matrix;
    let w = ls_weights(2).unwrap();
    let predicted = (2.0 - 0.25) * v.quadratic_form(&w);
    let last = r.rows.last().unwrap();
    let rel = last.m_var / predicted - 1.0;
    let ok = rel.abs() <= 0.15;
    report(
        6,
        "variance limit",
        ok,
        start.elapsed() + *shared,
        Duration::from_secs(600),
        &format!(
            "n={} J0={} m·Var={:.4} predicted={predicted:.4} rel {rel:+.3}",
            last.n, last.j0, last.m_var
        ),
    );
}

#[test]
fn criterion_7_consistency() {
    let start = Instant::now();
    let (r, shared) = fgn_ladder();
    let (first, last) = (&r.rows[0], r.rows.last().unwrap());
    let tol = 0.02f64.max(3.0 * last.bias_se);
    let ok = last.bias.abs() <= tol && last.mse < first.mse;
    report(
        7,
        "consistency",
        ok,
        start.elapsed() + *shared,
        Duration::from_secs(600),
        &format!(
            "mean d̂ {:.4} (|bias| {:.4} ≤ {tol:.4}), MSE {:.3e} → {:.3e}",
            last.mean_d,
            last.bias.abs(),
            first.mse,
            last.mse
        ),
    );
}

#[test]
fn criterion_8_invariances() {
    let start = Instant::now();
    let mut worst_trend = 0.0f64;
    let mut worst_scale = 0.0f64;
    for order in [2usize, 3] {
        let fam = WaveletFamily::bspline(order).unwrap();
        let bank = fam.filter_bank(6).unwrap();
        let model = MemoryModel::fgn(0.7).unwrap();
        let plan = SamplerPlan::new(&model, 1 << 12, 8).unwrap();
        let spec = RegressionSpec::least_squares(2, 3).unwrap();
        let est = |x: &[f64]| {
            let d = decompose(x, &bank, 5).unwrap();
            point_estimate(&scale_spectrum(&d, 2, 3).unwrap(), &spec).unwrap()
        };
        for rep in 0..4 {
            let x = plan.sample(rep);
            let base = est(&x);
            let n = x.len() as f64;
            // the process has unit variance
            for deg in 0..order {
                for amp in [1.0, 1e3] {
                    let y: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .map(|(t, v)| v + amp * ((t + 1) as f64 / n).powi(deg as i32) - 0.3 * amp)
                        .collect();
                    worst_trend = worst_trend.max((est(&y) - base).abs());
                }
            }
            for s in [1e-3, 0.5, 7.0, 1e4] {
                let y: Vec<f64> = x.iter().map(|v| s * v).collect();
                worst_scale = worst_scale.max((est(&y) - base).abs());
            }
        }
    }

    // every weight producer keeps Σw = 0 and 2 log 2 Σ i w = 1
    let mut violations = 0;
    let mut produced = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut record = |w: memwave::Result<Vec<f64>>| {
        produced += 1;
        if w.and_then(|w| check_weights(&w)).is_err() {
            violations += 1;
        }
    };
    for ell in 1..=6 {
        record(ls_weights(ell));
        let diag: Vec<f64> = (0..=ell).map(|_| rng.random_range(0.1..10.0)).collect();
        record(wls_weights(ell, &Matrix::diagonal(&diag)));
        let a = Matrix::from_fn(ell + 1, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1);
        let spd = Matrix::from_fn(ell + 1, |i, j| {
            (0..=ell).map(|k| a[(i, k)] * a[(j, k)]).sum::<f64>() + if i == j { 1.0 } else { 0.0 }
        });
        record(wls_weights(ell, &spd));
    }
    let fam = WaveletFamily::bspline(2).unwrap();
    for (ell, d) in [(1, 0.0), (2, 0.2), (3, -0.3), (4, 0.45), (3, 1.2)] {
        record(optimal_weights(&fam, d, ell));
        record(optimal_weights(&ShannonDescriptor, d, ell));
    }
    let v: Vec<f64> = (0..5).map(|j| 2f64.powf(0.6 * j as f64) * (1.0 + 0.02 * j as f64)).collect();
    let spectrum = memwave::estimator::ScaleSpectrum {
        entries: v
            .iter()
            .enumerate()
            .map(|(j, &x)| memwave::estimator::ScaleEntry {
                j,
                variance: x,
                count: 4096 >> j,
            })
            .collect(),
    };
    record(estimate_two_step(&spectrum, 0, 4, &fam, 0.95).map(|r| r.weights));
    // sanity of the constant used by every producer
    assert!((2.0 * LN_2 * memwave::estimator::target()[1] - 1.0).abs() < 1e-15);

    let ok = worst_trend < 1e-9 && worst_scale < 1e-9 && violations == 0;
    report(
        8,
        "invariances",
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "trend {worst_trend:.1e}, scale {worst_scale:.1e}, weight sets {produced} with {violations} violations"
        ),
    );
}
