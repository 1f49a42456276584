use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use memwave::dwt::decompose;
use memwave::estimator::{
    estimate_d, estimate_two_step, resolve_j0, scale_spectrum, RegressionSpec, DEFAULT_BETA,
};
use memwave::harness::{run_experiment, ExperimentConfig};
use memwave::simulate::SamplerPlan;
use memwave::spectra::{cross_density_exact, DensityGrid, MemoryModel};
use memwave::WaveletFamily;
use num_complex::Complex64;
use serde_json::json;

#[derive(Parser)]
#[command(name = "memwave", version, about = "Wavelet estimation of the memory parameter d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete B-spline wavelet filters h_{j,l} and samples of H_j.
    Filters {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        max_scale: usize,
        /// Frequencies in [0, π] at which H_j is sampled.
        #[arg(long, default_value_t = 65)]
        transfer_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wavelet coefficients of a series (one value per line) as j,k,value.
    Dwt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        max_scale: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Within- or between-scale spectral density D_{j,u} on a uniform grid.
    Spectra {
        #[arg(long)]
        model: String,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        scale: usize,
        #[arg(long, default_value_t = 0)]
        lag_u: usize,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regression estimate of d with a normal-approximation interval.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Start scale, or `auto` for round(log2 n / (1 + 2β)).
        #[arg(long, default_value = "auto")]
        j0: StartScale,
        #[arg(long, default_value_t = 3)]
        ell: usize,
        #[arg(long, value_enum, default_value_t = Weights::Ls)]
        weights: Weights,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Smoothness exponent used by `--j0 auto`.
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact Gaussian samples of a model, one CSV per replicate.
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo experiment described by a TOML file.
    Mc {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 2 when an envelope check fails.
        #[arg(long)]
        assert: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Ls,
    Opt,
}

#[derive(Clone, Copy)]
enum StartScale {
    Auto,
    Fixed(usize),
}

impl FromStr for StartScale {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(StartScale::Auto);
        }
        s.parse()
            .map(StartScale::Fixed)
            .map_err(|_| format!("expected `auto` or a scale index, got `{s}`"))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_series(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .with_context(|| format!("{}:{}: not a number: {l:?}", path.display(), i + 1))
        })
        .collect()
}

fn filters(order: usize, max_scale: usize, points: usize, out: Option<&Path>) -> Result<()> {
    if points < 2 {
        bail!("--transfer-points must be at least 2");
    }
    let bank = WaveletFamily::bspline(order)?.filter_bank(max_scale)?;
    let lambdas: Vec<f64> = (0..points)
        .map(|i| std::f64::consts::PI * i as f64 / (points - 1) as f64)
        .collect();
    let rows: Vec<_> = bank
        .iter()
        .map(|f| {
            let h: Vec<Complex64> = lambdas.iter().map(|&l| f.transfer(l)).collect();
            json!({
                "j": f.j,
                "offset": f.offset,
                "coeffs": f.coeffs,
                "transfer": {
                    "lambda": lambdas,
                    "re": h.iter().map(|z| z.re).collect::<Vec<_>>(),
                    "im": h.iter().map(|z| z.im).collect::<Vec<_>>(),
                },
            })
        })
        .collect();
    emit(out, &(serde_json::to_string_pretty(&rows)? + "\n"))
}

fn dwt(input: &Path, order: usize, max_scale: usize, out: Option<&Path>) -> Result<()> {
    let x = read_series(input)?;
    let bank = WaveletFamily::bspline(order)?.filter_bank(max_scale)?;
    let dec = decompose(&x, &bank, max_scale)?;
    let mut text = String::from("j,k,value\n");
    for (j, k, w) in dec.iter() {
        writeln!(text, "{j},{k},{w:e}")?;
    }
    emit(out, &text)
}

fn spectra(model: &str, order: usize, j: usize, u: usize, grid: usize, out: Option<&Path>) -> Result<()> {
    let model = MemoryModel::parse(model)?;
    let bank = WaveletFamily::bspline(order)?.filter_bank(j)?;
    let g = DensityGrid::sample(grid, |l| cross_density_exact(&model, &bank, j, u, l))?;
    let mut text = String::from("lambda");
    for v in 0..1usize << u {
        write!(text, ",re_{v},im_{v}")?;
    }
    text.push('\n');
    for (l, row) in g.lambdas.iter().zip(&g.values) {
        write!(text, "{l:e}")?;
        for z in row {
            write!(text, ",{:e},{:e}", z.re, z.im)?;
        }
        text.push('\n');
    }
    emit(out, &text)
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: &Path,
    order: usize,
    j0: StartScale,
    ell: usize,
    weights: Weights,
    level: f64,
    beta: f64,
    out: Option<&Path>,
) -> Result<()> {
    let x = read_series(input)?;
    let family = WaveletFamily::bspline(order)?;
    let j0 = match j0 {
        StartScale::Auto => resolve_j0(x.len(), family.support_len(), ell, beta)?,
        StartScale::Fixed(j) => j,
    };
    let bank = family.filter_bank(j0 + ell)?;
    let spectrum = scale_spectrum(&decompose(&x, &bank, j0 + ell)?, j0, ell)?;
    let report = match weights {
        Weights::Ls => estimate_d(&spectrum, &RegressionSpec::least_squares(j0, ell)?, &family, level)?,
        Weights::Opt => estimate_two_step(&spectrum, j0, ell, &family, level)?,
    };
    let mut value = serde_json::to_value(&report)?;
    value["n"] = json!(x.len());
    value["order"] = json!(order);
    emit(out, &(serde_json::to_string_pretty(&value)? + "\n"))
}

fn simulate(model: &str, n: usize, reps: u64, seed: u64, out: &Path) -> Result<()> {
    let model = MemoryModel::parse(model)?;
    let plan = SamplerPlan::new(&model, n, seed)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let width = reps.saturating_sub(1).to_string().len().max(4);
    for r in 0..reps {
        let mut text = String::with_capacity(n * 24);
        for v in plan.sample(r) {
            writeln!(text, "{v:e}")?;
        }
        fs::write(out.join(format!("replicate_{r:0width$}.csv")), text)?;
    }
    Ok(())
}

fn mc(config: &Path, out: Option<PathBuf>, assert: bool) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = out
        .or_else(|| cfg.output.clone())
        .context("no output directory: pass --out or set `output` in the config")?;
    let manifest = run_experiment(&cfg, &dir)?;
    for c in &manifest.checks {
        println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    println!("content hash {}", manifest.content_hash);
    Ok(if assert && !manifest.passed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Filters {
            order,
            max_scale,
            transfer_points,
            out,
        } => filters(order, max_scale, transfer_points, out.as_deref())?,
        Command::Dwt {
            input,
            order,
            max_scale,
            out,
        } => dwt(&input, order, max_scale, out.as_deref())?,
        Command::Spectra {
            model,
            order,
            scale,
            lag_u,
            grid,
            out,
        } => spectra(&model, order, scale, lag_u, grid, out.as_deref())?,
        Command::Estimate {
            input,
            order,
            j0,
            ell,
            weights,
            level,
            beta,
            out,
        } => estimate(&input, order, j0, ell, weights, level, beta, out.as_deref())?,
        Command::Simulate {
            model,
            n,
            reps,
            seed,
            out,
        } => simulate(&model, n, reps, seed, &out)?,
        Command::Mc { config, out, assert } => return mc(&config, out, assert),
    }
    Ok(ExitCode::SUCCESS)
}
