//! `cmarkov`: sampling and verification of set-indexed Markov processes
//! from a JSON run configuration.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand};
use cmarkov::kernels::{ck_residual, feller_profile, CK_TEST_FUNCTIONS};
use cmarkov::sampler::{gaussian_fdd_moments, sample_grid, FddPlan};
use cmarkov::verify::{
    cmarkov_conditional_check, commuting_filtration_check, flow_projection_check, sharp_markov_check,
    simple_markov_shift_check, star_markov_correspondence,
};
use cmarkov::CheckReport;

use config::{parse_increment, parse_set, parse_sets, RunConfig, CONFIG_VERSION};

const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "cmarkov", version, about = "Sample and verify set-indexed Markov processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replicate count; overrides the config.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Write samples as JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Draw replicates of the process on the closure of `sets`.
    SampleFdd,
    /// Draw replicates on the cartesian grid given by `grid`.
    SampleGrid,
    /// Exact mean and covariance of a Gaussian process at `sets`.
    Moments,
    /// Chapman–Kolmogorov residual for `increment` split along each of `splits`.
    VerifyCk,
    /// Conditional law of the increment given its frontier and `extras`.
    VerifyCmarkov,
    /// Sharp Markov property of the union `boundary`.
    VerifySharp,
    /// Commuting filtrations for `u`, `v` and `Y = Σ coefs·X_sets`.
    VerifyCommute,
    /// Markov property of the projection along `flow`.
    VerifyFlow,
    /// Simple Markov property after shifting `sets` by `u`.
    VerifyShift,
    /// Frontier of the two-parameter increment in `star`.
    VerifyStar,
    /// Feller modulus profile for `feller.rhos`.
    Feller,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SampleFdd => "sample-fdd",
            Command::SampleGrid => "sample-grid",
            Command::Moments => "moments",
            Command::VerifyCk => "verify-ck",
            Command::VerifyCmarkov => "verify-cmarkov",
            Command::VerifySharp => "verify-sharp",
            Command::VerifyCommute => "verify-commute",
            Command::VerifyFlow => "verify-flow",
            Command::VerifyShift => "verify-shift",
            Command::VerifyStar => "verify-star",
            Command::Feller => "feller",
        }
    }
}

enum Outcome {
    Done,
    Checked(bool),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) | Ok(Outcome::Checked(true)) => ExitCode::SUCCESS,
        Ok(Outcome::Checked(false)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli.config.as_ref().context("--config is required")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let cfg = RunConfig::from_json(&text)?;
    let seed = cli.seed.or(cfg.seed);
    let out = cli.out.as_deref();
    let cmd = cli.command;

    let reports = match cmd {
        Command::SampleFdd => {
            let seed = seed.context("sample-fdd needs a seed (--seed or `seed` in the config)")?;
            let family = cfg.family()?;
            let nu = cfg.initial()?;
            let sets = parse_sets(&family, &cfg.sets, "sets")?;
            ensure!(!sets.is_empty(), "`sets` is empty");
            let replicates = cli.replicates.or(cfg.replicates).unwrap_or(1);
            let plan = FddPlan::new(&cfg.kernel, &family, &sets)?;
            let d = plan.state_dim();
            let pos: Vec<usize> = sets.iter().map(|s| plan.semilattice().position(s).unwrap()).collect();
            let rows: Vec<Vec<f64>> = plan
                .sample_many(&nu, replicates, seed)?
                .into_iter()
                .map(|v| pos.iter().flat_map(|&p| v[p * d..(p + 1) * d].to_vec()).collect())
                .collect();
            write_samples(&output::headers(&sets, d), &rows, seed, cli.json, out)?;
            return Ok(Outcome::Done);
        }
        Command::SampleGrid => {
            let seed = seed.context("sample-grid needs a seed (--seed or `seed` in the config)")?;
            let family = cfg.family()?;
            let nu = cfg.initial()?;
            let axes = cfg.grid.as_ref().context("config needs a `grid` (one list of coordinates per axis)")?;
            let replicates = cli.replicates.or(cfg.replicates).unwrap_or(1);
            let grid = sample_grid(&cfg.kernel, &family, &nu, axes, replicates, seed)?;
            write_samples(&output::headers(&grid.corners, 1), &grid.values, seed, cli.json, out)?;
            return Ok(Outcome::Done);
        }
        Command::Moments => {
            let family = cfg.family()?;
            let sets = parse_sets(&family, &cfg.sets, "sets")?;
            let fdd = gaussian_fdd_moments(&cfg.kernel, &family, &cfg.initial()?, &sets)?;
            let m = output::Moments {
                version: CONFIG_VERSION,
                columns: output::headers(&sets, fdd.dim),
                mean: fdd.mean.clone(),
                cov: (0..fdd.len()).map(|i| fdd.cov.row(i).to_vec()).collect(),
            };
            output::emit(&output::to_json(&m)?, out)?;
            return Ok(Outcome::Done);
        }
        Command::VerifyCk => {
            let family = cfg.family()?;
            let inc = parse_increment(&family, cfg.increment.as_ref())?;
            let splits = parse_sets(&family, &cfg.splits, "splits")?;
            ensure!(!splits.is_empty(), "`splits` is empty");
            let n = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
            let seed = seed.unwrap_or(0);
            splits
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let rep = ck_residual(&cfg.kernel, &family, &inc, s, n, seed.wrapping_add(i as u64))?;
                    let base = match rep.exact_discrepancy {
                        Some(gap) => CheckReport::exact("chapman-kolmogorov", gap, 1e-10),
                        None => CheckReport::statistical("chapman-kolmogorov", rep.max_z(), 3.0, n, rep.seed),
                    };
                    let base = CK_TEST_FUNCTIONS.iter().enumerate().fold(base, |b, (k, name)| {
                        let z = (rep.one_step[k] - rep.two_step[k]) / rep.std_err[k];
                        b.with_detail(&format!("z[{name}]"), z)
                    });
                    Ok(base)
                })
                .collect::<Result<Vec<_>>>()?
        }
        Command::VerifyCmarkov => {
            let family = cfg.family()?;
            let inc = parse_increment(&family, cfg.increment.as_ref())?;
            let extras = parse_sets(&family, &cfg.extras, "extras")?;
            vec![cmarkov_conditional_check(&cfg.kernel, &family, &cfg.initial()?, &inc, &extras)?]
        }
        Command::VerifySharp => {
            let family = cfg.family()?;
            let b = parse_sets(&family, &cfg.boundary, "boundary")?;
            let inside = parse_sets(&family, &cfg.inside, "inside")?;
            let outside = parse_sets(&family, &cfg.outside, "outside")?;
            vec![sharp_markov_check(&cfg.kernel, &family, &cfg.initial()?, &b, &inside, &outside)?]
        }
        Command::VerifyCommute => {
            let family = cfg.family()?;
            let u = parse_set(&family, cfg.u.as_ref().context("config needs `u`")?)?;
            let v = parse_set(&family, cfg.v.as_ref().context("config needs `v`")?)?;
            let ys = parse_sets(&family, &cfg.sets, "sets")?;
            let coefs = if cfg.coefs.is_empty() { vec![1.0; ys.len()] } else { cfg.coefs.clone() };
            vec![commuting_filtration_check(&cfg.kernel, &family, &cfg.initial()?, &u, &v, &ys, &coefs)?]
        }
        Command::VerifyFlow => {
            let family = cfg.family()?;
            let flow = parse_sets(&family, &cfg.flow, "flow")?;
            let n = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
            vec![flow_projection_check(&cfg.kernel, &family, &cfg.initial()?, &flow, n, seed.unwrap_or(0))?]
        }
        Command::VerifyShift => {
            let family = cfg.family()?;
            let u = parse_set(&family, cfg.u.as_ref().context("config needs the shift `u`")?)?;
            let sets = parse_sets(&family, &cfg.sets, "sets")?;
            let n = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
            vec![simple_markov_shift_check(&cfg.kernel, &family, &cfg.initial()?, &u, &sets, n, seed.unwrap_or(0))?]
        }
        Command::VerifyStar => {
            let star = cfg.star.as_ref().context("config needs `star` with s, t, h, k")?;
            ensure!(
                [star.s, star.t, star.h, star.k].iter().all(|x| x.is_finite() && *x >= 0.0),
                "star parameters must be finite and >= 0"
            );
            vec![star_markov_correspondence(star.s, star.t, star.h, star.k)?]
        }
        Command::Feller => {
            let family = cfg.family()?;
            let f = &cfg.feller;
            ensure!(!f.rhos.is_empty(), "`feller.rhos` is empty");
            let g = |x: f64| (-x * x).exp();
            let prof = feller_profile(&cfg.kernel, &family, &f.rhos, &g, &f.to_config(seed.unwrap_or(0)))?;
            vec![feller_report(&prof, f.slack)]
        }
    };
    if reports.is_empty() {
        bail!("no checks were run");
    }
    output::emit(&output::reports_json(cmd.name(), &reports)?, out)?;
    Ok(Outcome::Checked(reports.iter().all(|r| r.passed)))
}

/// Worst relative growth of the modulus as `rho` shrinks, against `slack`.
fn feller_report(prof: &cmarkov::kernels::FellerProfile, slack: f64) -> CheckReport {
    let mut pairs: Vec<(f64, f64)> = prof.rhos.iter().copied().zip(prof.moduli.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let growth = pairs
        .windows(2)
        .map(|w| if w[0].1 > 0.0 { w[1].1 / w[0].1 - 1.0 } else if w[1].1 > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    pairs.iter().fold(CheckReport::exact("feller-modulus", growth, slack), |r, (rho, m)| {
        r.with_detail(&format!("modulus[{rho}]"), *m)
    })
}

fn write_samples(
    headers: &[String],
    rows: &[Vec<f64>],
    seed: u64,
    json: bool,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let text = if json {
        output::to_json(&output::SampleTable { version: CONFIG_VERSION, seed, columns: headers, rows })?
    } else {
        output::csv(headers, rows)
    };
    output::emit(&text, out)
}
