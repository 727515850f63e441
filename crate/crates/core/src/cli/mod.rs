//! Command-line front end.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bootstrap::{band_for_data, confidence_band, coverage_experiment};
use crate::error::{Error, Result};
use crate::estimator::{
    admissibility_report, analyse, bandwidth_grid_search, coarse_bandwidth_grid,
    refined_bandwidth_grid, CfChoice, GridSearch,
};
use crate::levy_model::LevyTriplet;
use crate::simulate::ObservationSeries;

pub use config::RunConfig;
use config::BandwidthSetting;

/// Smoothness order used in the admissibility report.
const SMOOTHNESS: f64 = 2.0;

/// Largest tolerated share of failed coverage replicates.
const MAX_FAILURE_FRACTION: f64 = 0.1;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_REPLICATES: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "levyband", version, about = "Spectral estimation and bootstrap bands for the jump density of a Levy-driven moving average")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate observations and write them with a manifest.
    Simulate(CommonArgs),
    /// Estimate rho and its pointwise standard deviation.
    Estimate(CommonArgs),
    /// Estimate and build a multiplier-bootstrap confidence band.
    Band(BandArgs),
    /// Monte-Carlo coverage of the band.
    Coverage(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Observations as CSV (`j,delta_x`) or binary (`.bin`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Use the exact characteristic function of the configured model.
    #[arg(long)]
    pub oracle_cf: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BandArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Skip the bootstrap and use this quantile.
    #[arg(long)]
    pub fixed_quantile: Option<f64>,
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(c) | Command::Estimate(c) | Command::Coverage(c) => c,
            Command::Band(b) => &b.common,
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Outcome of a successful command.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Done,
    /// Coverage finished but too many replicates failed.
    ExcessiveFailures { failed: usize, total: usize },
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
    args: CommonArgs,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self> {
        let mut cfg = RunConfig::load(&args.config)?;
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
        fs::create_dir_all(&out)?;
        Ok(Self {
            cfg,
            out,
            args: args.clone(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// External data when `--data` is given, otherwise a simulation.
    fn observations(&self) -> Result<(ObservationSeries, bool)> {
        let delta = self.cfg.resolved_delta();
        match &self.args.data {
            Some(path) => Ok((read_observations(path, delta)?, false)),
            None => Ok((self.cfg.simulate(self.cfg.seed)?, true)),
        }
    }

    fn choice<'a>(&self, triplet: &'a LevyTriplet) -> CfChoice<'a> {
        if self.args.oracle_cf {
            CfChoice::Exact(triplet)
        } else {
            CfChoice::Empirical
        }
    }

    /// Fixed `h`, or the two-stage grid search against the configured model.
    fn bandwidth(&self, sigma_sq_hat: f64) -> Result<f64> {
        match self.cfg.h {
            BandwidthSetting::Fixed(h) => Ok(h),
            BandwidthSetting::Search(_) => {
                let truth = self.cfg.truth()?;
                let template = self.cfg.estimator_config(0.5, sigma_sq_hat)?;
                let cfg = &self.cfg;
                let generator = |r: usize| cfg.simulate(crate::rng::child_seed(cfg.seed, r as u64));
                let reps = cfg.grid_replications;
                let coarse = bandwidth_grid_search(&truth, generator, &coarse_bandwidth_grid(), reps, &template)?;
                let fine = bandwidth_grid_search(&truth, generator, &refined_bandwidth_grid(), reps, &template)?;
                let merged: GridSearch = coarse.merge(&fine)?;
                merged.write_csv(&self.path("grid_search.csv"))?;
                Ok(merged.best_h)
            }
        }
    }
}

pub fn read_observations(path: &Path, delta: f64) -> Result<ObservationSeries> {
    if path.extension().is_some_and(|e| e == "bin") {
        ObservationSeries::read_binary(path, delta)
    } else {
        ObservationSeries::read_csv(path, delta)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::domain(format!("cannot serialise {}: {e}", path.display())))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn cmd_simulate(args: &CommonArgs) -> Result<Outcome> {
    let ctx = Context::new(args)?;
    let data = ctx.cfg.simulate(ctx.cfg.seed)?;
    data.write_csv(&ctx.path("observations.csv"))?;
    data.write_binary(&ctx.path("observations.bin"))?;
    let manifest = ctx.cfg.resolved();
    write_json(&ctx.path("manifest.json"), &manifest)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&manifest).expect("configuration serialises")
    );
    Ok(Outcome::Done)
}

pub fn cmd_estimate(args: &CommonArgs) -> Result<Outcome> {
    let ctx = Context::new(args)?;
    let (data, simulated) = ctx.observations()?;
    let s2 = ctx.cfg.sigma_sq_hat(simulated);
    let h = ctx.bandwidth(s2)?;
    let est = ctx.cfg.estimator_config(h, s2)?;
    let triplet = ctx.cfg.triplet()?;
    let mut analysis = analyse(&data, &est, ctx.choice(&triplet))?;
    analysis.estimate.meta.seed = simulated.then_some(ctx.cfg.seed);
    analysis.estimate.write_csv(&ctx.path("estimate.csv"))?;
    let report = admissibility_report(data.len(), data.delta, h, SMOOTHNESS);
    write_json(&ctx.path("admissibility.json"), &report)?;
    if est.bandwidth_warning(data.delta, 1.0) {
        eprintln!("warning: h^3 = {:.3e} is below delta = {:.3e}", h.powi(3), data.delta);
    }
    Ok(Outcome::Done)
}

pub fn cmd_band(args: &BandArgs) -> Result<Outcome> {
    let ctx = Context::new(&args.common)?;
    let (data, simulated) = ctx.observations()?;
    let s2 = ctx.cfg.sigma_sq_hat(simulated);
    let h = ctx.bandwidth(s2)?;
    let est = ctx.cfg.estimator_config(h, s2)?;
    let boot = ctx.cfg.bootstrap_config()?;
    let triplet = ctx.cfg.triplet()?;
    let band = match args.fixed_quantile {
        Some(c) => {
            let analysis = analyse(&data, &est, ctx.choice(&triplet))?;
            confidence_band(&analysis.estimate, c, boot.tau, data.len(), data.delta)?
        }
        None => band_for_data(&data, &est, &boot, ctx.choice(&triplet))?.0,
    };
    band.write_csv(&ctx.path("band.csv"))?;
    band.write_json(&ctx.path("band.json"))?;
    Ok(Outcome::Done)
}

pub fn cmd_coverage(args: &CommonArgs) -> Result<Outcome> {
    let ctx = Context::new(args)?;
    let cfg = &ctx.cfg;
    let truth = cfg.truth()?;
    let s2 = cfg.sigma_sq_hat(true);
    let h = ctx.bandwidth(s2)?;
    let est = cfg.estimator_config(h, s2)?;
    let boot = cfg.bootstrap_config()?;
    let report = coverage_experiment(
        &truth,
        |seed| cfg.simulate(seed),
        cfg.seed,
        &est,
        &boot,
        cfg.coverage_replications,
    )?;
    report.write_csv(&ctx.path("coverage.csv"))?;
    report.write_json(&ctx.path("coverage.json"))?;
    let total = report.rows.len() + report.failures;
    if report.failure_fraction() > MAX_FAILURE_FRACTION {
        return Ok(Outcome::ExcessiveFailures {
            failed: report.failures,
            total,
        });
    }
    Ok(Outcome::Done)
}

/// Parses nothing; runs an already parsed command.
pub fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(k) = cli.command.common().threads {
        // Ignore a second initialisation within one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Band(a) => cmd_band(a),
        Command::Coverage(a) => cmd_coverage(a),
    }
}
