//! Gaussian multiplier bootstrap for uniform confidence bands on `ρ`, and the
//! Monte-Carlo coverage experiment.

use std::path::Path;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{analyse, CfChoice, DensityEstimate, EstimatorConfig, InfluenceMatrix};
use crate::levy_model::GroundTruth;
use crate::rng::{child_seed, stream};
use crate::simulate::ObservationSeries;

pub const DEFAULT_REPLICATIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub tau: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(replications: usize, tau: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            replications,
            tau,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::domain("at least one bootstrap replication is required"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::domain(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        Ok(())
    }
}

/// `T̂(x) = (ŝ(x)√n)⁻¹ Σ_j ω_j (A_j(x) - Ā(x))` on the influence grid.
pub fn multiplier_process(
    influence: &InfluenceMatrix,
    s_hat: &[f64],
    weights: &[f64],
) -> Result<Vec<Complex64>> {
    let n = influence.n;
    if weights.len() != n {
        return Err(Error::domain(format!(
            "expected {n} multiplier weights, got {}",
            weights.len()
        )));
    }
    if s_hat.len() != influence.x.len() {
        return Err(Error::domain("variance and influence grids differ"));
    }
    if let Some(i) = s_hat.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateVariance { x: influence.x[i] });
    }
    // Σ_j ω_j(A_j - Ā) = Σ_g (W_g - c_g ω̄) A_g with W_g the weight sum of group g.
    let mut group_weight = vec![0.0; influence.groups.len()];
    let mut total = 0.0;
    for (&g, &w) in influence.group_of.iter().zip(weights) {
        group_weight[g] += w;
        total += w;
    }
    let mean = total / n as f64;
    let l = influence.x.len();
    let mut out = vec![Complex64::new(0.0, 0.0); l];
    for (g, &(_, c)) in influence.groups.iter().enumerate() {
        let coef = group_weight[g] - c as f64 * mean;
        if coef == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(influence.row(g)) {
            *o += a * coef;
        }
    }
    let root_n = (n as f64).sqrt();
    for (o, &s) in out.iter_mut().zip(s_hat) {
        *o /= s * root_n;
    }
    Ok(out)
}

/// `sup_x |T̂(x)|`.
pub fn multiplier_sup(influence: &InfluenceMatrix, s_hat: &[f64], weights: &[f64]) -> Result<f64> {
    Ok(multiplier_process(influence, s_hat, weights)?
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm())))
}

/// Standard normal multipliers for replicate `index`.
pub fn multiplier_weights(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, index);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Order statistic `⌈B(1-τ)⌉` of the sups, counting from 1.
pub fn quantile_from_sups(sups: &[f64], tau: f64) -> Result<f64> {
    if sups.is_empty() {
        return Err(Error::domain("no bootstrap replicates"));
    }
    let mut sorted = sups.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    // The slack keeps B(1-τ) = 450.0000000001 from rounding up to 451.
    let rank = ((b as f64 * (1.0 - tau)) - 1e-9).ceil().clamp(1.0, b as f64) as usize;
    Ok(sorted[rank - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    pub sups: Vec<f64>,
    pub c_hat: f64,
}

/// `B` replicates of `sup|T̂|` and their `(1-τ)` quantile.
pub fn bootstrap_quantile(
    influence: &InfluenceMatrix,
    s_hat: &[f64],
    cfg: &BootstrapConfig,
) -> Result<BootstrapDraws> {
    cfg.validate()?;
    let sups = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|b| {
            let w = multiplier_weights(cfg.seed, b, influence.n);
            multiplier_sup(influence, s_hat, &w)
        })
        .collect::<Result<Vec<f64>>>()?;
    let c_hat = quantile_from_sups(&sups, cfg.tau)?;
    Ok(BootstrapDraws { sups, c_hat })
}

/// `hi - c == c - lo` in floating point, with `hi - lo` as close to `2d` as
/// the spacing of floats near `c` allows.
pub fn symmetric_interval(c: f64, d: f64) -> (f64, f64) {
    let symmetric = |d: f64| {
        let (lo, hi) = (c - d, c + d);
        (hi - c == c - lo).then_some((lo, hi))
    };
    if let Some(pair) = symmetric(d) {
        return pair;
    }
    let base = c.abs().max(d);
    let ulp = base.next_up() - base;
    for scale in [1.0, 2.0, 4.0, 8.0] {
        let q = ulp * scale;
        let d0 = (d / q).round() * q;
        for k in 0..8 {
            for cand in [d0 + k as f64 * q, d0 - k as f64 * q] {
                if cand >= 0.0 {
                    if let Some(pair) = symmetric(cand) {
                        return pair;
                    }
                }
            }
        }
    }
    (c, c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMeta {
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub x: Vec<f64>,
    pub center: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub c_hat: f64,
    pub tau: f64,
    pub meta: BandMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub c_hat: f64,
    pub tau: f64,
    pub max_width: f64,
    pub mean_width: f64,
    pub meta: BandMeta,
}

impl ConfidenceBand {
    pub fn widths(&self) -> Vec<f64> {
        self.hi.iter().zip(&self.lo).map(|(h, l)| h - l).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.widths().into_iter().fold(0.0, f64::max)
    }

    pub fn mean_width(&self) -> f64 {
        let w = self.widths();
        w.iter().sum::<f64>() / w.len() as f64
    }

    /// True when `f(x) ∈ [lo, hi]` at every grid point.
    pub fn covers<F: Fn(f64) -> Result<f64>>(&self, f: F) -> Result<bool> {
        for i in 0..self.x.len() {
            let v = f(self.x[i])?;
            if !(v >= self.lo[i] && v <= self.hi[i]) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn summary(&self) -> BandSummary {
        BandSummary {
            c_hat: self.c_hat,
            tau: self.tau,
            max_width: self.max_width(),
            mean_width: self.mean_width(),
            meta: self.meta.clone(),
        }
    }

    /// CSV `x,rho_hat_re,s_hat,lo,hi`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "rho_hat_re", "s_hat", "lo", "hi"])?;
        for i in 0..self.x.len() {
            w.write_record([
                self.x[i].to_string(),
                self.center[i].to_string(),
                self.s_hat[i].to_string(),
                self.lo[i].to_string(),
                self.hi[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.summary())
            .map_err(|e| Error::domain(format!("cannot serialise band summary: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// `Re ρ̂ ± ŝ ĉ/(√n Δ)`.
pub fn confidence_band(
    estimate: &DensityEstimate,
    c_hat: f64,
    tau: f64,
    n: usize,
    delta: f64,
) -> Result<ConfidenceBand> {
    if estimate.s_hat.len() != estimate.x.len() || estimate.rho_hat.len() != estimate.x.len() {
        return Err(Error::domain("estimate arrays have different lengths"));
    }
    if !(c_hat >= 0.0 && c_hat.is_finite()) {
        return Err(Error::domain(format!("quantile must be finite and non-negative, got {c_hat}")));
    }
    let scale = c_hat / ((n as f64).sqrt() * delta);
    let center: Vec<f64> = estimate.real();
    let (lo, hi) = center
        .iter()
        .zip(&estimate.s_hat)
        .map(|(&c, &s)| symmetric_interval(c, s * scale))
        .unzip();
    Ok(ConfidenceBand {
        x: estimate.x.clone(),
        center,
        s_hat: estimate.s_hat.clone(),
        lo,
        hi,
        c_hat,
        tau,
        meta: BandMeta {
            n,
            delta,
            h: estimate.meta.h,
            replications: 0,
        },
    })
}

/// Estimate, bootstrap and band for one dataset.
pub fn band_for_data(
    data: &ObservationSeries,
    est: &EstimatorConfig,
    boot: &BootstrapConfig,
    choice: CfChoice<'_>,
) -> Result<(ConfidenceBand, BootstrapDraws)> {
    let analysis = analyse(data, est, choice)?;
    let draws = bootstrap_quantile(&analysis.influence, &analysis.estimate.s_hat, boot)?;
    let mut band = confidence_band(&analysis.estimate, draws.c_hat, boot.tau, data.len(), data.delta)?;
    band.meta.replications = boot.replications;
    Ok((band, draws))
}

/// `(nΔh³)^{-1/2} √(log n)`.
pub fn width_scale(n: usize, delta: f64, h: f64) -> f64 {
    (n as f64 * delta * h.powi(3)).powf(-0.5) * (n as f64).ln().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub replicate: usize,
    pub covered: bool,
    pub max_width: f64,
    pub mean_width: f64,
    pub c_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub failed: Vec<ReplicateFailure>,
    pub coverage: f64,
    pub mean_width: f64,
    pub mean_max_width: f64,
    pub failures: usize,
    pub width_scale: f64,
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub tau: f64,
}

#[derive(Serialize)]
struct CoverageSummary<'a> {
    coverage: f64,
    mean_width: f64,
    failures: usize,
    mean_max_width: f64,
    width_scale: f64,
    replications: usize,
    n: usize,
    delta: f64,
    h: f64,
    tau: f64,
    failed: &'a [ReplicateFailure],
}

impl CoverageReport {
    pub fn failure_fraction(&self) -> f64 {
        let total = self.rows.len() + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }

    /// CSV `replicate,covered,max_width`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["replicate", "covered", "max_width"])?;
        for row in &self.rows {
            w.write_record([
                row.replicate.to_string(),
                row.covered.to_string(),
                row.max_width.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let summary = CoverageSummary {
            coverage: self.coverage,
            mean_width: self.mean_width,
            failures: self.failures,
            mean_max_width: self.mean_max_width,
            width_scale: self.width_scale,
            replications: self.rows.len() + self.failures,
            n: self.n,
            delta: self.delta,
            h: self.h,
            tau: self.tau,
            failed: &self.failed,
        };
        let text = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::domain(format!("cannot serialise coverage summary: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Repeats simulate → estimate → band `replications` times.
///
/// `generator(seed)` draws one dataset; replicate `r` uses
/// `child_seed(data_seed, r)` for the data and `child_seed(boot.seed, r)` for
/// the multipliers. Failed replicates are excluded from the averages and
/// counted.
pub fn coverage_experiment<G>(
    truth: &GroundTruth,
    generator: G,
    data_seed: u64,
    est: &EstimatorConfig,
    boot: &BootstrapConfig,
    replications: usize,
) -> Result<CoverageReport>
where
    G: Fn(u64) -> Result<ObservationSeries> + Sync,
{
    boot.validate()?;
    est.validate()?;
    if replications == 0 {
        return Err(Error::domain("at least one coverage replication is required"));
    }
    let outcomes: Vec<(usize, std::result::Result<(CoverageRow, usize, f64), String>)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let run = || -> Result<(CoverageRow, usize, f64)> {
                let data = generator(child_seed(data_seed, r as u64))?;
                let b = BootstrapConfig {
                    seed: child_seed(boot.seed, r as u64),
                    ..*boot
                };
                let (band, _) = band_for_data(&data, est, &b, CfChoice::Empirical)?;
                let covered = band.covers(|x| truth.rho(x))?;
                Ok((
                    CoverageRow {
                        replicate: r,
                        covered,
                        max_width: band.max_width(),
                        mean_width: band.mean_width(),
                        c_hat: band.c_hat,
                    },
                    data.len(),
                    data.delta,
                ))
            };
            (r, run().map_err(|e| e.to_string()))
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    let mut shape = None;
    for (r, outcome) in outcomes {
        match outcome {
            Ok((row, n, delta)) => {
                shape.get_or_insert((n, delta));
                rows.push(row);
            }
            Err(error) => failed.push(ReplicateFailure { replicate: r, error }),
        }
    }
    let count = rows.len() as f64;
    let (coverage, mean_width, mean_max_width) = if rows.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            rows.iter().filter(|r| r.covered).count() as f64 / count,
            rows.iter().map(|r| r.mean_width).sum::<f64>() / count,
            rows.iter().map(|r| r.max_width).sum::<f64>() / count,
        )
    };
    let (n, delta) = shape.unwrap_or((0, f64::NAN));
    Ok(CoverageReport {
        failures: failed.len(),
        rows,
        failed,
        coverage,
        mean_width,
        mean_max_width,
        width_scale: width_scale(n, delta, est.h),
        n,
        delta,
        h: est.h,
        tau: boot.tau,
    })
}
