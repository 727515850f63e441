//! Spectral estimator of `ρ(x) = x²ν(x)`, its pointwise variance, bandwidth
//! search in simulation mode and the bandwidth admissibility diagnostics.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{GroundTruth, LevyTriplet, MAKernel};
use crate::simulate::ObservationSeries;
use crate::spectral::{
    fourier_sum, EcfBundle, InfluenceKernels, SmoothingKernel, SpectralGrid, SpectralKernels,
    DEFAULT_NODES,
};

/// Default evaluation interval.
pub const DEFAULT_INTERVAL: [f64; 2] = [0.5, 3.0];
pub const DEFAULT_EVAL_POINTS: usize = 101;

/// `count` equispaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { b } else { a + i as f64 * step })
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub h: f64,
    pub sigma_sq_hat: f64,
    pub interval: [f64; 2],
    pub eval_points: Vec<f64>,
    pub grid: SpectralGrid,
    pub smoothing: SmoothingKernel,
    pub kernel: MAKernel,
}

impl EstimatorConfig {
    /// Default interval, evaluation grid, node count and flat top.
    pub fn new(h: f64, kernel: MAKernel) -> Result<Self> {
        let [a, b] = DEFAULT_INTERVAL;
        let cfg = Self {
            h,
            sigma_sq_hat: 0.0,
            interval: DEFAULT_INTERVAL,
            eval_points: linspace(a, b, DEFAULT_EVAL_POINTS),
            grid: SpectralGrid::new(h, DEFAULT_NODES)?,
            smoothing: SmoothingKernel::default(),
            kernel,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_sigma_sq_hat(mut self, s2: f64) -> Result<Self> {
        self.sigma_sq_hat = s2;
        self.validate()?;
        Ok(self)
    }

    pub fn with_interval(mut self, interval: [f64; 2], count: usize) -> Result<Self> {
        self.interval = interval;
        self.eval_points = linspace(interval[0], interval[1], count);
        self.validate()?;
        Ok(self)
    }

    pub fn with_nodes(mut self, m: usize) -> Result<Self> {
        self.grid = SpectralGrid::new(self.h, m)?;
        Ok(self)
    }

    pub fn with_smoothing(mut self, smoothing: SmoothingKernel) -> Self {
        self.smoothing = smoothing;
        self
    }

    /// Same settings at another bandwidth.
    pub fn with_bandwidth(&self, h: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.h = h;
        cfg.grid = SpectralGrid::new(h, self.grid.len())?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.interval;
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::domain(format!("bandwidth must be positive, got {}", self.h)));
        }
        if !(self.sigma_sq_hat >= 0.0 && self.sigma_sq_hat.is_finite()) {
            return Err(Error::domain("sigma_sq_hat must be finite and non-negative"));
        }
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(Error::domain(format!("invalid interval [{a}, {b}]")));
        }
        if a <= 0.0 && b >= 0.0 {
            return Err(Error::domain(format!("interval [{a}, {b}] contains 0")));
        }
        if self.eval_points.is_empty() {
            return Err(Error::domain("no evaluation points"));
        }
        if self.eval_points.iter().any(|&x| !(x >= a && x <= b)) {
            return Err(Error::domain("evaluation points must lie in the interval"));
        }
        if self.grid.h() != self.h {
            return Err(Error::domain("spectral grid does not match the bandwidth"));
        }
        Ok(())
    }

    /// True when `h³ < κΔ`; the estimator still runs.
    pub fn bandwidth_warning(&self, delta: f64, kappa: f64) -> bool {
        self.h.powi(3) < kappa * delta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub x: Vec<f64>,
    pub rho_hat: Vec<Complex64>,
    pub s_hat: Vec<f64>,
    pub meta: EstimateMeta,
}

impl DensityEstimate {
    pub fn real(&self) -> Vec<f64> {
        self.rho_hat.iter().map(|z| z.re).collect()
    }

    /// `sup|Im ρ̂| / (1 + sup|Re ρ̂|)`.
    pub fn imaginary_ratio(&self) -> f64 {
        imaginary_ratio(&self.rho_hat)
    }

    /// CSV `x,rho_hat_re,rho_hat_im,s_hat`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "rho_hat_re", "rho_hat_im", "s_hat"])?;
        for i in 0..self.x.len() {
            let s = self.s_hat.get(i).copied().unwrap_or(f64::NAN);
            w.write_record([
                self.x[i].to_string(),
                self.rho_hat[i].re.to_string(),
                self.rho_hat[i].im.to_string(),
                s.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn imaginary_ratio(values: &[Complex64]) -> f64 {
    let im = values.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
    let re = values.iter().fold(0.0_f64, |m, z| m.max(z.re.abs()));
    im / (1.0 + re)
}

/// Characteristic function used by the estimator.
#[derive(Debug, Clone, Copy)]
pub enum CfChoice<'a> {
    Empirical,
    /// `exp(ΔΨ)` of the given model in place of the empirical one.
    Exact(&'a LevyTriplet),
}

pub fn spectral_bundle(
    data: &ObservationSeries,
    cfg: &EstimatorConfig,
    choice: CfChoice<'_>,
) -> Result<EcfBundle> {
    cfg.validate()?;
    match choice {
        CfChoice::Empirical => EcfBundle::empirical(data, &cfg.grid),
        CfChoice::Exact(triplet) => EcfBundle::exact(triplet, &cfg.kernel, data.delta, &cfg.grid),
    }
}

/// `ρ̂` on the evaluation points from a prepared bundle.
///
/// `(L_α⁻¹Ψ̂)'' = ((2-α)/2)Ψ̂'' + ((1-α)/2) u Ψ̂'''`, so the integrand needs
/// only second and third derivatives of the log-ECF.
pub fn rho_from_bundle(bundle: &EcfBundle, cfg: &EstimatorConfig) -> Result<Vec<Complex64>> {
    let alpha = cfg.kernel.alpha();
    let grid = &bundle.grid;
    let h = grid.h();
    let p = 0.5 * (2.0 - alpha);
    let r = 0.5 * (1.0 - alpha);
    let mut coeffs = Vec::with_capacity(grid.len());
    for (k, &u) in grid.nodes().iter().enumerate() {
        let curvature = bundle.exponent[2][k] * p + bundle.exponent[3][k] * (r * u) + cfg.sigma_sq_hat;
        let c = curvature * (-grid.weight(k) * cfg.smoothing.phi(u * h) / (2.0 * PI));
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite { index: k, u });
        }
        coeffs.push(c);
    }
    Ok(cfg
        .eval_points
        .par_iter()
        .map(|&x| fourier_sum(&coeffs, grid, x))
        .collect())
}

/// `ρ̂` and `ŝ` with everything the bootstrap reuses.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub estimate: DensityEstimate,
    pub kernels: SpectralKernels,
    pub influence: InfluenceMatrix,
}

pub fn analyse(data: &ObservationSeries, cfg: &EstimatorConfig, choice: CfChoice<'_>) -> Result<Analysis> {
    if data.len() < 2 {
        return Err(Error::domain("at least two observations are required"));
    }
    let bundle = spectral_bundle(data, cfg, choice)?;
    let rho_hat = rho_from_bundle(&bundle, cfg)?;
    let kernels = SpectralKernels::from_bundle(&bundle, cfg.kernel.alpha(), &cfg.smoothing)?;
    let influence = InfluenceMatrix::build(data, &cfg.eval_points, &kernels)?;
    let s_hat = influence.variance().iter().map(|v| v.sqrt()).collect();
    Ok(Analysis {
        estimate: DensityEstimate {
            x: cfg.eval_points.clone(),
            rho_hat,
            s_hat,
            meta: EstimateMeta {
                n: data.len(),
                delta: data.delta,
                h: cfg.h,
                seed: None,
            },
        },
        kernels,
        influence,
    })
}

/// `ρ̂_n` and `ŝ_n` on the evaluation points.
pub fn estimate_rho(data: &ObservationSeries, cfg: &EstimatorConfig) -> Result<DensityEstimate> {
    analyse(data, cfg, CfChoice::Empirical).map(|a| a.estimate)
}

/// `ρ̂` with the exact characteristic function of the model.
pub fn estimate_rho_oracle(
    triplet: &LevyTriplet,
    delta: f64,
    cfg: &EstimatorConfig,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let bundle = EcfBundle::exact(triplet, &cfg.kernel, delta, &cfg.grid)?;
    rho_from_bundle(&bundle, cfg)
}

/// `A_g(x) = Σ_m (i d_g)^m K̂_m(x - d_g)` for every distinct datum `d_g`.
#[derive(Debug, Clone)]
pub struct InfluenceMatrix {
    pub x: Vec<f64>,
    /// Distinct data values and multiplicities.
    pub groups: Vec<(f64, usize)>,
    /// Group of each observation, in the original order.
    pub group_of: Vec<usize>,
    /// Row-major, one row of `x.len()` values per group.
    pub values: Vec<Complex64>,
    pub mean: Vec<Complex64>,
    pub n: usize,
}

impl InfluenceMatrix {
    pub fn build<K: InfluenceKernels>(data: &ObservationSeries, xs: &[f64], kernels: &K) -> Result<Self> {
        let groups = data.distinct();
        let group_of = data
            .increments
            .iter()
            .map(|x| {
                groups
                    .binary_search_by(|g| g.0.total_cmp(x))
                    .expect("every observation has a group")
            })
            .collect();
        let rows: Vec<Vec<Complex64>> = groups
            .par_iter()
            .map(|&(d, _)| kernels.influence_row(d, xs))
            .collect();
        let l = xs.len();
        let values: Vec<Complex64> = rows.into_iter().flatten().collect();
        if let Some(k) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain(format!(
                "non-finite influence value at x = {}",
                xs[k % l]
            )));
        }
        let n = data.len();
        let mut mean = vec![Complex64::new(0.0, 0.0); l];
        for (g, &(_, c)) in groups.iter().enumerate() {
            let share = c as f64 / n as f64;
            for i in 0..l {
                mean[i] += values[g * l + i] * share;
            }
        }
        Ok(Self {
            x: xs.to_vec(),
            groups,
            group_of,
            values,
            mean,
            n,
        })
    }

    pub fn row(&self, g: usize) -> &[Complex64] {
        let l = self.x.len();
        &self.values[g * l..(g + 1) * l]
    }

    /// `E|A - EA|²` over the sample, by the two-pass formula.
    pub fn variance(&self) -> Vec<f64> {
        let l = self.x.len();
        let mut out = vec![0.0; l];
        for (g, &(_, c)) in self.groups.iter().enumerate() {
            for i in 0..l {
                out[i] += c as f64 * (self.values[g * l + i] - self.mean[i]).norm_sqr();
            }
        }
        out.iter().map(|v| v / self.n as f64).collect()
    }
}

/// `ŝ²_n(x)` on the evaluation points for the given kernels.
pub fn estimate_s2<K: InfluenceKernels>(
    data: &ObservationSeries,
    cfg: &EstimatorConfig,
    kernels: &K,
) -> Result<Vec<f64>> {
    if data.len() < 2 {
        return Err(Error::domain("variance needs at least two observations"));
    }
    Ok(InfluenceMatrix::build(data, &cfg.eval_points, kernels)?.variance())
}

/// `0.05, 0.10, ..., 0.50`.
pub fn coarse_bandwidth_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 20.0).collect()
}

/// `0.08, 0.09, ..., 0.25`.
pub fn refined_bandwidth_grid() -> Vec<f64> {
    (8..=25).map(|k| k as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub h: f64,
    pub mse_mean: f64,
    pub mse_se: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best_h: f64,
    pub table: Vec<GridRow>,
}

impl GridSearch {
    /// Smallest mean MSE; ties go to the smaller `h`, then to the earlier row.
    pub fn argmin(table: &[GridRow]) -> Option<GridRow> {
        let mut best: Option<GridRow> = None;
        for row in table {
            if !row.mse_mean.is_finite() {
                continue;
            }
            best = match best {
                None => Some(*row),
                Some(b) if row.mse_mean < b.mse_mean || (row.mse_mean == b.mse_mean && row.h < b.h) => {
                    Some(*row)
                }
                keep => keep,
            };
        }
        best
    }

    /// Joins two searches over the same data stream.
    pub fn merge(&self, other: &GridSearch) -> Result<GridSearch> {
        let mut table = self.table.clone();
        table.extend_from_slice(&other.table);
        let best = Self::argmin(&table).ok_or_else(|| Error::domain("every bandwidth failed"))?;
        Ok(GridSearch {
            best_h: best.h,
            table,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["h", "mse_mean", "mse_se", "replications"])?;
        for row in &self.table {
            w.write_record([
                row.h.to_string(),
                row.mse_mean.to_string(),
                row.mse_se.to_string(),
                row.replications.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean of `(Re ρ̂ - ρ)²` over the evaluation points.
pub fn mse_against_truth(rho_hat: &[Complex64], xs: &[f64], truth: &GroundTruth) -> Result<f64> {
    let mut total = 0.0;
    for (z, &x) in rho_hat.iter().zip(xs) {
        let e = z.re - truth.rho(x)?;
        total += e * e;
    }
    Ok(total / xs.len() as f64)
}

/// Root of [`mse_against_truth`].
pub fn rmse_against_truth(rho_hat: &[Complex64], xs: &[f64], truth: &GroundTruth) -> Result<f64> {
    mse_against_truth(rho_hat, xs, truth).map(f64::sqrt)
}

/// Mean-square error of `Re ρ̂` against the true `ρ` for every `h`, averaged
/// over `replications` datasets from `generator(r)`.
///
/// Every bandwidth sees the same datasets. A failure at one `h` makes its
/// MSE infinite; the search carries on.
pub fn bandwidth_grid_search<G>(
    truth: &GroundTruth,
    generator: G,
    h_grid: &[f64],
    replications: usize,
    template: &EstimatorConfig,
) -> Result<GridSearch>
where
    G: Fn(usize) -> Result<ObservationSeries> + Sync,
{
    if h_grid.is_empty() || replications == 0 {
        return Err(Error::domain("grid search needs at least one bandwidth and one replication"));
    }
    let configs: Vec<EstimatorConfig> = h_grid
        .iter()
        .map(|&h| template.with_bandwidth(h))
        .collect::<Result<_>>()?;
    let per_replicate: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let data = generator(r)?;
            Ok(configs
                .iter()
                .map(|cfg| {
                    spectral_bundle(&data, cfg, CfChoice::Empirical)
                        .and_then(|b| rho_from_bundle(&b, cfg))
                        .and_then(|rho| mse_against_truth(&rho, &cfg.eval_points, truth))
                        .unwrap_or(f64::INFINITY)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let table: Vec<GridRow> = h_grid
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let values: Vec<f64> = per_replicate.iter().map(|v| v[i]).collect();
            let r = values.len() as f64;
            let mean = values.iter().sum::<f64>() / r;
            let se = if !mean.is_finite() {
                f64::INFINITY
            } else if values.len() < 2 {
                0.0
            } else {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
                (var / r).sqrt()
            };
            GridRow {
                h,
                mse_mean: mean,
                mse_se: se,
                replications: values.len(),
            }
        })
        .collect();
    let best = GridSearch::argmin(&table).ok_or_else(|| Error::domain("every bandwidth failed"))?;
    Ok(GridSearch {
        best_h: best.h,
        table,
    })
}

/// Advisory checks on `(n, Δ, h)` for smoothness order `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub smoothness: f64,
    pub epsilon: f64,
    /// `h³ ≥ Δ`.
    pub cube_dominates_delta: bool,
    pub lower_bound: f64,
    /// `h ≥ n^{-(1-ε)/6}`.
    pub above_lower_bound: bool,
    pub upper_bound: f64,
    /// `h ≤ n^{-(1-2ε)/(2r+5)}`.
    pub below_upper_bound: bool,
}

pub fn admissibility_report(n: usize, delta: f64, h: f64, r: f64) -> Admissibility {
    let ln_n = (n as f64).ln();
    let epsilon = 1.0 / ln_n;
    let lower_bound = (n as f64).powf(-(1.0 - epsilon) / 6.0);
    let upper_bound = (n as f64).powf(-(1.0 - 2.0 * epsilon) / (2.0 * r + 5.0));
    // Accept equality up to rounding in h = Δ^{1/3}.
    let cube = h * h * h;
    Admissibility {
        n,
        delta,
        h,
        smoothness: r,
        epsilon,
        cube_dominates_delta: cube >= delta * (1.0 - 8.0 * f64::EPSILON),
        lower_bound,
        above_lower_bound: h >= lower_bound,
        upper_bound,
        below_upper_bound: h <= upper_bound,
    }
}
