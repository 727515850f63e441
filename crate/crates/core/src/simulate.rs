//! Sample paths of the moving average `Z_t = ∫ K_α(t - s) dL_s` driven by a
//! two-sided compound Poisson process, and the observation series fed to the
//! estimator.
//!
//! Two observation generators exist:
//!
//! * [`make_observations`] builds `X_j = (Z_{jΔ} - Z_{(j-1)Δ}) / Δ` from a
//!   simulated path and returns the increments `X_j - X_{j-1}`;
//! * [`simulate_oracle_increments`] draws i.i.d. increments whose
//!   characteristic function is exactly `exp(Δ Ψ(u))`, `Ψ = L_α ψ`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{JumpDensity, LevyTriplet, MAKernel};
use crate::rng::{stream, StreamRng};

/// Equidistant sampling: `n` increments at step `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingScheme {
    pub delta: f64,
    pub n: usize,
    pub seed: u64,
}

impl SamplingScheme {
    pub fn new(delta: f64, n: usize, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("sampling step must be positive, got {delta}")));
        }
        if n == 0 {
            return Err(Error::domain("at least one increment is required"));
        }
        Ok(Self { delta, n, seed })
    }

    /// `Δ = n^{-1/2}`, so that `Δ → 0` while `nΔ → ∞`.
    pub fn with_default_delta(n: usize, seed: u64) -> Result<Self> {
        Self::new(default_delta(n), n, seed)
    }

    /// True when `h³ < κΔ`, i.e. the bandwidth is too small for the step.
    pub fn bandwidth_warning(&self, h: f64, kappa: f64) -> bool {
        h * h * h < kappa * self.delta
    }
}

pub fn default_delta(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// Jumps of one side of the two-sided driver, ordered in time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpSide {
    pub times: Vec<f64>,
    pub sizes: Vec<f64>,
}

impl JumpSide {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Jumps of `CPP⁽²⁾` (times `< 0`) and `CPP⁽¹⁾` (times `≥ 0`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpRecord {
    pub past: JumpSide,
    pub future: JumpSide,
}

impl JumpRecord {
    /// A record holding a single jump, for deterministic checks.
    pub fn single(time: f64, size: f64) -> Self {
        let side = JumpSide {
            times: vec![time],
            sizes: vec![size],
        };
        if time < 0.0 {
            Self {
                past: side,
                future: JumpSide::default(),
            }
        } else {
            Self {
                past: JumpSide::default(),
                future: side,
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.past
            .times
            .iter()
            .zip(&self.past.sizes)
            .chain(self.future.times.iter().zip(&self.future.sizes))
            .map(|(&t, &y)| (t, y))
    }

    pub fn len(&self) -> usize {
        self.past.len() + self.future.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count_in(&self, lower: f64, upper: f64) -> usize {
        self.iter().filter(|&(t, _)| t >= lower && t <= upper).count()
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    draw as usize
}

fn simulate_side<R: Rng + ?Sized>(
    lower: f64,
    upper: f64,
    lambda: f64,
    marks: &JumpDensity,
    rng: &mut R,
) -> JumpSide {
    if upper <= lower {
        return JumpSide::default();
    }
    let count = poisson_count(lambda * (upper - lower), rng);
    let mut times: Vec<f64> = (0..count)
        .map(|_| lower + (upper - lower) * rng.random::<f64>())
        .collect();
    times.sort_by(f64::total_cmp);
    let sizes = (0..count).map(|_| marks.sample(rng)).collect();
    JumpSide { times, sizes }
}

/// Jumps of both compound Poisson parts on `[lower, upper]`.
pub fn simulate_jumps<R: Rng + ?Sized>(
    lower: f64,
    upper: f64,
    triplet: &LevyTriplet,
    rng: &mut R,
) -> JumpRecord {
    let past = simulate_side(lower, upper.min(0.0), triplet.lambda, &triplet.jumps, rng);
    let future = simulate_side(lower.max(0.0), upper, triplet.lambda, &triplet.jumps, rng);
    JumpRecord { past, future }
}

/// Brownian increments on a uniform mesh, for the optional Gaussian part.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    pub start: f64,
    pub mesh: f64,
    pub increments: Vec<f64>,
}

impl GaussianNoise {
    pub fn simulate<R: Rng + ?Sized>(lower: f64, upper: f64, mesh: f64, rng: &mut R) -> Self {
        let cells = ((upper - lower) / mesh).ceil().max(1.0) as usize;
        let scale = mesh.sqrt();
        let increments = (0..cells)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            start: lower,
            mesh,
            increments,
        }
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::domain("time grid is empty"));
    }
    if t_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::domain("time grid must be sorted"));
    }
    Ok(())
}

/// `Z_t` on a sorted grid from a given jump record (and Gaussian noise when
/// `σ > 0`).
pub fn z_path_from_jumps(
    t_grid: &[f64],
    triplet: &LevyTriplet,
    kernel: &MAKernel,
    jumps: &JumpRecord,
    noise: Option<&GaussianNoise>,
) -> Result<Vec<f64>> {
    check_grid(t_grid)?;
    let reach = kernel.support();
    let mut z = vec![triplet.gamma * kernel.integral(); t_grid.len()];
    for (s, y) in jumps.iter() {
        let lo = t_grid.partition_point(|&t| t < s - reach);
        let hi = t_grid.partition_point(|&t| t <= s + reach);
        for (zi, &t) in z[lo..hi].iter_mut().zip(&t_grid[lo..hi]) {
            *zi += kernel.eval(t - s) * y;
        }
    }
    if let (Some(noise), true) = (noise, triplet.sigma > 0.0) {
        for (i, &dw) in noise.increments.iter().enumerate() {
            let s = noise.start + (i as f64 + 0.5) * noise.mesh;
            let lo = t_grid.partition_point(|&t| t < s - reach);
            let hi = t_grid.partition_point(|&t| t <= s + reach);
            for (zi, &t) in z[lo..hi].iter_mut().zip(&t_grid[lo..hi]) {
                *zi += triplet.sigma * kernel.eval(t - s) * dw;
            }
        }
    }
    Ok(z)
}

fn simulate_path_with(
    t_grid: &[f64],
    triplet: &LevyTriplet,
    kernel: &MAKernel,
    mesh: f64,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, JumpRecord)> {
    check_grid(t_grid)?;
    let lower = t_grid[0] - kernel.support();
    let upper = t_grid[t_grid.len() - 1] + kernel.support();
    let jumps = simulate_jumps(lower, upper, triplet, rng);
    let noise = (triplet.sigma > 0.0).then(|| GaussianNoise::simulate(lower, upper, mesh, rng));
    let z = z_path_from_jumps(t_grid, triplet, kernel, &jumps, noise.as_ref())?;
    Ok((z, jumps))
}

fn gaussian_mesh(t_grid: &[f64]) -> f64 {
    let step = t_grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if step.is_finite() {
        step / 10.0
    } else {
        1e-3
    }
}

/// Simulated path together with the jumps that produced it.
pub fn simulate_z_path_with_jumps(
    t_grid: &[f64],
    triplet: &LevyTriplet,
    kernel: &MAKernel,
    seed: u64,
) -> Result<(Vec<f64>, JumpRecord)> {
    check_grid(t_grid)?;
    let mut rng = stream(seed, 0);
    simulate_path_with(t_grid, triplet, kernel, gaussian_mesh(t_grid), &mut rng)
}

pub fn simulate_z_path(
    t_grid: &[f64],
    triplet: &LevyTriplet,
    kernel: &MAKernel,
    seed: u64,
) -> Result<Vec<f64>> {
    simulate_z_path_with_jumps(t_grid, triplet, kernel, seed).map(|(z, _)| z)
}

/// How an observation series came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationSource {
    /// Second differences of a simulated moving-average path.
    MovingAverage,
    /// Exact compound-Poisson draws from the limit law `exp(ΔΨ)`.
    LimitLaw,
    /// Loaded from a file.
    External,
}

/// `n` increments `(ΔX)_j` at sampling step `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    pub increments: Vec<f64>,
    pub delta: f64,
    pub source: ObservationSource,
}

impl ObservationSeries {
    pub fn new(increments: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("sampling step must be positive, got {delta}")));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("observations must be finite"));
        }
        Ok(Self {
            increments,
            delta,
            source: ObservationSource::External,
        })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Distinct values in increasing order with their multiplicities.
    ///
    /// Every statistic of the estimator is a symmetric sum over the sample;
    /// evaluating it over this sorted table makes results independent of the
    /// order of the increments.
    pub fn distinct(&self) -> Vec<(f64, usize)> {
        let mut sorted = self.increments.clone();
        sorted.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, usize)> = Vec::new();
        for x in sorted {
            match out.last_mut() {
                Some((v, c)) if v.to_bits() == x.to_bits() => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    }

    pub fn mean_square(&self) -> f64 {
        self.increments.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    /// CSV with header `j,delta_x`, `j` counting from 1.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["j", "delta_x"])?;
        for (j, x) in self.increments.iter().enumerate() {
            w.write_record([(j + 1).to_string(), x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, delta: f64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "j" || &headers[1] != "delta_x" {
            return Err(Error::Config(format!(
                "{}: expected header `j,delta_x`",
                path.display()
            )));
        }
        let mut increments = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let x: f64 = record[1].trim().parse().map_err(|_| {
                Error::Config(format!(
                    "{}: line {}: cannot parse `{}` as a number",
                    path.display(),
                    line + 2,
                    &record[1]
                ))
            })?;
            increments.push(x);
        }
        Self::new(increments, delta)
    }

    /// Little-endian `u64` count followed by the values as `f64`.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for x in &self.increments {
            w.write_all(&x.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path, delta: f64) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let count = u64::from_le_bytes(word) as usize;
        let mut increments = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut word)?;
            increments.push(f64::from_le_bytes(word));
        }
        Self::new(increments, delta)
    }
}

/// Observations of the limit process built from a simulated MA path:
/// `X_j = (Z_{jΔ} - Z_{(j-1)Δ})/Δ` for `j = 0..=n`, increments `X_j - X_{j-1}`.
pub fn make_observations(
    triplet: &LevyTriplet,
    kernel: &MAKernel,
    scheme: &SamplingScheme,
) -> Result<ObservationSeries> {
    let delta = scheme.delta;
    let n = scheme.n;
    // Grid t = jΔ for j = -1..=n.
    let t_grid: Vec<f64> = (0..n + 2).map(|i| (i as f64 - 1.0) * delta).collect();
    let mut rng = stream(scheme.seed, 0);
    let (z, _) = simulate_path_with(&t_grid, triplet, kernel, delta / 10.0, &mut rng)?;
    let x: Vec<f64> = z.windows(2).map(|w| (w[1] - w[0]) / delta).collect();
    let increments = x.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(ObservationSeries {
        increments,
        delta,
        source: ObservationSource::MovingAverage,
    })
}

/// Parameters of the limit law of one increment: drift `Δ(2γ - 2λ m₁)`,
/// Gaussian variance `2Δσ²/(2-α)`, and a compound Poisson part with rate
/// `2λΔ/α` whose marks are `Y · U^{(1-α)/α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitLaw {
    pub drift: f64,
    pub gaussian_sd: f64,
    pub jump_rate: f64,
    pub mark_power: f64,
}

impl LimitLaw {
    pub fn new(triplet: &LevyTriplet, kernel: &MAKernel, delta: f64) -> Result<Self> {
        let alpha = kernel.alpha();
        let m1 = if triplet.lambda > 0.0 {
            triplet.jumps.truncated_mean()?
        } else {
            0.0
        };
        Ok(Self {
            drift: delta * (2.0 * triplet.gamma - 2.0 * triplet.lambda * m1),
            gaussian_sd: triplet.sigma * (2.0 * delta / (2.0 - alpha)).sqrt(),
            jump_rate: 2.0 * triplet.lambda * delta / alpha,
            mark_power: (1.0 - alpha) / alpha,
        })
    }
}

/// I.i.d. increments with characteristic function `exp(Δ Ψ(u))`.
///
/// The driver is finite-activity, so `L_α ψ` is a compound Poisson exponent
/// plus drift and Gaussian terms and the draw is exact.
pub fn simulate_oracle_increments(
    triplet: &LevyTriplet,
    kernel: &MAKernel,
    scheme: &SamplingScheme,
) -> Result<ObservationSeries> {
    let law = LimitLaw::new(triplet, kernel, scheme.delta)?;
    let mut rng = stream(scheme.seed, 1);
    let mut increments = Vec::with_capacity(scheme.n);
    for _ in 0..scheme.n {
        let mut x = law.drift;
        let count = poisson_count(law.jump_rate, &mut rng);
        for _ in 0..count {
            let y = triplet.jumps.sample(&mut rng);
            let u: f64 = rng.random();
            x += y * u.powf(law.mark_power);
        }
        if law.gaussian_sd > 0.0 {
            x += law.gaussian_sd * rng.sample::<f64, _>(StandardNormal);
        }
        increments.push(x);
    }
    Ok(ObservationSeries {
        increments,
        delta: scheme.delta,
        source: ObservationSource::LimitLaw,
    })
}
