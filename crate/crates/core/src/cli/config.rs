use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapConfig, DEFAULT_REPLICATIONS};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, DEFAULT_EVAL_POINTS, DEFAULT_INTERVAL};
use crate::levy_model::{GroundTruth, JumpDensity, LevyTriplet, MAKernel};
use crate::simulate::{
    default_delta, make_observations, simulate_oracle_increments, ObservationSeries, SamplingScheme,
};
use crate::spectral::{SmoothingKernel, DEFAULT_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSetting {
    Fixed(f64),
    Auto(Auto),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSetting {
    Fixed(f64),
    Search(Grid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSqSetting {
    Fixed(f64),
    Truth(Truth),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    True,
}

/// How observations are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Exact draws from the limit law of the increments.
    Limit,
    /// Second differences of a simulated moving-average path.
    Ma,
}

fn default_gamma() -> f64 {
    5.0
}
fn default_lambda() -> f64 {
    1.0
}
fn default_jump_rate() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.8
}
fn default_n() -> usize {
    10_000
}
fn default_delta_setting() -> DeltaSetting {
    DeltaSetting::Auto(Auto::Auto)
}
fn default_generator() -> Generator {
    Generator::Limit
}
fn default_h() -> BandwidthSetting {
    BandwidthSetting::Fixed(0.15)
}
fn default_interval() -> [f64; 2] {
    DEFAULT_INTERVAL
}
fn default_eval_points() -> usize {
    DEFAULT_EVAL_POINTS
}
fn default_nodes() -> usize {
    DEFAULT_NODES
}
fn default_flat_top() -> f64 {
    0.5
}
fn default_bootstrap() -> usize {
    DEFAULT_REPLICATIONS
}
fn default_tau() -> f64 {
    0.1
}
fn default_coverage() -> usize {
    100
}
fn default_grid_replications() -> usize {
    10
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Flat run configuration; every key is optional and unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Rate of the exponential jump-size density.
    #[serde(default = "default_jump_rate")]
    pub jump_rate: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_delta_setting")]
    pub delta: DeltaSetting,
    #[serde(default = "default_generator")]
    pub generator: Generator,
    #[serde(default = "default_h")]
    pub h: BandwidthSetting,
    #[serde(default = "default_interval")]
    pub interval: [f64; 2],
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
    #[serde(default = "default_nodes")]
    pub spectral_nodes: usize,
    #[serde(default = "default_flat_top")]
    pub flat_top: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_sq_hat: Option<SigmaSqSetting>,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_replications: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_coverage")]
    pub coverage_replications: usize,
    #[serde(default = "default_grid_replications")]
    pub grid_replications: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML, or JSON when the extension is `.json` (a run manifest).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| Error::Config(e.to_string());
        self.triplet().map_err(config)?;
        self.kernel().map_err(config)?;
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if let DeltaSetting::Fixed(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("delta must be positive, got {d}")));
            }
        }
        if let Some(SigmaSqSetting::Fixed(s)) = self.sigma_sq_hat {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma_sq_hat must be non-negative, got {s}")));
            }
        }
        SmoothingKernel::flat_top(self.flat_top).map_err(config)?;
        let h = match self.h {
            BandwidthSetting::Fixed(h) => h,
            BandwidthSetting::Search(_) => 0.5,
        };
        self.estimator_config(h, 0.0).map_err(config)?;
        self.bootstrap_config().map_err(config)?;
        if self.coverage_replications == 0 || self.grid_replications == 0 {
            return Err(Error::Config("replication counts must be positive".into()));
        }
        Ok(())
    }

    pub fn triplet(&self) -> Result<LevyTriplet> {
        LevyTriplet::new(
            self.gamma,
            self.sigma,
            self.lambda,
            JumpDensity::Exponential {
                rate: self.jump_rate,
            },
        )
    }

    pub fn kernel(&self) -> Result<MAKernel> {
        MAKernel::new(self.alpha)
    }

    pub fn truth(&self) -> Result<GroundTruth> {
        Ok(GroundTruth::new(self.triplet()?))
    }

    pub fn resolved_delta(&self) -> f64 {
        match self.delta {
            DeltaSetting::Fixed(d) => d,
            DeltaSetting::Auto(_) => default_delta(self.n),
        }
    }

    /// Copy with `delta` made explicit, as written to manifests.
    pub fn resolved(&self) -> Self {
        Self {
            delta: DeltaSetting::Fixed(self.resolved_delta()),
            ..self.clone()
        }
    }

    pub fn scheme(&self, seed: u64) -> Result<SamplingScheme> {
        SamplingScheme::new(self.resolved_delta(), self.n, seed)
    }

    /// `σ̂²`: the configured value, else the model's `σ²` for simulated data
    /// and `0` for external data.
    pub fn sigma_sq_hat(&self, simulated: bool) -> f64 {
        match self.sigma_sq_hat {
            Some(SigmaSqSetting::Fixed(s)) => s,
            Some(SigmaSqSetting::Truth(_)) => self.sigma * self.sigma,
            None if simulated => self.sigma * self.sigma,
            None => 0.0,
        }
    }

    pub fn estimator_config(&self, h: f64, sigma_sq_hat: f64) -> Result<EstimatorConfig> {
        EstimatorConfig::new(h, self.kernel()?)?
            .with_interval(self.interval, self.eval_points)?
            .with_nodes(self.spectral_nodes)?
            .with_smoothing(SmoothingKernel::flat_top(self.flat_top)?)
            .with_sigma_sq_hat(sigma_sq_hat)
    }

    pub fn bootstrap_config(&self) -> Result<BootstrapConfig> {
        BootstrapConfig::new(self.bootstrap_replications, self.tau, self.seed)
    }

    /// Simulated observations under `seed`.
    pub fn simulate(&self, seed: u64) -> Result<ObservationSeries> {
        let triplet = self.triplet()?;
        let kernel = self.kernel()?;
        let scheme = self.scheme(seed)?;
        match self.generator {
            Generator::Limit => simulate_oracle_increments(&triplet, &kernel, &scheme),
            Generator::Ma => make_observations(&triplet, &kernel, &scheme),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.n, 10_000);
        assert_eq!(cfg.resolved_delta(), 0.01);
        assert_eq!(cfg.generator, Generator::Limit);
        let cfg = RunConfig::from_toml("n = 400\ndelta = 0.02\nh = \"grid\"\nsigma_sq_hat = \"true\"\n").unwrap();
        assert_eq!(cfg.resolved_delta(), 0.02);
        assert_eq!(cfg.h, BandwidthSetting::Search(Grid::Grid));
        assert_eq!(cfg.sigma_sq_hat(false), 0.0);
        let cfg = RunConfig::from_toml("delta = \"auto\"\nn = 100").unwrap();
        assert_eq!(cfg.resolved_delta(), 0.1);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let err = RunConfig::from_toml("alhpa = 0.5").unwrap_err();
        assert!(err.to_string().contains("alhpa"), "{err}");
        assert!(RunConfig::from_toml("alpha = 1.5").is_err());
        assert!(RunConfig::from_toml("h = \"adaptive\"").is_err());
        assert!(RunConfig::from_toml("interval = [-1.0, 2.0]").is_err());
        assert!(RunConfig::from_toml("tau = 0.0").is_err());
        let err = RunConfig::from_toml("n = 10\nn = 11").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn manifest_round_trip() {
        let cfg = RunConfig::from_toml("n = 250\nseed = 9\nh = 0.2").unwrap().resolved();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&json).unwrap(), cfg);
    }
}
