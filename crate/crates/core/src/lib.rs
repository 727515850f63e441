//! Nonparametric estimation of the Lévy density driving a moving average
//! process, observed at high frequency, with uniform confidence bands from a
//! Gaussian multiplier bootstrap.
//!
//! The pipeline is
//! [`simulate`] → [`spectral`] (characteristic functions on a frequency grid)
//! → [`estimator`] (`ρ̂(x) = x²ν̂(x)` and its variance) → [`bootstrap`].

pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod levy_model;
pub mod quadrature;
pub mod rng;
pub mod simulate;
pub mod spectral;

pub use bootstrap::{
    bootstrap_quantile, confidence_band, coverage_experiment, multiplier_sup, BootstrapConfig,
    ConfidenceBand, CoverageReport,
};
pub use error::{Error, Result};
pub use estimator::{
    admissibility_report, bandwidth_grid_search, estimate_rho, estimate_s2, DensityEstimate,
    EstimatorConfig,
};
pub use levy_model::{GroundTruth, JumpDensity, LevyTriplet, MAKernel};
pub use simulate::{ObservationSeries, SamplingScheme};
pub use spectral::{EcfBundle, SmoothingKernel, SpectralGrid, SpectralKernels};
