use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature on [{lower}, {upper}] did not converge: estimated error {achieved:.3e}, \
         requested {requested:.3e}"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        achieved: f64,
        requested: f64,
    },

    /// The plug-in characteristic function came too close to zero inside the
    /// spectral window; the bandwidth has to grow.
    #[error(
        "|phi_hat(u)| = {modulus:.3e} at u = {u} is below the floor {floor}; increase the bandwidth h"
    )]
    BandwidthTooSmall { u: f64, modulus: f64, floor: f64 },

    #[error("non-finite value encountered at spectral node {index} (u = {u})")]
    NonFinite { index: usize, u: f64 },

    #[error("degenerate variance estimate at x = {x}")]
    DegenerateVariance { x: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::BandwidthTooSmall { .. }
                | Error::NonFinite { .. }
                | Error::DegenerateVariance { .. }
        )
    }
}
