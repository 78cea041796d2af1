use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of panel budget before meeting its tolerance.
    #[error("quadrature did not converge for {kernel} at t = {t}: error estimate {estimate:e} after {panels} panels")]
    Quadrature {
        kernel: &'static str,
        t: f64,
        estimate: f64,
        panels: usize,
    },

    /// A non-finite value showed up where a finite one is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The Bloch vector left the unit ball by more than the physicality slack.
    #[error("integration failure at t = {t}: |Δ|² = {norm_sq} exceeds 1 + {slack:e}")]
    Unphysical { t: f64, norm_sq: f64, slack: f64 },

    /// Inconsistent or invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
