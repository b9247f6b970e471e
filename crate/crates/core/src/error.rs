//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("strikes not increasing")]
    StrikesNotIncreasing,

    #[error("forward {forward} inconsistent with spot and rate differential (relative gap {gap:e})")]
    ForwardInconsistent { forward: f64, gap: f64 },

    #[error("price at upper bound")]
    PriceAtUpperBound,

    #[error("price {price} outside no-arbitrage band ({lower}, {upper})")]
    PriceOutsideBand { price: f64, lower: f64, upper: f64 },

    #[error("implied vol solver did not converge after {iterations} iterations (residual {residual:e})")]
    ImpliedVolNoConvergence { iterations: usize, residual: f64 },

    #[error("quadrature did not converge: estimate {value:e}, error estimate {error:e}")]
    Quadrature { value: f64, error: f64 },

    #[error("inverse not mean-reverting: kappa - rho * sigma = {0}")]
    NotMeanReverting(f64),

    #[error("family not closed under inversion")]
    NotClosedUnderInversion,

    #[error("non-symmetric grid: no reciprocal for level {0}")]
    NonSymmetricGrid(f64),

    #[error("cutoff required for integrability (q = {0})")]
    CutoffRequired(f64),

    #[error("intensity mismatch: expected lambda_f = {expected}, got {got}")]
    IntensityMismatch { expected: f64, got: f64 },

    #[error("insufficient quotes: need at least {needed}, got {got}")]
    InsufficientQuotes { needed: usize, got: usize },

    #[error("beta out of range: {0}")]
    BetaOutOfRange(f64),

    #[error("calibration failed: no start produced a finite objective")]
    CalibrationFailed,

    #[error("smile strike grids differ")]
    GridMismatch,

    #[error("terminal sample carries no Radon-Nikodym weights")]
    MissingWeights,

    #[error("envelope acceptance rate {0:e} below 0.1%")]
    LowAcceptance(f64),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

/// Fails with `InvalidParameter` unless `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}
