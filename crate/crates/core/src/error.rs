//! Top-level error type.

use thiserror::Error;

use crate::config::ConfigError;
use crate::fit::FitError;
use crate::gpe::GpeError;
use crate::modes::ModeError;
use crate::oracle::OracleError;
use crate::potential::PotentialError;
use crate::stationary::StationaryError;
use crate::twomode::TwoModeError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    /// A scenario precondition failed before any compute.
    #[error("scenario precondition: {0}")]
    Spec(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Stationary(#[from] StationaryError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    TwoMode(#[from] TwoModeError),
    #[error(transparent)]
    Gpe(#[from] GpeError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("{0}")]
    Tuning(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the input rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Spec(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
