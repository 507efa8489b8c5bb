use std::path::PathBuf;

use thiserror::Error;

use crate::jets::JetError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a parameter set or phase point lies outside the evaluation domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainViolation {
    #[error("polar chart is singular at x = {x}")]
    ChartSingularity { x: f64 },
    #[error("fiber direction (r, t) is zero")]
    ZeroFiber,
    #[error("energy c = {c} must be positive")]
    NonPositiveEnergy { c: f64 },
    #[error("rotation rate a = {a} must be non-negative")]
    NegativeRotation { a: f64 },
    #[error("no bounded component: c = {c} <= 3/2 a^(2/3) = {critical}")]
    BelowCriticalEnergy { c: f64, critical: f64 },
    #[error("radicand {value} is negative")]
    NegativeRadicand { value: f64 },
    #[error("x = {x} lies inside the excluded band |x| < {band}")]
    ExcludedBand { x: f64, band: f64 },
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainViolation),
    #[error("jet arithmetic: {0}")]
    Jet(#[from] JetError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cometric is degenerate (det = {det})")]
    Degenerate { det: f64 },
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("flag pole is singular: v·t = {0:e}")]
    SingularV(f64),
    #[error("scan produced no admissible samples")]
    EmptyResult,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Domain and precondition failures, as opposed to argument or I/O errors.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Precondition(_)
                | Error::Degenerate { .. }
                | Error::SingularV(_)
                | Error::EmptyResult
                | Error::Jet(JetError::Domain { .. })
        )
    }
}
