//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the pricing engine.
///
/// Every variant maps to a stable machine-readable [`Error::reason`] code that
/// the command-line front end copies into its output documents.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or iteration did not reach its tolerance within the cap.
    #[error("convergence failure in {what} after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },
    /// A numerical procedure finished but its error estimate exceeds the target.
    #[error("tolerance not met in {what}: estimated error {estimate:e} > {target:e}")]
    Tolerance {
        what: &'static str,
        estimate: f64,
        target: f64,
    },
    /// The result is undefined for these inputs (e.g. a vanishing denominator).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Invalid configuration (CLI, schedules, Monte Carlo settings).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Value too large or too small for the unscaled function.
    #[error("overflow: {0}")]
    Overflow(String),
}

impl Error {
    /// Stable identifier used in machine-readable reports.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Convergence { .. } => "convergence",
            Error::Tolerance { .. } => "tolerance",
            Error::Degenerate(_) => "degenerate",
            Error::Config(_) => "config",
            Error::Overflow(_) => "overflow",
        }
    }

    /// True when the failure is numerical rather than a validation problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::Tolerance { .. } | Error::Overflow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
