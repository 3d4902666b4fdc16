//! Crate-wide error type.

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter record failed validation at construction.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A least-squares fit could not be performed (degenerate design, too few points).
    #[error("fit error: {0}")]
    Fit(String),

    /// The calibration protocol preconditions are not met by the supplied data.
    #[error("calibration protocol error: {0}")]
    Protocol(String),

    /// Parameter extraction from measured fringes failed.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// An ODE integration or quadrature did not produce a finite result.
    #[error("numerical integration failure: {0}")]
    Integration(String),

    /// An iterative scheme did not converge to the requested tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A configuration file is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Integration(_) | Error::Convergence(_) | Error::Domain(_) => 3,
            _ => 1,
        }
    }
}
