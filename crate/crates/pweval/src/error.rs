//! Crate-wide error type and result alias.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PwError {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A caller-side contract was violated (bad normalization, missing metadata, ...).
    #[error("contract error: {0}")]
    Contract(String),
    /// Iteration failed to reach tolerance; carries the best estimate found.
    #[error("convergence failure: {msg} (best estimate {best}, error estimate {err_estimate})")]
    Convergence {
        msg: String,
        best: f64,
        err_estimate: f64,
    },
    /// Root bracketing failed: no sign change on the given interval.
    #[error("bracket error: {0}")]
    Bracket(String),
    /// An internal construction step produced an inconsistent object.
    #[error("construction error: {0}")]
    Construction(String),
    /// A NaN propagated out of a user-supplied function.
    #[error("NaN propagated from objective at x = {0}")]
    NanInput(f64),
}

pub type Result<T> = std::result::Result<T, PwError>;

impl PwError {
    /// Process exit code for the CLI: 1 for domain/contract faults, 2 for convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            PwError::Convergence { .. } => 2,
            _ => 1,
        }
    }
}
