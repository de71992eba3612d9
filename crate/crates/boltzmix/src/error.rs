//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched array lengths or grids.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid physical parameter (nonpositive density/temperature, bad ω, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A distribution field was supplied in the wrong frame.
    #[error("frame mismatch: expected {expected}, got {got}")]
    Frame { expected: String, got: String },

    /// The global-frame temperature comparison (min/max ratio) cannot hold.
    #[error("global frame infeasible: {0}")]
    FrameInfeasible(String),

    /// Zero total mass or similarly degenerate state.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// Right-hand side not orthogonal to the kernel of the linearized operator.
    #[error("solvability violated: max |<R, X_i>| = {defect:e} exceeds {tol:e}")]
    Solvability { defect: f64, tol: f64 },

    /// Iterative solver stagnation, positivity loss, CFL violation, blow-up.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Quadrature failed to converge to the requested accuracy.
    #[error("accuracy not reached: achieved {achieved:e}, requested {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    /// Configuration file or parameter validation failure.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code per the CLI contract: 1 study failure, 2 configuration,
    /// 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}
