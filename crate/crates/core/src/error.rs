//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mesh construction with zero cells.
    #[error("mesh size must be at least 1, got {0}")]
    InvalidMeshSize(usize),

    /// A per-edge or per-cell vector does not match the mesh.
    #[error("{what}: expected length {expected}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Conductivities must be nonnegative.
    #[error("negative conductivity {value} at index {index}")]
    NegativeConductivity { index: usize, value: f64 },

    /// The baseline conductivity r must be strictly positive.
    #[error("regularization r must be positive, got {0}")]
    NonPositiveR(f64),

    /// Invalid model parameters (nu, d2, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Right-hand side violates the zero-sum compatibility condition.
    #[error("incompatible right-hand side: |sum rhs| = {defect:.3e} exceeds {tol:.3e}")]
    IncompatibleRhs { defect: f64, tol: f64 },

    /// Iterative solver hit the iteration cap.
    #[error(
        "linear solver did not converge: {iterations} iterations, relative residual {rel_residual:.3e}, condition estimate {cond_estimate:.3e}"
    )]
    NoConvergence {
        iterations: usize,
        rel_residual: f64,
        cond_estimate: f64,
    },

    /// Backtracking reduced the time step below the representable floor.
    #[error("time step collapsed below {floor:.1e} at t = {t}; flow is stationary or blocked at the constraint boundary")]
    StepCollapse { t: f64, floor: f64 },

    /// Directions of a parallelogram grid must be linearly independent.
    #[error("parallelogram directions are (numerically) parallel")]
    ParallelDirections,

    /// Scenario file / configuration problems.
    #[error("bad scenario: {0}")]
    BadScenario(String),

    /// A study hypothesis gate failed (e.g. gamma <= 1 for the 2D convergence theorem).
    #[error("{0}")]
    HypothesisViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
