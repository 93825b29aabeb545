//! Error types shared across the crate.

use thiserror::Error;

use crate::grid::Field;

/// Errors from grid construction and field plumbing.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid size must be even and at least 8, got {0}")]
    BadSize(usize),
    #[error("grid half-length must be positive and finite, got {0}")]
    BadHalfLength(f64),
    #[error("fields live on different grids: {0} vs {1}")]
    GridMismatch(String, String),
    #[error("point must satisfy Im z >= {min}, got Im z = {imag}")]
    PointTooLow { imag: f64, min: f64 },
    #[error("field is not Hardy: negative-frequency energy {leak:.3e} exceeds {tol:.3e}")]
    NotHardy { leak: f64, tol: f64 },
}

/// Errors from time integration.
#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("blow-up or instability at t = {t}: non-finite state encountered")]
    Unstable { t: f64, last_finite: Box<Field> },
    #[error("chirality leak {leak:.3e} at t = {t} exceeds abort threshold {tol:.3e}")]
    ChiralityLeak { t: f64, leak: f64, tol: f64 },
    #[error("solver config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors from explicit-formula evaluation.
#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("linear solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("near-singular formula operator: condition estimate {estimate:.3e}")]
    NearSingular { estimate: f64 },
    #[error("dense operator size {k} exceeds the {max} limit")]
    DenseTooLarge { k: usize, max: usize },
    #[error("dispersion parameter must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("refinement ladder must be strictly ascending positive factors")]
    BadRefinement,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors from trajectory-based diagnostics.
#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("no snapshot at t = {0} (need exact timestamps t +- dt_fd in the trajectory)")]
    SnapshotMissing(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors from snapshot serialization.
#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad snapshot header: {0}")]
    BadHeader(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}
