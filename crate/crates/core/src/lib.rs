//! Spectral laboratory for the defocusing Calogero-Moser derivative NLS
//! with unit-modulus background.
//!
//! The state is a periodic field on [-L, L) carried in Fourier coefficients;
//! chirality (vanishing negative frequencies of u minus its background) is an
//! invariant of the flow and is monitored, never assumed. The crate provides:
//!
//! - [`grid`]: torus layout, FFT-backed fields, the Hardy subspace;
//! - [`ops`]: projections, multipliers, Toeplitz and Lax operators,
//!   difference-quotient resolvents, the boundary trace functional;
//! - [`evolve`]: integrating-factor RK4 time stepping with conservation
//!   and chirality monitoring;
//! - [`formula`]: pole-free evaluation of the solution in the upper half
//!   plane directly from the initial datum, plus its epsilon-regularized
//!   family down to the zero-dispersion limit;
//! - [`diagnostics`]: conserved functionals, the gauge-squared identity,
//!   Lax-pair residuals, and distance/bound checks;
//! - [`snapshot`]: binary state serialization.

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod formula;
pub mod grid;
mod linalg;
pub mod ops;
pub mod snapshot;

pub use error::{DiagnosticsError, EvolveError, FormulaError, GridError, SnapshotError};
pub use grid::{Field, GridSpec, HardyField, UpperHalfPoint};
