//! Spectral torus grid, complex fields, and the Hardy-space surrogate.
//!
//! The line is approximated by the torus [-L, L) with N equispaced samples.
//! A field is stored by its Fourier coefficients c_k, k = -N/2 .. N/2-1,
//! with u(x) = sum_k c_k e^{i xi_k x} and xi_k = pi k / L. Hardy fields are
//! the closed subspace c_k = 0 for k < 0; the background constant lives at
//! k = 0 and is kept by the Szego projector.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::error::GridError;

/// Default floor for Im z in holomorphic evaluation.
pub const Z_MIN_DEFAULT: f64 = 1e-3;

/// Default spectral tolerance below which a field counts as Hardy.
pub const HARDY_TOL_DEFAULT: f64 = 1e-12;

/// Equispaced torus grid on [-L, L) with an even number of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    half_length: f64,
    size: usize,
}

impl GridSpec {
    /// Builds a grid; N must be even and at least 8, L positive and finite.
    pub fn new(half_length: f64, size: usize) -> Result<Self, GridError> {
        if size < 8 || size % 2 != 0 {
            return Err(GridError::BadSize(size));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(GridError::BadHalfLength(half_length));
        }
        Ok(Self { half_length, size })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of Hardy modes, K = N/2 (k = 0 .. K-1).
    pub fn hardy_len(&self) -> usize {
        self.size / 2
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.size as f64
    }

    /// Frequency spacing, Delta xi = pi / L.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Sample point x_j = -L + j dx.
    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    /// Signed mode index for storage slot m (negative modes in the upper half).
    pub fn mode(&self, m: usize) -> i64 {
        if m < self.size / 2 {
            m as i64
        } else {
            m as i64 - self.size as i64
        }
    }

    /// Frequency xi_k = pi k / L for storage slot m.
    pub fn xi(&self, m: usize) -> f64 {
        self.mode(m) as f64 * self.dxi()
    }

    fn label(&self) -> String {
        format!("(L={}, N={})", self.half_length, self.size)
    }

    pub(crate) fn mismatch(&self, other: &GridSpec) -> GridError {
        GridError::GridMismatch(self.label(), other.label())
    }
}

/// A point z in the open upper half-plane, floored away from the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperHalfPoint {
    z: Complex64,
}

impl UpperHalfPoint {
    /// Accepts z with Im z >= z_min.
    pub fn with_floor(z: Complex64, z_min: f64) -> Result<Self, GridError> {
        if !(z.im.is_finite() && z.re.is_finite()) || z.im < z_min {
            return Err(GridError::PointTooLow {
                imag: z.im,
                min: z_min,
            });
        }
        Ok(Self { z })
    }

    /// Accepts z with the default floor Im z >= 1e-3.
    pub fn new(z: Complex64) -> Result<Self, GridError> {
        Self::with_floor(z, Z_MIN_DEFAULT)
    }

    pub fn get(&self) -> Complex64 {
        self.z
    }
}

// Plans are cached per size; rustfft plans are Send + Sync and cheap to share.
type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

static FFT_CACHE: Lazy<PlanCache> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = FFT_CACHE.lock().expect("fft cache poisoned");
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Complex field on a torus grid, stored by Fourier coefficients.
///
/// Slot m holds mode k = m for m < N/2 and k = m - N for m >= N/2. The
/// sample and coefficient views are exact inverses of each other up to
/// roundoff, and the discrete Parseval identity
/// sum_j |u(x_j)|^2 dx = 2L sum_k |c_k|^2 holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    coef: Vec<Complex64>,
}

impl Field {
    /// Field from Fourier coefficients in storage order.
    pub fn from_coef(grid: GridSpec, coef: Vec<Complex64>) -> Self {
        assert_eq!(coef.len(), grid.size(), "coefficient count != grid size");
        Self { grid, coef }
    }

    /// Field from point samples at x_j = -L + j dx.
    ///
    /// The sample at x_j carries the alternating phase (-1)^m relative to a
    /// plain DFT because the grid starts at -L rather than 0.
    pub fn from_samples(grid: GridSpec, samples: &[Complex64]) -> Self {
        assert_eq!(samples.len(), grid.size(), "sample count != grid size");
        let n = grid.size();
        let mut buf = samples.to_vec();
        plan(n, false).process(&mut buf);
        let scale = 1.0 / n as f64;
        for (m, c) in buf.iter_mut().enumerate() {
            let sign = if m % 2 == 0 { scale } else { -scale };
            *c *= sign;
        }
        Self { grid, coef: buf }
    }

    /// Builds a field by evaluating a closure at every sample point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let samples: Vec<Complex64> = (0..grid.size()).map(|j| f(grid.x(j))).collect();
        Self::from_samples(grid, &samples)
    }

    /// Zero field.
    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_coef(grid, vec![Complex64::ZERO; grid.size()])
    }

    /// Constant field.
    pub fn constant(grid: GridSpec, value: Complex64) -> Self {
        let mut coef = vec![Complex64::ZERO; grid.size()];
        coef[0] = value;
        Self::from_coef(grid, coef)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coef(&self) -> &[Complex64] {
        &self.coef
    }

    pub fn coef_mut(&mut self) -> &mut [Complex64] {
        &mut self.coef
    }

    pub fn into_coef(self) -> Vec<Complex64> {
        self.coef
    }

    /// Point samples u(x_j), j = 0 .. N-1.
    pub fn samples(&self) -> Vec<Complex64> {
        let n = self.grid.size();
        let mut buf: Vec<Complex64> = self
            .coef
            .iter()
            .enumerate()
            .map(|(m, c)| if m % 2 == 0 { *c } else { -*c })
            .collect();
        plan(n, true).process(&mut buf);
        buf
    }

    /// Torus L^2 norm, sqrt(2L sum_k |c_k|^2).
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coef.iter().map(|c| c.norm_sqr()).sum();
        (2.0 * self.grid.half_length() * s).sqrt()
    }

    /// Max of |u(x_j)| over samples.
    pub fn linf_norm(&self) -> f64 {
        self.samples().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Torus L^2 inner product <f, g> = integral of f conj(g),
    /// exact on coefficients: 2L sum_k c_k(f) conj(c_k(g)).
    pub fn l2_inner(&self, other: &Field) -> Complex64 {
        debug_assert_eq!(self.grid, other.grid);
        let s: Complex64 = self
            .coef
            .iter()
            .zip(&other.coef)
            .map(|(&a, &b)| a * b.conj())
            .sum();
        2.0 * self.grid.half_length() * s
    }

    /// Energy in the negative-frequency modes relative to the whole field.
    pub fn hardy_leak(&self) -> f64 {
        let neg: f64 = (0..self.grid.size())
            .filter(|&m| self.grid.mode(m) < 0)
            .map(|m| self.coef[m].norm_sqr())
            .sum();
        let tot: f64 = self.coef.iter().map(|c| c.norm_sqr()).sum();
        if tot == 0.0 {
            0.0
        } else {
            (neg / tot).sqrt()
        }
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<(), GridError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(self.grid.mismatch(&other.grid))
        }
    }

    /// Pointwise binary combination in coefficient space.
    pub fn zip_coef(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let coef = self
            .coef
            .iter()
            .zip(&other.coef)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field::from_coef(self.grid, coef)
    }

    /// The same periodic function carried on the torus [-rL, rL) with rN
    /// samples: mode k moves to mode r k, so every frequency xi_k = pi k / L
    /// is preserved and the frequency spacing shrinks by r.
    pub fn refine(&self, factor: usize) -> Result<Field, GridError> {
        if factor == 0 {
            return Err(GridError::BadSize(0));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let n = self.grid.size();
        let rn = n * factor;
        let grid = GridSpec::new(self.grid.half_length() * factor as f64, rn)?;
        let mut coef = vec![Complex64::ZERO; rn];
        for (m, &c) in self.coef.iter().enumerate() {
            let k = self.grid.mode(m) * factor as i64;
            let slot = if k >= 0 { k as usize } else { (rn as i64 + k) as usize };
            coef[slot] = c;
        }
        Ok(Field::from_coef(grid, coef))
    }

    /// Coefficient-space map.
    pub fn map_coef(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Field {
        let coef = self
            .coef
            .iter()
            .enumerate()
            .map(|(m, &c)| f(m, c))
            .collect();
        Field::from_coef(self.grid, coef)
    }
}

/// A field whose negative-frequency coefficients vanish.
///
/// Closed under the Szego projector, positive-frequency multipliers, and
/// the difference-quotient resolvent.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyField {
    field: Field,
}

impl HardyField {
    /// Projects a field onto the Hardy subspace (zeroes k < 0, keeps k >= 0).
    pub fn project(field: &Field) -> Self {
        let grid = field.grid();
        let coef = field
            .coef()
            .iter()
            .enumerate()
            .map(|(m, &c)| if grid.mode(m) < 0 { Complex64::ZERO } else { c })
            .collect();
        Self {
            field: Field::from_coef(grid, coef),
        }
    }

    /// Accepts a field that is already Hardy up to the given relative tolerance.
    pub fn try_new(field: Field, tol: f64) -> Result<Self, GridError> {
        let leak = field.hardy_leak();
        if leak > tol {
            return Err(GridError::NotHardy { leak, tol });
        }
        Ok(Self::project(&field))
    }

    /// Hardy field from the K = N/2 nonnegative-mode coefficients.
    pub fn from_hardy_coef(grid: GridSpec, hardy: &[Complex64]) -> Self {
        assert_eq!(hardy.len(), grid.hardy_len(), "hardy coefficient count != N/2");
        let mut coef = vec![Complex64::ZERO; grid.size()];
        coef[..hardy.len()].copy_from_slice(hardy);
        Self {
            field: Field::from_coef(grid, coef),
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }

    pub fn grid(&self) -> GridSpec {
        self.field.grid()
    }

    /// The K = N/2 coefficients c_0 .. c_{K-1}.
    pub fn hardy_coef(&self) -> &[Complex64] {
        &self.field.coef()[..self.field.grid().hardy_len()]
    }

    pub fn l2_norm(&self) -> f64 {
        self.field.l2_norm()
    }
}

impl From<HardyField> for Field {
    fn from(h: HardyField) -> Field {
        h.field
    }
}
