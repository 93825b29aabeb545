//! Time integration: integrating-factor RK4 for
//! du/dt = i u_xx - 4 u Pi(Re(ubar u_x)).
//!
//! The stiff linear part is removed exactly by working on w = e^{-it dxx} u,
//! so the step size is limited only by the nonlinearity. Chirality (Hardy
//! support) is an invariant of the continuum flow; it is monitored, never
//! enforced, so any recorded leak is pure discretization error.

use num_complex::Complex64;

use crate::error::EvolveError;
use crate::grid::{Field, GridSpec};
use crate::ops;

/// Time-stepping scheme. A single scheme is supported; the enum keeps the
/// configuration explicit in serialized run configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    IntegratingFactorRk4,
}

/// Integration controls.
///
/// `leak_abort` is the relative negative-frequency energy above which a run
/// with a Hardy datum is aborted; it is a guard rail well above the expected
/// roundoff-level leak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
    pub dealiasing: bool,
    pub leak_abort: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
            scheme: Scheme::IntegratingFactorRk4,
            snapshot_stride: 1,
            dealiasing: true,
            leak_abort: 1e-6,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<usize, EvolveError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EvolveError::BadConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.snapshot_stride == 0 {
            return Err(EvolveError::BadConfig("snapshot_stride must be >= 1".into()));
        }
        if !self.t_final.is_finite() {
            return Err(EvolveError::BadConfig(format!("t_final must be finite, got {}", self.t_final)));
        }
        let steps = (self.t_final.abs() / self.dt).round();
        if (steps * self.dt - self.t_final.abs()).abs() > 1e-9 * self.t_final.abs().max(1.0) {
            return Err(EvolveError::BadConfig(format!(
                "t_final = {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

/// Per-step record: time after the step, norm of the full right-hand side
/// at the step start, and the relative negative-frequency leak after it.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub t: f64,
    pub rhs_norm: f64,
    pub leak: f64,
}

/// Time-ordered snapshots plus per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: GridSpec,
    snapshots: Vec<(f64, Field)>,
    steps: Vec<StepRecord>,
    monitored: bool,
}

impl Trajectory {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn snapshots(&self) -> &[(f64, Field)] {
        &self.snapshots
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// True when the datum was Hardy and leakage was tracked.
    pub fn monitored(&self) -> bool {
        self.monitored
    }

    /// Snapshot at time t, matched within 1e-9 (timestamps are exact
    /// multiples of dt, so this is a lookup, not an interpolation).
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.snapshots
            .iter()
            .find(|(ts, _)| (ts - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|(_, u)| u)
    }

    pub fn final_state(&self) -> &Field {
        &self.snapshots.last().expect("trajectory has at least one snapshot").1
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().expect("trajectory has at least one snapshot").0
    }

    /// Largest recorded leak over all steps.
    pub fn max_leak(&self) -> f64 {
        self.steps.iter().map(|s| s.leak).fold(0.0, f64::max)
    }
}

/// -4 u Pi(Re(ubar u_x)), the non-stiff part of the right-hand side.
fn nonlinear(u: &Field, dealiasing: bool) -> Field {
    let grid = u.grid();
    let us = u.samples();
    let dus = ops::d_dx(u).samples();
    let re: Vec<Complex64> = us
        .iter()
        .zip(&dus)
        .map(|(&a, &b)| Complex64::new((a.conj() * b).re, 0.0))
        .collect();
    let inner = maybe_dealias(Field::from_samples(grid, &re), dealiasing);
    let proj = crate::grid::HardyField::project(&inner);
    let prod: Vec<Complex64> = us
        .iter()
        .zip(proj.field().samples())
        .map(|(&a, b)| -4.0 * a * b)
        .collect();
    maybe_dealias(Field::from_samples(grid, &prod), dealiasing)
}

fn maybe_dealias(f: Field, on: bool) -> Field {
    if on {
        ops::dealias(&f)
    } else {
        f
    }
}

/// Full right-hand side i u_xx - 4 u Pi(Re(ubar u_x)), products dealiased.
pub fn rhs(u: &Field) -> Field {
    rhs_with(u, true)
}

fn rhs_with(u: &Field, dealiasing: bool) -> Field {
    let lin = ops::d2_dx2(u).map_coef(|_, c| Complex64::i() * c);
    lin.zip_coef(&nonlinear(u, dealiasing), |a, b| a + b)
}

/// One integrating-factor RK4 step; also returns the norm of the full
/// right-hand side at the step start (the k1 stage is reused for it).
fn step_inner(u: &Field, dt: f64, dealiasing: bool) -> (Field, f64) {
    let grid = u.grid();
    let half = |f: &Field| ops::schrodinger_propagate(f, dt / 2.0);
    let full = |f: &Field| ops::schrodinger_propagate(f, dt);

    let w = u.clone();
    let k1 = nonlinear(&w, dealiasing);
    let rhs_norm = {
        let full_rhs = ops::d2_dx2(u)
            .map_coef(|_, c| Complex64::i() * c)
            .zip_coef(&k1, |a, b| a + b);
        full_rhs.l2_norm()
    };

    let ax = |a: &Field, s: f64, b: &Field| a.zip_coef(b, |x, y| x + s * y);

    // Stage evaluations pull the state to physical time, apply the
    // nonlinearity, and pull back: F(tau, w) = E(-tau) N(E(tau) w).
    let k2 = {
        let v = half(&ax(&w, dt / 2.0, &k1));
        let n = nonlinear(&v, dealiasing);
        ops::schrodinger_propagate(&n, -dt / 2.0)
    };
    let k3 = {
        let v = half(&ax(&w, dt / 2.0, &k2));
        let n = nonlinear(&v, dealiasing);
        ops::schrodinger_propagate(&n, -dt / 2.0)
    };
    let k4 = {
        let v = full(&ax(&w, dt, &k3));
        let n = nonlinear(&v, dealiasing);
        ops::schrodinger_propagate(&n, -dt)
    };

    let combo = Field::from_coef(
        grid,
        w.coef()
            .iter()
            .zip(k1.coef())
            .zip(k2.coef())
            .zip(k3.coef())
            .zip(k4.coef())
            .map(|((((&w0, &a), &b), &c), &d)| w0 + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d))
            .collect(),
    );
    (full(&combo), rhs_norm)
}

/// One RK4 step with products dealiased; dt = 0 returns the state unchanged.
pub fn step(u: &Field, dt: f64) -> Result<Field, EvolveError> {
    let (next, _) = step_inner(u, dt, true);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(EvolveError::Unstable { t: dt, last_finite: Box::new(u.clone()) })
    }
}

/// Integrates u0 to t_final, recording snapshots every `snapshot_stride`
/// steps (the initial and final states are always included).
pub fn evolve(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory, EvolveError> {
    let n_steps = cfg.validate()?;
    let grid = u0.grid();
    let signed_dt = if cfg.t_final < 0.0 { -cfg.dt } else { cfg.dt };
    let monitored = u0.hardy_leak() <= 1e-12;

    let mut snapshots = Vec::with_capacity(n_steps / cfg.snapshot_stride + 2);
    let mut steps = Vec::with_capacity(n_steps);
    snapshots.push((0.0, u0.clone()));

    let mut u = u0.clone();
    for i in 0..n_steps {
        let (next, rhs_norm) = step_inner(&u, signed_dt, cfg.dealiasing);
        let t = (i + 1) as f64 * signed_dt;
        if !next.is_finite() {
            return Err(EvolveError::Unstable { t, last_finite: Box::new(u) });
        }
        let leak = if monitored { next.hardy_leak() } else { 0.0 };
        if monitored && leak > cfg.leak_abort {
            return Err(EvolveError::ChiralityLeak { t, leak, tol: cfg.leak_abort });
        }
        steps.push(StepRecord { t, rhs_norm, leak });
        u = next;
        if (i + 1) % cfg.snapshot_stride == 0 || i + 1 == n_steps {
            snapshots.push((t, u.clone()));
        }
    }

    Ok(Trajectory { grid, snapshots, steps, monitored })
}
