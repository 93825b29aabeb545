//! Direct evaluation of the solution in the upper half-plane from the
//! initial datum, without time stepping.
//!
//! Two independent discretizations of the same quantity are provided:
//!
//! - the resolvent route solves (Id + 2t K_eps R_z) h = K_eps R_z w with
//!   K_eps = e^{i eps t dxx} T_{u0} T_{ubar0} e^{-i eps t dxx} applied
//!   matrix-free, and returns w(z) - 2t h(z);
//! - the boundary-trace route assembles the dense frequency-space operator
//!   G_h + 2 eps t D + 2t T_{u0}T_{ubar0} - z on the Hardy block and returns
//!   w(z) - (t / i pi) I_+ of the solved vector.
//!
//! Both carry first-order error in the frequency spacing, dominated by the
//! boundary behavior of the half-line operator G. Each evaluation therefore
//! runs on a ladder of refined tori (the datum re-carried with mode k at
//! r k, an exact embedding of the same periodic function) and extrapolates
//! the ladder values to zero spacing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::FormulaError;
use crate::grid::{Field, GridSpec, HardyField, UpperHalfPoint};
use crate::linalg::{gmres, GmresSettings};
use crate::ops;

/// Linear-solve controls shared by both routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    /// Relative residual target for the matrix-free solve.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
    /// Resolvent route assembles a dense operator when the Hardy block is
    /// at most this large; above it the solve is matrix-free.
    pub dense_limit: usize,
    /// Hard cap on the dense boundary-trace block (memory guard).
    pub dense_max: usize,
    pub condition_limit: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 400,
            restart: 60,
            dense_limit: 512,
            dense_max: 4096,
            condition_limit: 1e12,
        }
    }
}

/// Evaluation summary: the extrapolated value, the free evolution at z, the
/// correction value - w(z), and solver effort (max over ladder rungs).
#[derive(Debug, Clone, Copy)]
pub struct EvalDetail {
    pub value: Complex64,
    pub w_at_z: Complex64,
    pub correction: Complex64,
    pub iterations: usize,
    pub residual: f64,
    /// Largest condition estimate seen across ladder rungs.
    pub condition: f64,
}

struct RungEval {
    weight: f64,
    value: Complex64,
    w_at_z: Complex64,
    iterations: usize,
    residual: f64,
    condition: f64,
}

/// Ladder rung for the matrix-free resolvent route at fixed (t, eps).
struct ResolventRung {
    weight: f64,
    t: f64,
    eps: f64,
    u0_samples: Vec<Complex64>,
    u0bar_samples: Vec<Complex64>,
    w: HardyField,
}

impl ResolventRung {
    fn grid(&self) -> GridSpec {
        self.w.grid()
    }

    /// K_eps v = e^{i eps t dxx} T_{u0} T_{ubar0} e^{-i eps t dxx} v.
    fn apply_k(&self, v: &HardyField) -> HardyField {
        let grid = self.grid();
        let tau = self.eps * self.t;
        let pulled = ops::schrodinger_propagate(v.field(), -tau);
        let inner =
            HardyField::project(&ops::product_field(grid, &self.u0bar_samples, &pulled.samples()));
        let outer = HardyField::project(&ops::product_field(
            grid,
            &self.u0_samples,
            &inner.field().samples(),
        ));
        HardyField::project(&ops::schrodinger_propagate(outer.field(), tau))
    }

    /// Periodized difference quotient about the holomorphic evaluation.
    fn apply_rz(&self, v: &HardyField, kernel: &[Complex64], z: UpperHalfPoint) -> HardyField {
        let grid = self.grid();
        let vz = ops::poisson_eval(v, z);
        let samples: Vec<Complex64> = v
            .field()
            .samples()
            .iter()
            .zip(kernel)
            .map(|(&s, &k)| (s - vz) * k)
            .collect();
        HardyField::project(&Field::from_samples(grid, &samples))
    }
}

/// Ladder rung for the dense boundary-trace route at fixed (t, eps).
struct TraceRung {
    weight: f64,
    t: f64,
    eps: f64,
    u0_samples: Vec<Complex64>,
    u0bar_samples: Vec<Complex64>,
    w: HardyField,
    /// Dense T_{u0} T_{ubar0} on the Hardy block.
    ttbar: DMatrix<Complex64>,
}

/// Periodized Cauchy kernel samples (dxi/2) cot(dxi (x_j - z) / 2).
fn cauchy_kernel(grid: GridSpec, z: Complex64) -> Vec<Complex64> {
    let half_dxi = 0.5 * grid.dxi();
    (0..grid.size())
        .map(|j| {
            let w = (Complex64::new(grid.x(j), 0.0) - z) * half_dxi;
            half_dxi / w.tan()
        })
        .collect()
}

/// Neville extrapolation of (weight, value) pairs to weight -> 0.
fn extrapolate(points: &[(f64, Complex64)]) -> Complex64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut p: Vec<Complex64> = points.iter().map(|p| p.1).collect();
    let n = p.len();
    for j in 1..n {
        for i in 0..n - j {
            let (xi, xj) = (xs[i], xs[i + j]);
            p[i] = ((0.0 - xj) * p[i] + xi * p[i + 1]) / (xi - xj);
        }
    }
    p[0]
}

fn key(t: f64, eps: f64) -> (u64, u64) {
    (t.to_bits(), eps.to_bits())
}

/// Difference quotient (w(x_j) - w(z)) / (x_j - z) with the flat Cauchy
/// kernel, projected to Hardy.
///
/// The constant background cancels in the numerator, so only the Hardy part
/// of w enters; w(z) itself is the background plus the holomorphic extension
/// of the fluctuation.
pub fn difference_quotient(w: &Field, z: UpperHalfPoint) -> HardyField {
    ops::g_resolvent(&HardyField::project(w), z)
}

/// Shared evaluator for the explicit solution formula, its dispersion-scaled
/// family, and the zero-dispersion limit.
///
/// The workspace owns the datum, caches the per-(t, eps) ladders, and is
/// immutable during evaluation; evaluations at distinct (t, z, eps) may run
/// concurrently.
/// Ladder cache keyed by the bit patterns of (t, eps).
type RungCache<R> = Mutex<HashMap<(u64, u64), Arc<Vec<R>>>>;

pub struct FormulaWorkspace {
    u0: HardyField,
    settings: SolveSettings,
    resolvent_rungs: Vec<usize>,
    trace_rungs: Vec<usize>,
    z_min: f64,
    resolvent_cache: RungCache<ResolventRung>,
    trace_cache: RungCache<TraceRung>,
}

impl FormulaWorkspace {
    /// Builds a workspace for a Hardy datum with unit-modulus background.
    pub fn new(u0: &Field, settings: SolveSettings) -> Result<Self, FormulaError> {
        let u0 = HardyField::try_new(u0.clone(), 1e-8)?;
        Ok(Self {
            u0,
            settings,
            resolvent_rungs: vec![2, 4, 8],
            trace_rungs: vec![1, 2],
            z_min: crate::grid::Z_MIN_DEFAULT,
            resolvent_cache: Mutex::new(HashMap::new()),
            trace_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.u0.grid()
    }

    pub fn datum(&self) -> &HardyField {
        &self.u0
    }

    pub fn settings(&self) -> &SolveSettings {
        &self.settings
    }

    /// Overrides the refinement ladders (ascending factors, each >= 1).
    pub fn configure_refinement(
        &mut self,
        resolvent: Vec<usize>,
        trace: Vec<usize>,
    ) -> Result<(), FormulaError> {
        for rungs in [&resolvent, &trace] {
            if rungs.is_empty() || rungs.windows(2).any(|w| w[1] <= w[0]) || rungs[0] == 0 {
                return Err(FormulaError::BadRefinement);
            }
        }
        self.resolvent_rungs = resolvent;
        self.trace_rungs = trace;
        self.clear_cache();
        Ok(())
    }

    /// Raises the floor on Im z.
    pub fn set_z_min(&mut self, z_min: f64) {
        self.z_min = z_min;
    }

    pub fn clear_cache(&self) {
        self.resolvent_cache.lock().expect("cache poisoned").clear();
        self.trace_cache.lock().expect("cache poisoned").clear();
    }

    fn check_point(&self, z: UpperHalfPoint) -> Result<Complex64, FormulaError> {
        let zz = z.get();
        if zz.im < self.z_min {
            return Err(FormulaError::Grid(crate::error::GridError::PointTooLow {
                imag: zz.im,
                min: self.z_min,
            }));
        }
        Ok(zz)
    }

    /// u(t, z) = e^{it dxx} u0 (z) - 2t h(z), ladder-extrapolated.
    pub fn explicit_eval(&self, t: f64, z: UpperHalfPoint) -> Result<Complex64, FormulaError> {
        self.zd_eps_eval(t, z, 1.0)
    }

    /// Full evaluation record for the dispersion family (eps = 1 is the
    /// plain equation; eps = 0 is the zero-dispersion limit).
    pub fn eval_detail(
        &self,
        t: f64,
        z: UpperHalfPoint,
        eps: f64,
    ) -> Result<EvalDetail, FormulaError> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(FormulaError::BadEpsilon(eps));
        }
        self.check_point(z)?;
        let rungs = self.resolvent_family(t, eps)?;
        let evals: Vec<RungEval> = rungs
            .iter()
            .map(|rung| self.eval_resolvent_rung(rung, z))
            .collect::<Result<_, _>>()?;
        Ok(combine(&evals))
    }

    /// The dispersion-scaled solution u^eps(t, z); eps must be positive.
    pub fn zd_eps_eval(
        &self,
        t: f64,
        z: UpperHalfPoint,
        eps: f64,
    ) -> Result<Complex64, FormulaError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(FormulaError::BadEpsilon(eps));
        }
        Ok(self.eval_detail(t, z, eps)?.value)
    }

    /// Pointwise zero-dispersion limit: the same resolvent route with the
    /// free propagators set to the identity.
    pub fn zd_limit_eval(&self, t: f64, z: UpperHalfPoint) -> Result<Complex64, FormulaError> {
        Ok(self.eval_detail(t, z, 0.0)?.value)
    }

    /// The remark's direct formula for v(t, z) = u(t, z) - e^{it dxx} u0 (z):
    /// returns the -2t h(z) path; the subtraction path is the difference of
    /// `explicit_eval` and the propagated datum's holomorphic evaluation.
    pub fn v_eval(&self, t: f64, z: UpperHalfPoint) -> Result<Complex64, FormulaError> {
        Ok(self.eval_detail(t, z, 1.0)?.correction)
    }

    /// Boundary-trace route for u(t, z): dense half-line operator on the
    /// Hardy block, value w(z) - (t / i pi) I_+ of the solved vector.
    pub fn explicit_eval_iplus(
        &self,
        t: f64,
        z: UpperHalfPoint,
    ) -> Result<Complex64, FormulaError> {
        Ok(self.trace_detail(t, z, 1.0)?.value)
    }

    /// Boundary-trace route evaluated at the zero-dispersion limit.
    pub fn zd_limit_eval_iplus(
        &self,
        t: f64,
        z: UpperHalfPoint,
    ) -> Result<Complex64, FormulaError> {
        Ok(self.trace_detail(t, z, 0.0)?.value)
    }

    /// Full record for the boundary-trace route.
    pub fn trace_detail(
        &self,
        t: f64,
        z: UpperHalfPoint,
        eps: f64,
    ) -> Result<EvalDetail, FormulaError> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(FormulaError::BadEpsilon(eps));
        }
        self.check_point(z)?;
        let rungs = self.trace_family(t, eps)?;
        let evals: Vec<RungEval> = rungs
            .iter()
            .map(|rung| self.eval_trace_rung(rung, z))
            .collect::<Result<_, _>>()?;
        Ok(combine(&evals))
    }

    fn resolvent_family(
        &self,
        t: f64,
        eps: f64,
    ) -> Result<Arc<Vec<ResolventRung>>, FormulaError> {
        if let Some(hit) = self.resolvent_cache.lock().expect("cache poisoned").get(&key(t, eps))
        {
            return Ok(hit.clone());
        }
        let mut rungs = Vec::with_capacity(self.resolvent_rungs.len());
        for &r in &self.resolvent_rungs {
            let u0f = self.u0.field().refine(r)?;
            let u0 = HardyField::project(&u0f);
            let w = HardyField::project(&ops::schrodinger_propagate(u0.field(), eps * t));
            let u0_samples = u0.field().samples();
            let u0bar_samples = u0_samples.iter().map(|v| v.conj()).collect();
            rungs.push(ResolventRung {
                weight: 1.0 / r as f64,
                t,
                eps,
                u0_samples,
                u0bar_samples,
                w,
            });
        }
        let arc = Arc::new(rungs);
        self.resolvent_cache
            .lock()
            .expect("cache poisoned")
            .insert(key(t, eps), arc.clone());
        Ok(arc)
    }

    fn trace_family(&self, t: f64, eps: f64) -> Result<Arc<Vec<TraceRung>>, FormulaError> {
        if let Some(hit) = self.trace_cache.lock().expect("cache poisoned").get(&key(t, eps)) {
            return Ok(hit.clone());
        }
        let mut rungs = Vec::with_capacity(self.trace_rungs.len());
        for &r in &self.trace_rungs {
            let u0f = self.u0.field().refine(r)?;
            let u0 = HardyField::project(&u0f);
            let grid = u0.grid();
            let k = grid.hardy_len();
            if k > self.settings.dense_max {
                return Err(FormulaError::DenseTooLarge { k, max: self.settings.dense_max });
            }
            let w = HardyField::project(&ops::schrodinger_propagate(u0.field(), eps * t));
            let u0_samples = u0.field().samples();
            let u0bar_samples: Vec<Complex64> = u0_samples.iter().map(|v: &Complex64| v.conj()).collect();

            let mut ttbar = DMatrix::<Complex64>::zeros(k, k);
            let mut unit = vec![Complex64::ZERO; k];
            for col in 0..k {
                unit[col] = Complex64::new(1.0, 0.0);
                let e = HardyField::from_hardy_coef(grid, &unit);
                let out = apply_ttbar(grid, &u0_samples, &u0bar_samples, &e);
                for (row, &c) in out.hardy_coef().iter().enumerate() {
                    ttbar[(row, col)] = c;
                }
                unit[col] = Complex64::ZERO;
            }

            rungs.push(TraceRung {
                weight: 1.0 / r as f64,
                t,
                eps,
                u0_samples,
                u0bar_samples,
                w,
                ttbar,
            });
        }
        let arc = Arc::new(rungs);
        self.trace_cache
            .lock()
            .expect("cache poisoned")
            .insert(key(t, eps), arc.clone());
        Ok(arc)
    }

    fn eval_resolvent_rung(
        &self,
        rung: &ResolventRung,
        z: UpperHalfPoint,
    ) -> Result<RungEval, FormulaError> {
        let grid = rung.grid();
        let t = rung.t;
        let wz = ops::poisson_eval(&rung.w, z);
        if t == 0.0 {
            return Ok(RungEval {
                weight: rung.weight,
                value: wz,
                w_at_z: wz,
                iterations: 0,
                residual: 0.0,
                condition: 1.0,
            });
        }
        let kernel = cauchy_kernel(grid, z.get());
        let g = rung.apply_rz(&rung.w, &kernel, z);
        let b = rung.apply_k(&g);
        let k = grid.hardy_len();

        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            let vf = HardyField::from_hardy_coef(grid, v);
            let krz = rung.apply_k(&rung.apply_rz(&vf, &kernel, z));
            vf.hardy_coef()
                .iter()
                .zip(krz.hardy_coef())
                .map(|(&vi, &ki)| vi + 2.0 * t * ki)
                .collect()
        };

        let (h, iterations, residual, condition) = if k <= self.settings.dense_limit {
            let (h, residual, condition) = self.dense_solve(k, &apply, b.hardy_coef())?;
            (h, 0, residual, condition)
        } else {
            let out = gmres(
                &apply,
                b.hardy_coef(),
                &GmresSettings {
                    tolerance: self.settings.tolerance,
                    restart: self.settings.restart,
                    max_iterations: self.settings.max_iterations,
                    condition_limit: self.settings.condition_limit,
                },
            )?;
            (out.x, out.iterations, out.residual, out.condition)
        };

        let hf = HardyField::from_hardy_coef(grid, &h);
        let hz = ops::poisson_eval(&hf, z);
        let correction = -2.0 * t * hz;
        Ok(RungEval {
            weight: rung.weight,
            value: wz + correction,
            w_at_z: wz,
            iterations,
            residual,
            condition,
        })
    }

    fn eval_trace_rung(&self, rung: &TraceRung, z: UpperHalfPoint) -> Result<RungEval, FormulaError> {
        let grid = rung.w.grid();
        let t = rung.t;
        let wz = ops::poisson_eval(&rung.w, z);
        if t == 0.0 {
            return Ok(RungEval {
                weight: rung.weight,
                value: wz,
                w_at_z: wz,
                iterations: 0,
                residual: 0.0,
                condition: 1.0,
            });
        }
        let k = grid.hardy_len();
        let zz = z.get();

        // A = G_h + 2 eps t D + 2t TTbar - z on the Hardy block.
        let mut a = rung.ttbar.clone() * Complex64::new(2.0 * t, 0.0);
        let gh = Complex64::i() / grid.dxi();
        for row in 0..k {
            let xi = row as f64 * grid.dxi();
            a[(row, row)] += -gh + Complex64::new(2.0 * rung.eps * t * xi - zz.re, -zz.im);
            if row + 1 < k {
                a[(row, row + 1)] += gh;
            }
        }

        let kernel = cauchy_kernel(grid, zz);
        let g = {
            let samples: Vec<Complex64> = rung
                .w
                .field()
                .samples()
                .iter()
                .zip(&kernel)
                .map(|(&s, &kk)| (s - wz) * kk)
                .collect();
            HardyField::project(&Field::from_samples(grid, &samples))
        };
        let pulled = HardyField::project(&ops::schrodinger_propagate(
            g.field(),
            -rung.eps * rung.t,
        ));
        let b = apply_ttbar(grid, &rung.u0_samples, &rung.u0bar_samples, &pulled);

        let lu = a.lu();
        let diag = lu.u().diagonal();
        let dmax = diag.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let dmin = diag.iter().fold(f64::INFINITY, |m, c| m.min(c.norm()));
        let estimate = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
        if estimate > self.settings.condition_limit {
            return Err(FormulaError::NearSingular { estimate });
        }
        let rhs = DVector::from_column_slice(b.hardy_coef());
        let h = lu
            .solve(&rhs)
            .ok_or(FormulaError::NearSingular { estimate: f64::INFINITY })?;

        let hf = HardyField::from_hardy_coef(grid, h.as_slice());
        let trace = ops::i_plus(&hf);
        let value = wz - t / (Complex64::i() * std::f64::consts::PI) * trace;
        Ok(RungEval {
            weight: rung.weight,
            value,
            w_at_z: wz,
            iterations: 0,
            residual: 0.0,
            condition: estimate,
        })
    }

    fn dense_solve(
        &self,
        k: usize,
        apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
        b: &[Complex64],
    ) -> Result<(Vec<Complex64>, f64, f64), FormulaError> {
        let bnorm = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok((vec![Complex64::ZERO; k], 0.0, 1.0));
        }
        let mut a = DMatrix::<Complex64>::zeros(k, k);
        let mut unit = vec![Complex64::ZERO; k];
        for col in 0..k {
            unit[col] = Complex64::new(1.0, 0.0);
            let out = apply(&unit);
            for (row, &c) in out.iter().enumerate() {
                a[(row, col)] = c;
            }
            unit[col] = Complex64::ZERO;
        }
        let lu = a.clone().lu();
        let diag = lu.u().diagonal();
        let dmax = diag.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let dmin = diag.iter().fold(f64::INFINITY, |m, c| m.min(c.norm()));
        let estimate = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
        if estimate > self.settings.condition_limit {
            return Err(FormulaError::NearSingular { estimate });
        }
        let rhs = DVector::from_column_slice(b);
        let x = lu
            .solve(&rhs)
            .ok_or(FormulaError::NearSingular { estimate: f64::INFINITY })?;
        let residual = (&a * &x - &rhs).norm() / bnorm;
        Ok((x.as_slice().to_vec(), residual, estimate))
    }
}

/// T_{u0} T_{ubar0} v = Pi(u0 Pi(ubar0 v)) with dealiased products.
fn apply_ttbar(
    grid: GridSpec,
    u0_samples: &[Complex64],
    u0bar_samples: &[Complex64],
    v: &HardyField,
) -> HardyField {
    let inner = HardyField::project(&ops::product_field(grid, u0bar_samples, &v.field().samples()));
    HardyField::project(&ops::product_field(grid, u0_samples, &inner.field().samples()))
}

fn combine(evals: &[RungEval]) -> EvalDetail {
    let value = extrapolate(&evals.iter().map(|e| (e.weight, e.value)).collect::<Vec<_>>());
    let w_at_z = extrapolate(&evals.iter().map(|e| (e.weight, e.w_at_z)).collect::<Vec<_>>());
    EvalDetail {
        value,
        w_at_z,
        correction: value - w_at_z,
        iterations: evals.iter().map(|e| e.iterations).max().unwrap_or(0),
        residual: evals.iter().map(|e| e.residual).fold(0.0, f64::max),
        condition: evals.iter().map(|e| e.condition).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_datum(grid: GridSpec, amp: f64) -> Field {
        let bump = Field::from_fn(grid, |x| Complex64::new((-x * x).exp(), 0.0));
        let proj = HardyField::project(&bump);
        Field::from_coef(
            grid,
            proj.field()
                .coef()
                .iter()
                .enumerate()
                .map(|(m, &c)| if m == 0 { c * amp + 1.0 } else { c * amp })
                .collect(),
        )
    }

    fn zp(re: f64, im: f64) -> UpperHalfPoint {
        UpperHalfPoint::new(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn constant_datum_is_exact() {
        let g = GridSpec::new(50.0, 256).unwrap();
        let u0 = Field::constant(g, Complex64::new(1.0, 0.0));
        let ws = FormulaWorkspace::new(&u0, SolveSettings::default()).unwrap();
        for &t in &[0.0, 0.3, 1.0] {
            for &im in &[1.0, 2.0] {
                let v = ws.explicit_eval(t, zp(0.0, im)).unwrap();
                assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12, "t={t} v={v}");
            }
        }
    }

    #[test]
    fn time_zero_degenerates_to_poisson() {
        let g = GridSpec::new(50.0, 512).unwrap();
        let u0 = gaussian_datum(g, 0.1);
        let ws = FormulaWorkspace::new(&u0, SolveSettings::default()).unwrap();
        let z = zp(0.4, 1.3);
        let direct = ops::poisson_eval(&HardyField::project(&u0), z);
        let formula = ws.explicit_eval(0.0, z).unwrap();
        assert!((formula - direct).norm() < 1e-12);
        let trace = ws.explicit_eval_iplus(0.0, z).unwrap();
        assert!((trace - direct).norm() < 1e-12);
    }

    #[test]
    fn eps_one_is_bitwise_explicit_eval() {
        let g = GridSpec::new(50.0, 512).unwrap();
        let u0 = gaussian_datum(g, 0.1);
        let ws = FormulaWorkspace::new(&u0, SolveSettings::default()).unwrap();
        let z = zp(0.0, 1.0);
        let a = ws.explicit_eval(0.25, z).unwrap();
        let b = ws.zd_eps_eval(0.25, z, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn v_eval_matches_subtraction_path() {
        let g = GridSpec::new(50.0, 512).unwrap();
        let u0 = gaussian_datum(g, 0.1);
        let ws = FormulaWorkspace::new(&u0, SolveSettings::default()).unwrap();
        let z = zp(0.0, 1.0);
        let t = 0.25;
        let detail = ws.eval_detail(t, z, 1.0).unwrap();
        let direct = ws.v_eval(t, z).unwrap();
        assert!((direct - (detail.value - detail.w_at_z)).norm() < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_eps_and_low_points() {
        let g = GridSpec::new(50.0, 256).unwrap();
        let u0 = gaussian_datum(g, 0.1);
        let mut ws = FormulaWorkspace::new(&u0, SolveSettings::default()).unwrap();
        assert!(matches!(
            ws.zd_eps_eval(0.1, zp(0.0, 1.0), 0.0),
            Err(FormulaError::BadEpsilon(_))
        ));
        ws.set_z_min(0.5);
        assert!(ws.explicit_eval(0.1, zp(0.0, 0.1)).is_err());
    }

    #[test]
    fn rejects_non_hardy_datum() {
        let g = GridSpec::new(10.0, 128).unwrap();
        let bad = Field::from_fn(g, |x| Complex64::new(1.0 + x.cos(), 0.0));
        assert!(FormulaWorkspace::new(&bad, SolveSettings::default()).is_err());
    }

    #[test]
    fn dense_cap_is_enforced() {
        let g = GridSpec::new(50.0, 1024).unwrap();
        let u0 = gaussian_datum(g, 0.1);
        let mut ws = FormulaWorkspace::new(
            &u0,
            SolveSettings { dense_max: 256, ..Default::default() },
        )
        .unwrap();
        ws.configure_refinement(vec![2, 4, 8], vec![1]).unwrap();
        assert!(matches!(
            ws.explicit_eval_iplus(0.1, zp(0.0, 1.0)),
            Err(FormulaError::DenseTooLarge { .. })
        ));
    }

    #[test]
    fn flat_difference_quotient_partial_fraction() {
        // w = 1/(x+i), z = i: (w(x) - w(i)) / (x - i) = (i/2) / (x + i).
        let g = GridSpec::new(200.0, 8192).unwrap();
        let w = Field::from_fn(g, |x| 1.0 / Complex64::new(x, 1.0));
        let q = difference_quotient(&w, zp(0.0, 1.0));
        let expect = Field::from_fn(g, |x| Complex64::new(0.0, 0.5) / Complex64::new(x, 1.0));
        let diff = q
            .field()
            .zip_coef(HardyField::project(&expect).field(), |a, b| a - b)
            .l2_norm();
        assert!(diff < 2e-2, "partial-fraction deviation {diff}");
    }
}
