//! Conserved functionals, the gauge transform and its identity, Lax-pair
//! residuals, metrics, and inequality probes.

use num_complex::Complex64;

use crate::error::DiagnosticsError;
use crate::evolve::Trajectory;
use crate::grid::{Field, HardyField};
use crate::ops;

/// Dealiased field of |u|^2 - 1.
fn defect_field(u: &Field) -> Field {
    let samples: Vec<Complex64> = u
        .samples()
        .iter()
        .map(|v| Complex64::new(v.norm_sqr() - 1.0, 0.0))
        .collect();
    ops::dealias(&Field::from_samples(u.grid(), &samples))
}

/// ||u|^2 - 1|_{L^2}.
pub fn mass_defect(u: &Field) -> f64 {
    defect_field(u).l2_norm()
}

/// First conserved functional, I1(u) = ||D u + u Pi(|u|^2 - 1)||.
pub fn i1(u: &Field) -> f64 {
    let grid = u.grid();
    let pq = HardyField::project(&defect_field(u));
    let prod = ops::product_field(grid, &u.samples(), &pq.field().samples());
    ops::derivative_d(u).zip_coef(&prod, |a, b| a + b).l2_norm()
}

/// Second conserved functional: the L^2 norm of the six-term field
/// D^2 u + u T_ubar(D u) + D(u Pi q) + D u + u Pi(|u|^2 Pi q) + u Pi q
/// with q = |u|^2 - 1 and every pointwise product dealiased.
pub fn i2(u: &Field) -> f64 {
    let grid = u.grid();
    let us = u.samples();
    let ubar: Vec<Complex64> = us.iter().map(|v| v.conj()).collect();
    let cq = defect_field(u);
    let pq = HardyField::project(&cq);
    let pq_samples = pq.field().samples();
    let du = ops::derivative_d(u);
    let du_samples = du.samples();

    let t1 = ops::derivative_d(&du);
    let t2 = {
        let inner = HardyField::project(&ops::product_field(grid, &ubar, &du_samples));
        ops::product_field(grid, &us, &inner.field().samples())
    };
    let t3 = ops::derivative_d(&ops::product_field(grid, &us, &pq_samples));
    let t4 = du;
    let t5 = {
        let usq: Vec<Complex64> = us.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
        let usq_field = ops::dealias(&Field::from_samples(grid, &usq));
        let inner =
            HardyField::project(&ops::product_field(grid, &usq_field.samples(), &pq_samples));
        ops::product_field(grid, &us, &inner.field().samples())
    };
    let t6 = ops::product_field(grid, &us, &pq_samples);

    let coef: Vec<Complex64> = (0..grid.size())
        .map(|m| {
            t1.coef()[m] + t2.coef()[m] + t3.coef()[m] + t4.coef()[m] + t5.coef()[m]
                + t6.coef()[m]
        })
        .collect();
    Field::from_coef(grid, coef).l2_norm()
}

/// X^2 norm |u|_inf + |u'| + |u''|; finite for unit-background data since
/// the derivatives kill the constant mode.
pub fn x2_norm(u: &Field) -> f64 {
    u.linf_norm() + ops::d_dx(u).l2_norm() + ops::d2_dx2(u).l2_norm()
}

/// Gauge-transformed state v(x) = u(x) e^{i phi(x)/2},
/// phi(x) = integral of |u|^2 - 1 from 0 to x.
///
/// The mean q0 of |u|^2 - 1 makes phi non-periodic; v is carried as a
/// periodic factor times e^{i slope x} so derivatives stay spectral. The
/// combined sample vector is available but has no valid coefficient view.
#[derive(Debug, Clone)]
pub struct GaugeField {
    periodic: Field,
    slope: f64,
}

impl GaugeField {
    /// Periodic factor P with v = P e^{i slope x}.
    pub fn periodic(&self) -> &Field {
        &self.periodic
    }

    /// Phase slope, equal to q0/2 where q0 is the mean of |u|^2 - 1.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// Plain samples of v on the fundamental domain.
    pub fn samples(&self) -> Vec<Complex64> {
        let grid = self.periodic.grid();
        self.periodic
            .samples()
            .iter()
            .enumerate()
            .map(|(j, &p)| p * (Complex64::i() * self.slope * grid.x(j)).exp())
            .collect()
    }

    /// |v(x_j)|, which equals |u(x_j)| exactly.
    pub fn modulus(&self) -> Vec<f64> {
        self.periodic.samples().iter().map(|v| v.norm()).collect()
    }
}

/// Gauge transform u -> v = u e^{(i/2) int_0^x (|u|^2 - 1)}.
///
/// The antiderivative splits as q0 x + S(x) - S(0) with S the spectral
/// antiderivative of the mean-zero part of q = |u|^2 - 1.
pub fn gauge_transform(u: &Field) -> GaugeField {
    let grid = u.grid();
    let cq = defect_field(u);
    let q0 = cq.coef()[0].re;
    let anti = cq.map_coef(|m, c| {
        if grid.mode(m) == 0 {
            Complex64::ZERO
        } else {
            c / Complex64::new(0.0, grid.xi(m))
        }
    });
    let s = anti.samples();
    // x_{N/2} = 0 exactly, anchoring the integral at the origin.
    let s0 = s[grid.size() / 2];
    let p: Vec<Complex64> = u
        .samples()
        .iter()
        .zip(&s)
        .map(|(&uj, &sj)| uj * (Complex64::i() * 0.5 * (sj - s0)).exp())
        .collect();
    GaugeField { periodic: Field::from_samples(grid, &p), slope: q0 / 2.0 }
}

/// Gauge-side functional ||d_x v - (1/2) v H(|v|^2 - 1)||.
///
/// In the split representation this is ||d_x P + i q0 P - (1/2) P H(q)||:
/// the chain rule contributes i (q0/2) P and the torus Szego projector keeps
/// the mean of q that the line identity assigns to the Hilbert term,
/// contributing the other i (q0/2) P.
pub fn i1_gauge(v: &GaugeField) -> f64 {
    let p = v.periodic();
    let grid = p.grid();
    let ps = p.samples();
    let q_samples: Vec<Complex64> = ps
        .iter()
        .map(|w| Complex64::new(w.norm_sqr() - 1.0, 0.0))
        .collect();
    let q = ops::dealias(&Field::from_samples(grid, &q_samples));
    let q0 = 2.0 * v.slope();
    let hq = ops::hilbert_transform(&q).samples();
    let combo: Vec<Complex64> = ps
        .iter()
        .zip(&hq)
        .map(|(&pj, &hj)| Complex64::i() * q0 * pj - 0.5 * pj * hj)
        .collect();
    let combo_field = ops::dealias(&Field::from_samples(grid, &combo));
    ops::d_dx(p).zip_coef(&combo_field, |a, b| a + b).l2_norm()
}

/// Central-difference Lax residual
/// ||(L_{u(t+h)} - L_{u(t-h)}) f / 2h - (B_u L_u - L_u B_u) f|| at time t.
pub fn lax_residual(
    traj: &Trajectory,
    t: f64,
    f: &HardyField,
    dt_fd: f64,
) -> Result<f64, DiagnosticsError> {
    let fetch = |time: f64| traj.at(time).ok_or(DiagnosticsError::SnapshotMissing(time));
    let u_plus = fetch(t + dt_fd)?;
    let u_minus = fetch(t - dt_fd)?;
    let u_mid = fetch(t)?;

    let l_plus = ops::lax_l_apply(u_plus, f)?;
    let l_minus = ops::lax_l_apply(u_minus, f)?;
    let du_mid = ops::d_dx(u_mid);
    let lf = ops::lax_l_apply(u_mid, f)?;
    let bf = ops::lax_b_apply(u_mid, &du_mid, f)?;
    let bl = ops::lax_b_apply(u_mid, &du_mid, &lf)?;
    let lb = ops::lax_l_apply(u_mid, &bf)?;

    let grid = traj.grid();
    let coef: Vec<Complex64> = (0..grid.size())
        .map(|m| {
            let dl = (l_plus.field().coef()[m] - l_minus.field().coef()[m]) / (2.0 * dt_fd);
            dl - (bl.field().coef()[m] - lb.field().coef()[m])
        })
        .collect();
    Ok(Field::from_coef(grid, coef).l2_norm())
}

/// Four-term distance |u-v|_inf + |u'-v'| + |u''-v''| + ||u|^2-|v|^2|.
pub fn d_e(u: &Field, v: &Field) -> Result<f64, crate::error::GridError> {
    u.check_same_grid(v)?;
    let diff = u.zip_coef(v, |a, b| a - b);
    let us = u.samples();
    let vs = v.samples();
    let grid = u.grid();
    let mod_sq: f64 = us
        .iter()
        .zip(&vs)
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).powi(2))
        .sum::<f64>()
        * grid.dx();
    Ok(diff.linf_norm()
        + ops::d_dx(&diff).l2_norm()
        + ops::d2_dx2(&diff).l2_norm()
        + mod_sq.sqrt())
}

/// Both sides of ||v+w|^2 - 1| <= ||v|^2 - 1| + 2 |v|_inf |w| + |w|_{L^4}^2,
/// evaluated on raw samples. The caller asserts lhs <= rhs + tolerance.
pub fn check_sum_bound(v: &Field, w: &Field) -> Result<(f64, f64), crate::error::GridError> {
    v.check_same_grid(w)?;
    let grid = v.grid();
    let vs = v.samples();
    let ws = w.samples();
    let lhs = (vs
        .iter()
        .zip(&ws)
        .map(|(a, b)| ((a + b).norm_sqr() - 1.0).powi(2))
        .sum::<f64>()
        * grid.dx())
    .sqrt();
    let defect_v = (vs.iter().map(|a| (a.norm_sqr() - 1.0).powi(2)).sum::<f64>() * grid.dx()).sqrt();
    let v_inf = vs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let w_l2 = (ws.iter().map(|b| b.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
    let w_l4_sq = (ws.iter().map(|b| b.norm_sqr().powi(2)).sum::<f64>() * grid.dx()).sqrt();
    Ok((lhs, defect_v + 2.0 * v_inf * w_l2 + w_l4_sq))
}

/// Ratios |e^{it dxx} f - f| / (sqrt(t) |f'|) over the given times (0 at t=0).
pub fn check_linear_group_bound(f: &Field, t_list: &[f64]) -> Vec<f64> {
    let fprime_norm = ops::d_dx(f).l2_norm();
    t_list
        .iter()
        .map(|&t| {
            if t == 0.0 {
                0.0
            } else {
                let diff = ops::schrodinger_propagate(f, t).zip_coef(f, |a, b| a - b);
                diff.l2_norm() / (t.abs().sqrt() * fprime_norm)
            }
        })
        .collect()
}

/// |e^{it dxx} f - f|_{H^2} with |g|_{H^2}^2 = 2L sum (1 + xi^2 + xi^4) |c|^2.
pub fn linear_group_h2_diff(f: &Field, t: f64) -> f64 {
    let grid = f.grid();
    let diff = ops::schrodinger_propagate(f, t).zip_coef(f, |a, b| a - b);
    let s: f64 = diff
        .coef()
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let xi2 = grid.xi(m) * grid.xi(m);
            (1.0 + xi2 + xi2 * xi2) * c.norm_sqr()
        })
        .sum();
    (2.0 * grid.half_length() * s).sqrt()
}

/// Per-snapshot invariant summary.
#[derive(Debug, Clone, Copy)]
pub struct InvariantReport {
    pub t: f64,
    pub i1: f64,
    pub i2: f64,
    pub mass_defect: f64,
    pub x2_norm: f64,
    pub chirality_leak: f64,
    /// I1^2 - (1/6) mass_defect^2; nonnegative up to reporting tolerance.
    pub lower_bound_slack: f64,
}

impl InvariantReport {
    pub fn compute(t: f64, u: &Field) -> Self {
        let i1v = i1(u);
        let md = mass_defect(u);
        Self {
            t,
            i1: i1v,
            i2: i2(u),
            mass_defect: md,
            x2_norm: x2_norm(u),
            chirality_leak: u.hardy_leak(),
            lower_bound_slack: i1v * i1v - md * md / 6.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.i1, self.i2, self.mass_defect, self.x2_norm, self.chirality_leak,
            self.lower_bound_slack]
        .iter()
        .all(|v| v.is_finite())
    }
}
