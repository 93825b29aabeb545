//! Behavioral checks on the closed-form evaluator: determinism, continuity in
//! time, and holomorphy of z -> u(t, z) in the upper half-plane.

use cmdnls_core::formula::{FormulaWorkspace, SolveSettings};
use cmdnls_core::grid::{Field, GridSpec, HardyField, UpperHalfPoint};
use num_complex::Complex64;

fn workspace() -> FormulaWorkspace {
    let g = GridSpec::new(50.0, 512).unwrap();
    let bump = HardyField::project(&Field::from_fn(g, |x| {
        Complex64::new((-x * x).exp(), 0.0)
    }));
    let datum = bump
        .field()
        .map_coef(|m, c| if m == 0 { 0.1 * c + 1.0 } else { 0.1 * c });
    FormulaWorkspace::new(&datum, SolveSettings::default()).unwrap()
}

fn at(ws: &FormulaWorkspace, t: f64, z: Complex64) -> Complex64 {
    ws.explicit_eval(t, UpperHalfPoint::new(z).unwrap()).unwrap()
}

#[test]
fn evaluation_is_deterministic_across_cache_resets() {
    let ws = workspace();
    let z = UpperHalfPoint::new(Complex64::new(0.5, 1.0)).unwrap();
    let first = ws.eval_detail(0.3, z, 1.0).unwrap();
    ws.clear_cache();
    let second = ws.eval_detail(0.3, z, 1.0).unwrap();
    assert_eq!(first.value, second.value);
    assert_eq!(first.w_at_z, second.w_at_z);
    assert_eq!(first.iterations, second.iterations);
}

#[test]
fn value_is_continuous_in_time() {
    let ws = workspace();
    let z = Complex64::new(0.0, 2.0);
    let base = at(&ws, 0.2, z);
    let gap_coarse = (at(&ws, 0.2 + 1e-3, z) - base).norm();
    let gap_fine = (at(&ws, 0.2 + 1e-4, z) - base).norm();
    // Bounded difference quotients, and the gap shrinks with the offset.
    assert!(gap_coarse <= 1e-3, "slope {:.3}", gap_coarse / 1e-3);
    assert!(gap_fine <= 1e-4, "slope {:.3}", gap_fine / 1e-4);
    assert!(gap_fine < gap_coarse);
}

#[test]
fn value_satisfies_cauchy_riemann_in_z() {
    let ws = workspace();
    let h = 1e-2;
    for (t, z0) in [(0.1, Complex64::new(0.0, 2.0)), (0.4, Complex64::new(0.7, 1.5))] {
        let dx = (at(&ws, t, z0 + h) - at(&ws, t, z0 - h)) / (2.0 * h);
        let dy = (at(&ws, t, z0 + Complex64::new(0.0, h)) - at(&ws, t, z0 - Complex64::new(0.0, h)))
            / (2.0 * h);
        let residual = 0.5 * (dx + Complex64::i() * dy);
        assert!(
            residual.norm() <= 1e-4,
            "d/dzbar = {residual} at t = {t}, z = {z0}"
        );
    }
}

#[test]
fn solver_diagnostics_are_sane() {
    let ws = workspace();
    let z = UpperHalfPoint::new(Complex64::new(0.0, 1.0)).unwrap();
    let detail = ws.eval_detail(0.5, z, 1.0).unwrap();
    assert!(detail.residual <= ws.settings().tolerance * 10.0);
    assert!(detail.condition >= 1.0 && detail.condition.is_finite());
    assert!((detail.value - detail.w_at_z - detail.correction).norm() <= 1e-14);
}
