//! Restarted GMRES for matrix-free complex operators, with a Krylov-side
//! condition estimate from the Arnoldi Hessenberg matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::FormulaError;

#[derive(Debug, Clone, Copy)]
pub(crate) struct GmresSettings {
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    pub condition_limit: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual |b - A x| / |b| from the Givens recursion.
    pub residual: f64,
    /// sigma_max / sigma_min of the final Arnoldi Hessenberg block; a lower
    /// bound for the condition number of the operator on the Krylov space.
    pub condition: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Complex Givens rotation zeroing b against a: returns (c, s) with c real,
/// [c, s; -conj(s), c] rotating (a, b) to (r, 0).
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = (an * an + bn * bn).sqrt();
    let alpha = a / an;
    (an / r, alpha * b.conj() / r)
}

/// Solves A x = b for a matrix-free operator with restarted GMRES.
///
/// Errors when the relative residual stays above the tolerance after the
/// iteration budget, or when the Hessenberg condition estimate exceeds the
/// configured limit (the continuum operator is invertible, so ill
/// conditioning signals discretization breakdown).
pub(crate) fn gmres(
    apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    s: &GmresSettings,
) -> Result<GmresOutcome, FormulaError> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x: vec![Complex64::ZERO; n],
            iterations: 0,
            residual: 0.0,
            condition: 1.0,
        });
    }

    let m = s.restart.max(1);
    let mut x = vec![Complex64::ZERO; n];
    let mut iterations = 0usize;
    let mut relres = 1.0;
    let mut condition = 1.0;

    while iterations < s.max_iterations {
        let r: Vec<Complex64> = if iterations == 0 {
            b.to_vec()
        } else {
            let ax = apply(&x);
            b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect()
        };
        let beta = norm(&r);
        relres = beta / bnorm;
        if relres <= s.tolerance {
            break;
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|&c| c / beta).collect());
        let mut hess = DMatrix::<Complex64>::zeros(m + 1, m);
        let mut tri = DMatrix::<Complex64>::zeros(m, m);
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![Complex64::ZERO; m];
        let mut g = vec![Complex64::ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);

        let mut cols = 0usize;
        for j in 0..m {
            if iterations >= s.max_iterations {
                break;
            }
            iterations += 1;
            let mut w = apply(&basis[j]);
            let mut col = vec![Complex64::ZERO; j + 2];
            for (i, q) in basis.iter().enumerate().take(j + 1) {
                let hij = dot(q, &w);
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= hij * qk;
                }
                col[i] = hij;
            }
            let hnext = norm(&w);
            col[j + 1] = Complex64::new(hnext, 0.0);
            for (i, &c) in col.iter().enumerate() {
                hess[(i, j)] = c;
            }

            for i in 0..j {
                let a = col[i];
                let bb = col[i + 1];
                col[i] = cs[i] * a + sn[i] * bb;
                col[i + 1] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (c, sv) = givens(col[j], col[j + 1]);
            cs[j] = c;
            sn[j] = sv;
            col[j] = c * col[j] + sv * col[j + 1];
            col[j + 1] = Complex64::ZERO;
            for (i, &v) in col.iter().enumerate().take(j + 1) {
                tri[(i, j)] = v;
            }
            let gj = g[j];
            g[j] = c * gj + sv * g[j + 1];
            g[j + 1] = -sv.conj() * gj + c * g[j + 1];

            cols = j + 1;
            relres = g[j + 1].norm() / bnorm;
            let breakdown = hnext <= 1e-14 * bnorm.max(1.0);
            if relres <= s.tolerance || breakdown {
                break;
            }
            let mut next: Vec<Complex64> = w;
            for c in next.iter_mut() {
                *c /= hnext;
            }
            basis.push(next);
        }

        // back-substitute R y = g and accumulate x += Q y
        let mut y = vec![Complex64::ZERO; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for k in i + 1..cols {
                acc -= tri[(i, k)] * y[k];
            }
            y[i] = acc / tri[(i, i)];
        }
        for (yi, q) in y.iter().zip(&basis) {
            for (xk, qk) in x.iter_mut().zip(q) {
                *xk += yi * qk;
            }
        }

        let block = hess.view((0, 0), (cols + 1, cols)).into_owned();
        let sv = block.svd(false, false).singular_values;
        let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
        let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > s.condition_limit {
            return Err(FormulaError::NearSingular { estimate: condition });
        }
        if relres <= s.tolerance {
            break;
        }
    }

    if relres > s.tolerance {
        return Err(FormulaError::NoConvergence { residual: relres, iterations });
    }
    Ok(GmresOutcome { x, iterations, residual: relres, condition })
}
