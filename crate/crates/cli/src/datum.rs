//! Sampling the initial-data catalog onto a grid. Every kind is constructed
//! to be Hardy up to roundoff: bumps are projected, poles are periodized in
//! closed form, and the background lives in the zero mode.

use std::f64::consts::PI;

use cmdnls_core::grid::{Field, GridSpec};
use cmdnls_core::ops;
use num_complex::Complex64;

use crate::config::{ConfigError, InitialDatum};

/// Grid leak above this level earns a warning: the grid cannot represent the
/// datum chirally (pole too close to the axis, or N too small).
const LEAK_WARN: f64 = 1e-10;

/// Rational periodization quality bound: warn when half_length / b < 50.
const POLE_RANGE_WARN: f64 = 50.0;

pub struct BuiltDatum {
    pub field: Field,
    pub warnings: Vec<String>,
}

fn complex(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

/// Exact periodization of 1/(x + ib): sum over 2L images equals
/// (pi/2L) cot(pi (x + ib) / 2L).
fn periodized_pole(grid: GridSpec, b: f64) -> Field {
    let l = grid.half_length();
    Field::from_fn(grid, |x| {
        let w = Complex64::new(x, b) * PI / (2.0 * l);
        (PI / (2.0 * l)) * w.cos() / w.sin()
    })
}

pub fn build_datum(datum: &InitialDatum, grid: GridSpec) -> Result<BuiltDatum, ConfigError> {
    datum.validate()?;
    let mut warnings = Vec::new();
    let field = match datum {
        InitialDatum::Constant(p) => Field::constant(grid, complex(p.c)),
        InitialDatum::Rational(p) => {
            let mut acc = Field::constant(grid, complex(p.c));
            for (j, term) in p.terms.iter().enumerate() {
                let range = grid.half_length() / term.b;
                if range < POLE_RANGE_WARN {
                    warnings.push(format!(
                        "pole term {j}: half_length/b = {range:.1} < {POLE_RANGE_WARN}; \
                         periodization error may dominate"
                    ));
                }
                let a = complex(term.a);
                let pole = periodized_pole(grid, term.b);
                acc = acc.zip_coef(&pole, |s, p| s + a * p);
            }
            acc
        }
        InitialDatum::GaussianBump(p) => {
            let amp = complex(p.amplitude);
            let (width, center) = (p.width, p.center);
            let bump = ops::szego_project(&Field::from_fn(grid, |x| {
                let r = (x - center) / width;
                Complex64::new((-r * r).exp(), 0.0)
            }));
            let c = complex(p.c);
            bump.field()
                .map_coef(|m, co| amp * co + if m == 0 { c } else { Complex64::ZERO })
        }
        InitialDatum::MultiBump(p) => {
            let sum = Field::from_fn(grid, |x| {
                p.bumps
                    .iter()
                    .map(|b| {
                        let r = (x - b.center) / b.width;
                        complex(b.amplitude) * (-r * r).exp()
                    })
                    .sum()
            });
            let c = complex(p.c);
            ops::szego_project(&sum)
                .field()
                .map_coef(|m, co| co + if m == 0 { c } else { Complex64::ZERO })
        }
    };
    let leak = field.hardy_leak();
    if leak > LEAK_WARN {
        warnings.push(format!(
            "datum chirality leak {leak:.2e} exceeds {LEAK_WARN:.0e}; \
             refine the grid or move poles away from the axis"
        ));
    }
    if !field.is_finite() {
        return Err(ConfigError::Invalid(
            "datum sampling produced non-finite values".into(),
        ));
    }
    Ok(BuiltDatum { field, warnings })
}
