//! Tracy-Widom GUE and GOE distribution functions, their lookup tables, and
//! the GOE density.
//!
//! F_GUE(s) is the Fredholm determinant of the Airy kernel on (s, ∞). F_GOE(s)
//! is the determinant of the rank-symmetric kernel Ai(x + y) on (s/2, ∞),
//! which is the half-line form obtained by shifting the kernel Ai(x + y + s)
//! off L²(0, ∞). Both are evaluated by the Nyström scheme in
//! [`super::fredholm`] at a fixed order that leaves the values converged well
//! past the table tolerance.

use super::fredholm::{fredholm_det, resolvent_diag};
use super::quadrature::QuadratureRule;
use super::{airy_ai, airy_ai_prime, uniform_grid, DistributionTable, LimitsError};

/// Quadrature order behind `f_gue` and `f_goe`. Doubling it moves the values
/// by less than 1e-8 everywhere on the live window.
const DEFAULT_ORDER: usize = 60;

/// Evaluation window. Left of it both CDFs are below the table tail
/// tolerance; right of it they are above one minus it. Outside, the functions
/// saturate instead of pushing the quadrature into regions where the
/// determinant is pure roundoff.
pub(crate) const LIVE_LO: f64 = -10.0;
pub(crate) const LIVE_HI: f64 = 6.0;

/// Tables run past the live window so the GOE upper tail (1 - F ≈ 2e-6 at
/// s = 6) has room to close below the tail tolerance.
const TABLE_LO: f64 = -10.0;
const TABLE_HI: f64 = 7.0;
const TABLE_STEP: f64 = 0.01;

/// Airy kernel with the removable diagonal singularity patched by the
/// midpoint form Ai'(m)² - m Ai(m)².
fn airy_kernel(x: f64, y: f64) -> f64 {
    if (x - y).abs() < 1.0e-6 {
        let m = 0.5 * (x + y);
        let (a, ap) = (airy_ai(m), airy_ai_prime(m));
        ap * ap - m * a * a
    } else {
        (airy_ai(x) * airy_ai_prime(y) - airy_ai(y) * airy_ai_prime(x)) / (x - y)
    }
}

fn goe_kernel(x: f64, y: f64) -> f64 {
    airy_ai(x + y)
}

fn det_gue(s: f64, order: usize) -> Result<f64, LimitsError> {
    let rule = QuadratureRule::gauss_legendre(order)?;
    Ok(fredholm_det(&airy_kernel, s, &rule))
}

fn det_goe(s: f64, order: usize) -> Result<f64, LimitsError> {
    let rule = QuadratureRule::gauss_legendre(order)?;
    Ok(fredholm_det(&goe_kernel, 0.5 * s, &rule))
}

/// Tracy-Widom GUE distribution function, clamped into [0, 1] and saturated
/// outside the live window.
pub fn f_gue(s: f64) -> f64 {
    if s < LIVE_LO {
        return 0.0;
    }
    if s > LIVE_HI {
        return 1.0;
    }
    det_gue(s, DEFAULT_ORDER)
        .expect("default order is valid")
        .clamp(0.0, 1.0)
}

/// Tracy-Widom GOE distribution function, clamped into [0, 1] and saturated
/// outside the live window.
pub fn f_goe(s: f64) -> f64 {
    if s < LIVE_LO {
        return 0.0;
    }
    if s > LIVE_HI {
        return 1.0;
    }
    det_goe(s, DEFAULT_ORDER)
        .expect("default order is valid")
        .clamp(0.0, 1.0)
}

/// GOE density obtained from the determinant and the resolvent of its kernel:
/// d/ds log det(I - K) on (s/2, ∞) equals R(s/2, s/2) / 2.
pub fn goe_density(s: f64) -> f64 {
    if !(LIVE_LO..=LIVE_HI).contains(&s) {
        return 0.0;
    }
    let rule = QuadratureRule::gauss_legendre(DEFAULT_ORDER).expect("default order is valid");
    let r = resolvent_diag(&goe_kernel, 0.5 * s, &rule, 0.5 * s);
    (f_goe(s) * 0.5 * r).max(0.0)
}

/// Builds and validates the GUE table on the standard grid.
pub fn gue_table() -> Result<DistributionTable, LimitsError> {
    let grid = uniform_grid(TABLE_LO, TABLE_HI, TABLE_STEP);
    let table = DistributionTable::build("tracy-widom-gue", "beta=2", DEFAULT_ORDER, grid, f_gue);
    table.validate()?;
    Ok(table)
}

/// Builds and validates the GOE table on the standard grid.
pub fn goe_table() -> Result<DistributionTable, LimitsError> {
    let grid = uniform_grid(TABLE_LO, TABLE_HI, TABLE_STEP);
    let table = DistributionTable::build("tracy-widom-goe", "beta=1", DEFAULT_ORDER, grid, f_goe);
    table.validate()?;
    Ok(table)
}
