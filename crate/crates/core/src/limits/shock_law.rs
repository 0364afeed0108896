//! Law of the difference of two independent rescaled GOE edge marginals.
//!
//! The rescaled second-class particle position converges to a random
//! variable whose upper-tail probability at level s is
//!
//!   P(H⁻ - H⁺ ≥ 2(ρ-λ)s),
//!
//! where H⁻ and H⁺ are independent and P(H^± ≤ w) = F_GOE(β_± w) with
//! β_± = 2^{-1/3} χ_±^{-2/3}, χ₋ = λ(1-λ), χ₊ = ρ(1-ρ). `shock_limit_cdf`
//! evaluates that exceedance by conditioning on H⁺:
//!
//!   P(H⁻ - H⁺ ≥ m) = ∫ f₊(w) (1 - F₋(w + m)) dw,
//!
//! a one-dimensional integral of the H⁺ density against the H⁻ survivor,
//! done with composite Simpson over the window where the GOE edge law is
//! numerically resolvable. The H⁺ mass beyond the window's right edge
//! (about 2e-6) is folded back in as a closed tail term so the computed
//! exceedance still spans (0, 1) to table tolerance.
//!
//! `shock_table` exports the complementary lower-tail law as a
//! [`DistributionTable`]. Evaluating 1601 grid points directly would need
//! millions of Fredholm determinants, so the table path replaces the exact
//! GOE CDF with a monotone cubic interpolant built once from determinant
//! values on a fine grid; the quadrature nodes, weights, and tail term are
//! identical to the direct path.

use super::tracy_widom::{f_goe, goe_density, LIVE_HI, LIVE_LO};
use super::{parallel_map_indexed, uniform_grid, DistributionTable, LimitsError};

/// Node count of the composite Simpson rule across the H⁺ density support.
const SUPPORT_NODES: usize = 513;

/// Largest |s| accepted; beyond it the integrand saturates and the grids
/// carry no information.
const S_BOUND: f64 = 12.0;

/// Step (in GOE units) of the determinant grid backing the table-path
/// interpolant.
const CDF_GRID_STEP: f64 = 0.01;

/// Export grid of the distribution table, chosen to match the harness
/// Kolmogorov-Smirnov comparison grid.
const TABLE_LO: f64 = -8.0;
const TABLE_HI: f64 = 8.0;
const TABLE_STEP: f64 = 0.01;

/// Scale factor β = 2^{-1/3} χ^{-2/3} mapping a marginal to GOE units.
fn marginal_scale(chi: f64) -> f64 {
    0.5f64.cbrt() / chi.powf(2.0 / 3.0)
}

/// Validates densities and the time offset, returning (χ₋, χ₊).
///
/// The offset τ shifts both stationary marginal processes along their
/// spatial argument, so one-point laws do not depend on it; it is accepted
/// and checked for finiteness only.
fn check_params(lambda: f64, rho: f64, tau: f64) -> Result<(f64, f64), LimitsError> {
    if !(lambda > 0.0 && lambda < 1.0 && rho > 0.0 && rho < 1.0 && lambda < rho) {
        return Err(LimitsError::BadParameter(format!(
            "need 0 < lambda < rho < 1, got lambda = {lambda}, rho = {rho}"
        )));
    }
    if !tau.is_finite() {
        return Err(LimitsError::BadParameter(format!("tau = {tau} not finite")));
    }
    Ok((lambda * (1.0 - lambda), rho * (1.0 - rho)))
}

/// Composite Simpson weights for an odd number of equally spaced nodes.
fn simpson_weights(h: f64, nodes: usize) -> Vec<f64> {
    assert!(nodes >= 3 && nodes % 2 == 1, "Simpson needs an odd node count");
    (0..nodes)
        .map(|k| {
            let c = if k == 0 || k == nodes - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Simpson discretization of the H⁺ density over its resolvable support.
///
/// `tail_mass` is the density mass the window misses on the right;
/// `quadrature_sum` reassigns it to the window's right edge, where the
/// survivor factor is within its own variation of the truncated tail's.
struct SupportGrid {
    nodes: Vec<f64>,
    weighted_density: Vec<f64>,
    tail_mass: f64,
    hi: f64,
}

fn support_grid(beta_plus: f64) -> SupportGrid {
    let lo = LIVE_LO / beta_plus;
    let hi = LIVE_HI / beta_plus;
    let h = (hi - lo) / (SUPPORT_NODES - 1) as f64;
    let nodes: Vec<f64> = (0..SUPPORT_NODES).map(|k| lo + h * k as f64).collect();
    let weights = simpson_weights(h, SUPPORT_NODES);
    let density = parallel_map_indexed(SUPPORT_NODES, |k| {
        beta_plus * goe_density(beta_plus * nodes[k])
    });
    let weighted_density: Vec<f64> = weights
        .iter()
        .zip(&density)
        .map(|(w, d)| w * d)
        .collect();
    let mass: f64 = weighted_density.iter().sum();
    SupportGrid {
        nodes,
        weighted_density,
        tail_mass: (1.0 - mass).max(0.0),
        hi,
    }
}

/// Contracts the weighted density against survivor values at the nodes,
/// adds the right-tail completion, and clamps into [0, 1].
fn quadrature_sum(grid: &SupportGrid, survivor: &[f64], tail_survivor: f64) -> f64 {
    let mut acc = 0.0;
    for (wd, sv) in grid.weighted_density.iter().zip(survivor) {
        acc += wd * sv;
    }
    acc += grid.tail_mass * tail_survivor;
    acc.clamp(0.0, 1.0)
}

/// P(H⁻ - H⁺ ≥ 2(ρ-λ)s) for the shock with left density λ and right
/// density ρ, evaluated at time offset `tau` (inert, see module docs).
///
/// Nonincreasing in s, equal to 1/2 at s = 0 when χ₋ = χ₊. Errors on
/// densities outside 0 < λ < ρ < 1 and on |s| > 12.
pub fn shock_limit_cdf(s: f64, lambda: f64, rho: f64, tau: f64) -> Result<f64, LimitsError> {
    let (chi_minus, chi_plus) = check_params(lambda, rho, tau)?;
    if !(s.abs() <= S_BOUND) {
        return Err(LimitsError::OutOfDomain { name: "s", value: s });
    }
    let beta_minus = marginal_scale(chi_minus);
    let beta_plus = marginal_scale(chi_plus);
    let m = 2.0 * (rho - lambda) * s;
    let grid = support_grid(beta_plus);
    let survivor = parallel_map_indexed(grid.nodes.len(), |k| {
        1.0 - f_goe(beta_minus * (grid.nodes[k] + m))
    });
    Ok(quadrature_sum(
        &grid,
        &survivor,
        1.0 - f_goe(beta_minus * (grid.hi + m)),
    ))
}

/// GOE CDF interpolant: monotone piecewise cubic through determinant
/// values on a uniform grid, saturating to 0 and 1 outside the window
/// exactly like [`f_goe`].
///
/// Harmonic-mean (Fritsch-Butland) tangents keep every piece nondecreasing,
/// so survivor differences taken across shifted arguments never change
/// sign, which the exported table's monotonicity check requires.
struct MonotoneCdf {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCdf {
    fn build_goe() -> Self {
        let n = ((LIVE_HI - LIVE_LO) / CDF_GRID_STEP).round() as usize + 1;
        let step = (LIVE_HI - LIVE_LO) / (n - 1) as f64;
        let mut values = parallel_map_indexed(n, |k| f_goe(LIVE_LO + step * k as f64));
        for k in 1..n {
            if values[k] < values[k - 1] {
                values[k] = values[k - 1];
            }
        }
        let secants: Vec<f64> = values
            .windows(2)
            .map(|w| (w[1] - w[0]) / step)
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for k in 1..n - 1 {
            let (a, b) = (secants[k - 1], secants[k]);
            slopes[k] = if a > 0.0 && b > 0.0 {
                2.0 * a * b / (a + b)
            } else {
                0.0
            };
        }
        MonotoneCdf {
            lo: LIVE_LO,
            step,
            values,
            slopes,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let hi = self.lo + self.step * (n - 1) as f64;
        if x <= self.lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let u = (x - self.lo) / self.step;
        let k = (u.floor() as usize).min(n - 2);
        let t = u - k as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.values[k]
            + h01 * self.values[k + 1]
            + self.step * (h10 * self.slopes[k] + h11 * self.slopes[k + 1]);
        v.clamp(0.0, 1.0)
    }
}

/// Lower-tail distribution table of the limiting rescaled position on
/// s ∈ [-8, 8] with step 0.01: entries are 1 minus the exceedance that
/// [`shock_limit_cdf`] returns, validated as a proper CDF.
pub fn shock_table(lambda: f64, rho: f64) -> Result<DistributionTable, LimitsError> {
    let (chi_minus, chi_plus) = check_params(lambda, rho, 0.0)?;
    let beta_minus = marginal_scale(chi_minus);
    let beta_plus = marginal_scale(chi_plus);
    let grid = support_grid(beta_plus);
    let cdf_minus = MonotoneCdf::build_goe();
    let s_grid = uniform_grid(TABLE_LO, TABLE_HI, TABLE_STEP);
    let factor = 2.0 * (rho - lambda);
    let mut cdf = parallel_map_indexed(s_grid.len(), |j| {
        let m = factor * s_grid[j];
        let survivor: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&w| 1.0 - cdf_minus.eval(beta_minus * (w + m)))
            .collect();
        let tail = 1.0 - cdf_minus.eval(beta_minus * (grid.hi + m));
        1.0 - quadrature_sum(&grid, &survivor, tail)
    });
    for j in 1..cdf.len() {
        if cdf[j] < cdf[j - 1] {
            cdf[j] = cdf[j - 1];
        }
    }
    let table = DistributionTable {
        law: "shock-position".to_string(),
        params: format!("lambda={lambda},rho={rho}"),
        order: SUPPORT_NODES,
        s: s_grid,
        cdf,
    };
    table.validate()?;
    Ok(table)
}
