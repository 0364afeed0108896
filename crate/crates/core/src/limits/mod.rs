//! Numerical side of the scaling theory: Airy function, Fredholm determinants,
//! Tracy-Widom GUE/GOE laws, the exact pre-limit transition kernels of the particle
//! system together with their scaled limit forms, the crossover kernel interpolating
//! between the flat and curved regimes, and the limiting law of the shock position.
//!
//! Everything here is deterministic and pure. The only concurrency is embarrassingly
//! parallel table construction over grid points, done with scoped threads.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;
use thiserror::Error;

pub mod airy;
pub mod airy21;
pub mod finite_kernels;
pub mod fredholm;
pub mod quadrature;
pub mod shock_law;
pub mod tracy_widom;

pub use airy::{airy_ai, airy_ai_prime};
pub use airy21::{airy21_kernel, airy21_kernel_forms, airy21_onepoint};
pub use finite_kernels::{
    kernel_q, kernel_q_limit, kernel_s, kernel_s_limit, kernel_sbar, kernel_sbar_epi,
    kernel_sbar_epi_limit, kernel_sbar_limit, KernelScaling, ScaledPoint,
};
pub use fredholm::{fredholm_det, fredholm_det_checked, resolvent_diag};
pub use quadrature::QuadratureRule;
pub use shock_law::{shock_limit_cdf, shock_table};
pub use tracy_widom::{f_goe, f_gue, goe_density, goe_table, gue_table};

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("{name} = {value} outside supported domain")]
    OutOfDomain { name: &'static str, value: f64 },
    #[error("quadrature did not converge: order doubling moved {coarse} to {fine}")]
    NonConvergent { coarse: f64, fine: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("unsupported quadrature order {0}")]
    QuadratureOrder(usize),
    #[error("distribution table invariant violated: {0}")]
    Table(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Tail mass allowed at either end of a tabulated CDF before it counts as
/// unnormalized.
pub const TABLE_TAIL_TOL: f64 = 1.0e-6;

/// A cumulative distribution function tabulated on a uniform-ish grid, with enough
/// metadata to tell tables of different laws or accuracy settings apart.
#[derive(Debug, Clone)]
pub struct DistributionTable {
    /// Which law the table holds, e.g. "tracy-widom-gue".
    pub law: String,
    /// Human-readable parameter string, e.g. "lambda=0.25 rho=0.75".
    pub params: String,
    /// Quadrature order used to build the values.
    pub order: usize,
    /// Grid of abscissas, strictly increasing.
    pub s: Vec<f64>,
    /// CDF values at the grid points.
    pub cdf: Vec<f64>,
}

impl DistributionTable {
    /// Builds a table by evaluating `f` at every grid point in parallel, clamping
    /// the values into [0, 1].
    pub fn build<F>(law: &str, params: &str, order: usize, grid: Vec<f64>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let cdf = parallel_map_indexed(grid.len(), |i| f(grid[i]).clamp(0.0, 1.0));
        DistributionTable {
            law: law.to_string(),
            params: params.to_string(),
            order,
            s: grid,
            cdf,
        }
    }

    /// Checks the CDF contract: grid strictly increasing, values in [0, 1] and
    /// nondecreasing, and the ends within [`TABLE_TAIL_TOL`] of 0 and 1.
    pub fn validate(&self) -> Result<(), LimitsError> {
        if self.s.len() != self.cdf.len() || self.s.len() < 2 {
            return Err(LimitsError::Table(format!(
                "grid/cdf lengths {} vs {}",
                self.s.len(),
                self.cdf.len()
            )));
        }
        for w in self.s.windows(2) {
            if !(w[1] > w[0]) {
                return Err(LimitsError::Table(format!(
                    "grid not increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        for (&x, &f) in self.s.iter().zip(&self.cdf) {
            if !(0.0..=1.0).contains(&f) || !f.is_finite() {
                return Err(LimitsError::Table(format!("cdf({x}) = {f} outside [0,1]")));
            }
        }
        for (w, sw) in self.cdf.windows(2).zip(self.s.windows(2)) {
            if w[1] < w[0] {
                return Err(LimitsError::Table(format!(
                    "cdf decreasing on [{}, {}]: {} -> {}",
                    sw[0], sw[1], w[0], w[1]
                )));
            }
        }
        let head = self.cdf[0];
        let tail = 1.0 - self.cdf[self.cdf.len() - 1];
        if head > TABLE_TAIL_TOL || tail > TABLE_TAIL_TOL {
            return Err(LimitsError::Table(format!(
                "tail mass {head:.3e} / {tail:.3e} above {TABLE_TAIL_TOL:.0e}"
            )));
        }
        Ok(())
    }

    /// Linear interpolation, clamped to the end values outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let s = &self.s;
        let n = s.len();
        if x <= s[0] {
            return self.cdf[0];
        }
        if x >= s[n - 1] {
            return self.cdf[n - 1];
        }
        let j = s.partition_point(|&g| g < x);
        let (a, b) = (s[j - 1], s[j]);
        let w = (x - a) / (b - a);
        self.cdf[j - 1] * (1.0 - w) + self.cdf[j] * w
    }

    /// Mean and variance of the tabulated law, by midpoint integration of the CDF
    /// increments (the sub-[`TABLE_TAIL_TOL`] mass outside the grid is renormalized
    /// away).
    pub fn mean_variance(&self) -> (f64, f64) {
        let mut total = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in 1..self.s.len() {
            let dm = self.cdf[i] - self.cdf[i - 1];
            let sm = 0.5 * (self.s[i] + self.s[i - 1]);
            total += dm;
            m1 += sm * dm;
            m2 += sm * sm * dm;
        }
        let mean = m1 / total;
        (mean, m2 / total - mean * mean)
    }

    /// Writes `s,cdf` rows in scientific notation with fixed precision, so repeated
    /// exports of the same table are byte-identical.
    pub fn to_csv<P: AsRef<Path>>(&self, path: P) -> Result<(), LimitsError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# law={} {} order={}", self.law, self.params, self.order)?;
        writeln!(out, "s,cdf")?;
        for (&x, &f) in self.s.iter().zip(&self.cdf) {
            writeln!(out, "{x:.12e},{f:.12e}")?;
        }
        Ok(())
    }
}

/// Uniform grid from `lo` to `hi` inclusive with the given step (the last point is
/// forced onto `hi` to keep the endpoint exact).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    *g.last_mut().unwrap() = hi;
    g
}

/// Maps `f` over `0..n` with scoped threads, preserving order. Used for table
/// construction where every entry is an independent determinant evaluation.
pub fn parallel_map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n.max(1));
    let mut results: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(workers.max(1)).max(1);
    std::thread::scope(|scope| {
        for (ci, slot) in results.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (j, out) in slot.iter_mut().enumerate() {
                    *out = Some(f(ci * chunk + j));
                }
            });
        }
    });
    results.into_iter().map(|o| o.unwrap()).collect()
}
