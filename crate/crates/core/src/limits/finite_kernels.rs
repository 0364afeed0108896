//! Exact finite-time transition kernels of the determinantal representation and
//! their scaled limit forms.
//!
//! Three kernel families enter the finite-time determinant: a negative-binomial
//! step weight `kernel_q`, a pair of one-sided heat-like kernels `kernel_s` and
//! `kernel_sbar` whose entries are Taylor coefficients of (1-w)^M e^{tw} dressed
//! with geometric prefactors, and a boundary-filtered variant `kernel_sbar_epi`
//! that averages `kernel_sbar` over a geometric-step random walk killed at a
//! staircase boundary.
//!
//! The Taylor coefficients alternate in sign and cancel down dozens of orders
//! of magnitude, so they are extracted in exact rational arithmetic and only
//! converted to floating point once fully assembled. Every public kernel that
//! goes through the series keeps `t` at or below [`MAX_SERIES_TIME`], past
//! which the factorially long sums stop being worth evaluating exactly.
//!
//! [`KernelScaling`] maps dimensionless coordinates (ξ, u, v) onto the integer
//! kernel arguments, and the `*_limit` functions give the Airy and Gaussian
//! forms the rescaled kernels converge to.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::airy::airy_ai;
use super::LimitsError;

/// Longest time the exact series evaluation accepts.
pub const MAX_SERIES_TIME: f64 = 500.0;

/// Relative disagreement allowed between the 53-bit and 106-bit mantissa
/// assemblies of a kernel value.
const ASSEMBLY_TOL: f64 = 1.0e-8;

fn check_lambda(lambda: f64) -> Result<(), LimitsError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(LimitsError::BadParameter(format!(
            "density {lambda} outside (0, 1)"
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<(), LimitsError> {
    if !(t >= 0.0 && t <= MAX_SERIES_TIME) {
        return Err(LimitsError::OutOfDomain {
            name: "kernel time",
            value: t,
        });
    }
    Ok(())
}

/// Exact rational image of a finite f64.
fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

fn rat_ipow(base: &BigRational, e: i64) -> BigRational {
    let p = base.pow(e.unsigned_abs() as i32);
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

fn big_factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

fn big_binomial(n: u64, k: u64) -> BigInt {
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

/// Natural log of |i| with the mantissa truncated to `mantissa_bits` before
/// conversion, so a rerun at doubled mantissa width exercises a genuinely finer
/// read of the same exact integer.
fn ln_abs_bigint(i: &BigInt, mantissa_bits: u64) -> f64 {
    debug_assert!(!i.is_zero());
    let bits = i.bits();
    let drop = bits.saturating_sub(mantissa_bits);
    let kept: BigInt = i.abs() >> drop;
    let lead_drop = kept.bits().saturating_sub(53);
    let head: BigInt = &kept >> lead_drop;
    let hi = head.to_f64().expect("53-bit integer");
    let rest: BigInt = &kept - (&head << lead_drop);
    let ratio = rest.to_f64().unwrap_or(0.0) / (hi * (lead_drop as f64).exp2());
    hi.ln() + (lead_drop + drop) as f64 * std::f64::consts::LN_2 + ratio.ln_1p()
}

fn ln_abs_rational(r: &BigRational, mantissa_bits: u64) -> f64 {
    ln_abs_bigint(r.numer(), mantissa_bits) - ln_abs_bigint(r.denom(), mantissa_bits)
}

/// Converts sign(rat) * |rat| * e^{extra_log} to f64, cross-checking the lossy
/// log-assembly stage at two mantissa widths.
fn assemble(rat: &BigRational, extra_log: f64) -> Result<f64, LimitsError> {
    if rat.is_zero() {
        return Ok(0.0);
    }
    let sign = if rat.is_negative() { -1.0 } else { 1.0 };
    let coarse = sign * (ln_abs_rational(rat, 53) + extra_log).exp();
    let fine = sign * (ln_abs_rational(rat, 106) + extra_log).exp();
    if ((coarse - fine) / fine.abs().max(f64::MIN_POSITIVE)).abs() > ASSEMBLY_TOL {
        return Err(LimitsError::NonConvergent { coarse, fine });
    }
    Ok(fine)
}

/// Exact Taylor coefficient [w^k] (1 - w)^m e^{t w}, valid for either sign of m.
fn series_coeff(k_arg: i64, m_arg: i64, t: &BigRational) -> BigRational {
    if k_arg < 0 {
        return BigRational::zero();
    }
    let k = k_arg as u64;
    if t.is_zero() {
        return if m_arg >= 0 {
            if k <= m_arg as u64 {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                BigRational::from_integer(BigInt::from(sign) * big_binomial(m_arg as u64, k))
            } else {
                BigRational::zero()
            }
        } else {
            BigRational::from_integer(big_binomial((k_arg - m_arg - 1) as u64, k))
        };
    }
    let mut inv_fact = BigRational::from_integer(big_factorial(k)).recip();
    let mut tp = rat_ipow(t, k_arg);
    let mut sum = BigRational::zero();
    if m_arg >= 0 {
        let m = m_arg as u64;
        let mut binom = BigInt::one();
        let jmax = m.min(k);
        for j in 0..=jmax {
            let term = &tp * &inv_fact * BigRational::from_integer(binom.clone());
            if j % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            if j == jmax {
                break;
            }
            binom = binom * BigInt::from(m - j) / BigInt::from(j + 1);
            tp = &tp / t;
            inv_fact = &inv_fact * BigRational::from_integer(BigInt::from(k - j));
        }
    } else {
        let mut binom = BigInt::one();
        for j in 0..=k {
            sum += &tp * &inv_fact * BigRational::from_integer(binom.clone());
            if j == k {
                break;
            }
            binom = binom * BigInt::from(j as i64 - m_arg) / BigInt::from(j + 1);
            tp = &tp / t;
            inv_fact = &inv_fact * BigRational::from_integer(BigInt::from(k - j));
        }
    }
    sum
}

/// Factorially accurate ln(n!): direct summation up to 64, Stirling series with
/// three correction terms beyond.
fn ln_factorial(n: u64) -> f64 {
    if n <= 64 {
        (2..=n).map(|i| (i as f64).ln()).sum()
    } else {
        let x = n as f64;
        let corr = 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3)) + 1.0 / (1260.0 * x.powi(5));
        (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + corr
    }
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Weight that a sum of `n` independent geometric(λ) jumps, each at least one,
/// totals exactly `dx`. Zero when `dx < n`.
pub fn kernel_q(n: i64, dx: i64, lambda: f64) -> f64 {
    assert!(n >= 1, "jump count {n} must be positive");
    assert!(
        lambda > 0.0 && lambda < 1.0,
        "density {lambda} outside (0, 1)"
    );
    if dx < n {
        return 0.0;
    }
    let ln_val = (dx - n) as f64 * (1.0 - lambda).ln()
        + n as f64 * lambda.ln()
        + ln_binomial((dx - 1) as u64, (n - 1) as u64);
    ln_val.exp()
}

/// Backward heat-like kernel: the [w^{n+x-y}] coefficient of (1-w)^n e^{tw}
/// dressed with (1-λ)^{n+x-y} λ^{-n} e^{t(λ-1)}.
pub fn kernel_s(t: f64, n: i64, y: i64, x: i64, lambda: f64) -> Result<f64, LimitsError> {
    check_time(t)?;
    check_lambda(lambda)?;
    if n < 1 {
        return Err(LimitsError::BadParameter(format!("kernel depth {n} < 1")));
    }
    let k = n + x - y;
    if k < 0 {
        return Ok(0.0);
    }
    let lam = rational(lambda);
    let lam_c = BigRational::one() - &lam;
    let rat = rat_ipow(&lam_c, k) * rat_ipow(&lam, -n) * series_coeff(k, n, &rational(t));
    assemble(&rat, t * (lambda - 1.0))
}

/// Rational part of `kernel_sbar`; the full value is this times e^{-tλ}.
fn sbar_rational(
    t: &BigRational,
    lam: &BigRational,
    lam_c: &BigRational,
    n: i64,
    y: i64,
    x: i64,
) -> BigRational {
    if n < 1 {
        return BigRational::zero();
    }
    rat_ipow(lam_c, y - x - n) * rat_ipow(lam, n) * series_coeff(n - 1, x - y + n - 1, t)
}

/// Forward heat-like kernel: the [w^{n-1}] coefficient of (1-w)^{x-y+n-1} e^{tw}
/// dressed with (1-λ)^{y-x-n} λ^n e^{-tλ}.
pub fn kernel_sbar(t: f64, n: i64, y: i64, x: i64, lambda: f64) -> Result<f64, LimitsError> {
    check_time(t)?;
    check_lambda(lambda)?;
    if n < 1 {
        return Err(LimitsError::BadParameter(format!("kernel depth {n} < 1")));
    }
    let lam = rational(lambda);
    let lam_c = BigRational::one() - &lam;
    let rat = sbar_rational(&rational(t), &lam, &lam_c, n, y, x);
    assemble(&rat, -t * lambda)
}

/// `kernel_sbar` averaged over a geometric(λ) down-step walk started at `y` and
/// stopped the first time it pokes above the staircase `x0`, with walks that
/// survive all `n` steps contributing nothing.
///
/// `x0[k-1]` is the staircase height compared against the walk at step k; it
/// must be strictly decreasing and hold at least `n` entries. The filtering
/// recursion runs in exact rational arithmetic and discards mass at or below
/// `x0[n-1]` outright: the walk only moves down and the staircase only moves
/// down along the comparison index, so that mass can never exit and its
/// discarded contribution is exactly zero rather than a truncation error.
pub fn kernel_sbar_epi(
    t: f64,
    n: i64,
    y: i64,
    x: i64,
    lambda: f64,
    x0: &[i64],
) -> Result<f64, LimitsError> {
    check_time(t)?;
    check_lambda(lambda)?;
    if n < 1 {
        return Err(LimitsError::BadParameter(format!("kernel depth {n} < 1")));
    }
    if (x0.len() as i64) < n {
        return Err(LimitsError::BadParameter(format!(
            "staircase has {} entries, kernel depth is {n}",
            x0.len()
        )));
    }
    if x0.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LimitsError::BadParameter(
            "staircase not strictly decreasing".into(),
        ));
    }
    if y > x0[0] {
        return kernel_sbar(t, n, y, x, lambda);
    }
    if n == 1 {
        return Ok(0.0);
    }
    let thr = x0[(n - 1) as usize];
    if y <= thr {
        return Ok(0.0);
    }
    let lam = rational(lambda);
    let lam_c = BigRational::one() - &lam;
    let t_rat = rational(t);
    let base = thr + 1;
    let width = (x0[0] - thr) as usize;
    let idx = |b: i64| (b - base) as usize;
    let mut nu = vec![BigRational::zero(); width];
    nu[idx(y)] = BigRational::one();
    let mut hi = y;
    let mut total = BigRational::zero();
    for m in 0..(n - 1) {
        let mut stepped = vec![BigRational::zero(); width];
        let mut acc = BigRational::zero();
        for b in (base..hi).rev() {
            acc = &lam * &nu[idx(b + 1)] + &lam_c * &acc;
            stepped[idx(b)] = acc.clone();
        }
        #[cfg(debug_assertions)]
        {
            // Mass dropped below the staircase floor has the closed form
            // ν(thr+1) + (1-λ)/λ · (ν*p)(thr+1); the step must conserve mass.
            let before: BigRational = nu.iter().sum();
            let after: BigRational = stepped.iter().sum();
            let dropped = &nu[0] + &lam_c / &lam * &stepped[0];
            debug_assert_eq!(after + dropped, before);
        }
        let bound = x0[(m + 1) as usize];
        for b in (bound + 1)..hi {
            let mass = std::mem::take(&mut stepped[idx(b)]);
            if !mass.is_zero() {
                total += mass * sbar_rational(&t_rat, &lam, &lam_c, n - (m + 1), b, x);
            }
        }
        hi = hi.min(bound + 1) - 1;
        if hi < base {
            break;
        }
        nu = stepped;
    }
    assemble(&total, -t * lambda)
}

/// Scaling frame tying a time `t` and density λ to the dimensionless kernel
/// coordinates. `prefactor` multiplies a raw kernel entry to put it on the
/// scale of the limit forms.
#[derive(Debug, Clone, Copy)]
pub struct KernelScaling {
    pub t: f64,
    pub lambda: f64,
    pub chi: f64,
    pub prefactor: f64,
}

/// Integer kernel arguments for one scaled coordinate triple, together with
/// the effective coordinates the rounded integers correspond to and the
/// rounding shifts that were absorbed.
#[derive(Debug, Clone, Copy)]
pub struct ScaledPoint {
    pub n: i64,
    pub x: i64,
    pub y: i64,
    pub xi: f64,
    pub u: f64,
    pub v: f64,
    pub rounding: (f64, f64, f64),
}

impl KernelScaling {
    pub fn new(t: f64, lambda: f64) -> Result<Self, LimitsError> {
        check_lambda(lambda)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(LimitsError::OutOfDomain {
                name: "scaling time",
                value: t,
            });
        }
        let chi = lambda * (1.0 - lambda);
        let prefactor = 2.0_f64.cbrt() * chi.powf(2.0 / 3.0) * t.cbrt() / lambda;
        Ok(KernelScaling {
            t,
            lambda,
            chi,
            prefactor,
        })
    }

    /// Maps (ξ, u, v) to integer arguments (n, x, y), back-solving each
    /// effective coordinate in turn so the recorded (ξ, u, v) are exactly the
    /// ones the integers realize.
    pub fn point(&self, xi: f64, u: f64, v: f64) -> Result<ScaledPoint, LimitsError> {
        let lam = self.lambda;
        let c53 = 2.0_f64.powf(5.0 / 3.0) * self.chi.cbrt();
        let c13 = 2.0_f64.cbrt() * self.chi.powf(2.0 / 3.0) / lam;
        let t23 = self.t.powf(2.0 / 3.0);
        let t13 = self.t.cbrt();

        let n_real = lam * lam * self.t + lam * c53 * xi * t23;
        let n = n_real.round();
        if n < 1.0 {
            return Err(LimitsError::BadParameter(format!(
                "scaled depth rounds to {n}, below 1"
            )));
        }
        let xi_eff = (n - lam * lam * self.t) / (lam * c53 * t23);

        let x_real = (1.0 - 2.0 * lam) * self.t - c53 * xi_eff * t23 - c13 * u * t13;
        let x = x_real.round();
        let u_eff = ((1.0 - 2.0 * lam) * self.t - c53 * xi_eff * t23 - x) / (c13 * t13);

        let y_real = c13 * v * t13;
        let y = y_real.round();
        let v_eff = y / (c13 * t13);

        Ok(ScaledPoint {
            n: n as i64,
            x: x as i64,
            y: y as i64,
            xi: xi_eff,
            u: u_eff,
            v: v_eff,
            rounding: (n - n_real, x - x_real, y - y_real),
        })
    }
}

/// Gaussian limit of the rescaled `kernel_q` between coordinates (ξᵢ, uᵢ) and
/// (ξⱼ, uⱼ); zero unless ξⱼ > ξᵢ.
pub fn kernel_q_limit(xi_i: f64, u_i: f64, xi_j: f64, u_j: f64) -> f64 {
    let dxi = xi_j - xi_i;
    if dxi <= 0.0 {
        return 0.0;
    }
    let du = u_j - u_i;
    (-du * du / (4.0 * dxi)).exp() / (4.0 * std::f64::consts::PI * dxi).sqrt()
}

/// Airy limit of the rescaled `kernel_s`.
pub fn kernel_s_limit(xi: f64, u: f64, v: f64) -> f64 {
    let c13 = 2.0_f64.cbrt();
    let arg = 2.0 * c13 * xi * xi + c13 * (u + v);
    c13 * airy_ai(arg) * (-8.0 / 3.0 * xi.powi(3) - 2.0 * xi * (u + v)).exp()
}

/// Airy limit of the rescaled `kernel_sbar`.
pub fn kernel_sbar_limit(xi: f64, u: f64, v: f64) -> f64 {
    let c13 = 2.0_f64.cbrt();
    let arg = 2.0 * c13 * xi * xi + c13 * (u + v);
    c13 * airy_ai(arg) * (8.0 / 3.0 * xi.powi(3) + 2.0 * xi * (u + v)).exp()
}

/// Airy limit of the rescaled `kernel_sbar_epi` over a flat staircase: the
/// reflection of v through the origin switches off once the walk starts above
/// the staircase shadow.
pub fn kernel_sbar_epi_limit(xi: f64, u: f64, v: f64) -> f64 {
    if v >= 0.0 {
        kernel_sbar_limit(xi, u, v)
    } else {
        kernel_sbar_limit(xi, u, -v)
    }
}
