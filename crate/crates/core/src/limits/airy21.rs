//! Crossover kernel between the curved and flat edge regimes, and the
//! one-parameter family of one-point distributions it generates.
//!
//! The kernel acts on pairs (ξ, u). Internally everything is evaluated in
//! rescaled coordinates ξ̃ = 2^{2/3} ξ, ũ = 2^{1/3} u, with the stabilizing
//! shift ũ += min{0, ξ̃}² applied on entry so the Airy arguments stay in the
//! range where the conjugated entries are order one.
//!
//! Each entry is a Gaussian part (present when ξ advances) plus a conjugation
//! factor R̃ times two Airy-product integrals. The tail integral over the
//! negative half line exists in two algebraically equal forms: the direct
//! substitution, stable when ξ̃_i + ξ̃_j < 0, and a rewriting through the
//! full-line Airy product identity, stable in the opposite regime. The
//! unstable form in each regime loses digits like exp((2/3)|ξ̃|³), which is
//! why the branch is picked by the sign and why tests pin both forms against
//! each other where both are healthy.
//!
//! Integrals run over unit panels with a fixed Gauss-Legendre rule per panel,
//! stopping once a superexponential bound on the remaining tail drops below
//! the noise floor of the conjugated assembly.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::airy::airy_ai;
use super::quadrature::QuadratureRule;
use super::{parallel_map_indexed, LimitsError};

/// Gauss-Legendre order used inside each unit integration panel.
const PANEL_ORDER: usize = 24;

/// Nyström order of the one-point determinant.
const DET_ORDER: usize = 40;

/// Decay scale of the exponential node map, matching the Fredholm module.
const MAP_SCALE: f64 = 2.0;

/// Panels stop once the log-magnitude bound of the remaining integrand falls
/// below this; the conjugation factor never exceeds e^{24} on the supported
/// window, leaving 40 orders of headroom.
const LOG_CUTOFF: f64 = -120.0;

const MAX_PANELS: usize = 4000;

/// log of sup |Ai| over the real line, per Airy factor in a bound.
const AIRY_SUP_LOG: f64 = -0.62;

/// Receding Airy arguments below this contribute less than e^{-94} after
/// conjugation and are skipped rather than pushed past the Airy domain.
const AIRY_FLOOR: f64 = -49.5;

/// Supported one-point parameter window.
const XI_BOUND: f64 = 6.0;
const S_FLOOR: f64 = -12.0;

#[derive(Clone, Copy, PartialEq)]
enum TailForm {
    Auto,
    Rewritten,
    Direct,
}

fn panel_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_legendre(PANEL_ORDER).expect("static order"))
}

/// Integrates f over [0, ∞) panel by panel. `log_bound(w0)` must bound
/// ln of the integrand's magnitude on the panel [w0, w0 + 1].
fn panel_integral<F, B>(f: F, log_bound: B) -> f64
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let rule = panel_rule();
    let mut sum = 0.0;
    for k in 0..MAX_PANELS {
        let w0 = k as f64;
        if log_bound(w0) < LOG_CUTOFF {
            break;
        }
        let (nodes, weights) = rule.on_interval(w0, w0 + 1.0);
        for (x, w) in nodes.iter().zip(&weights) {
            sum += w * f(*x);
        }
    }
    sum
}

/// Superexponential decay cap of an Airy factor whose smallest argument on the
/// panel is `arg`.
fn airy_cap(arg: f64) -> f64 {
    if arg <= 0.0 {
        0.0
    } else {
        -(2.0 / 3.0) * arg.powf(1.5)
    }
}

fn airy21_entry(xi_i: f64, u_i: f64, xi_j: f64, u_j: f64, form: TailForm) -> f64 {
    let c23 = 2.0_f64.powf(2.0 / 3.0);
    let c13 = 2.0_f64.cbrt();
    let xt_i = c23 * xi_i;
    let xt_j = c23 * xi_j;
    let ut_i = c13 * u_i + xt_i.min(0.0).powi(2);
    let ut_j = c13 * u_j + xt_j.min(0.0).powi(2);
    let a_i = xt_i * xt_i + ut_i;
    let a_j = xt_j * xt_j + ut_j;
    assert!(
        a_i >= -50.0 && a_j >= -50.0,
        "kernel argument pushes the Airy evaluation below -50; \
         shifted arguments were {a_i} and {a_j}"
    );

    let mut value = 0.0;
    if xi_j > xi_i {
        let dxi = xi_j - xi_i;
        let du = u_j - u_i;
        value -= (-du * du / (4.0 * dxi)).exp() / (4.0 * std::f64::consts::PI * dxi).sqrt();
    }

    let ln_r = (2.0 / 3.0) * (xt_j.powi(3) - xt_i.powi(3)) + xt_j * ut_j - xt_i * ut_i;
    let d = xt_j - xt_i;
    let sigma = xt_i + xt_j;

    let i1 = panel_integral(
        |w| (d * w).exp() * airy_ai(a_i + w) * airy_ai(a_j + w),
        |w0| {
            let drift = if d > 0.0 { d * (w0 + 1.0) } else { d * w0 };
            drift + airy_cap(a_i + w0) + airy_cap(a_j + w0) + 2.0 * AIRY_SUP_LOG
        },
    );

    let rewritten = match form {
        TailForm::Auto => sigma >= 0.0,
        TailForm::Rewritten => true,
        TailForm::Direct => false,
    };
    if rewritten {
        // Tail integral over the negative half line, rewritten through the
        // full-line Airy product identity: I2 = I_extra - ∫_0^∞ e^{-wσ}
        // Ai(a_i + w) Ai(a_j - w) dw. The full-line part collapses to a single
        // Airy value and is folded in with its conjugation factor analytically.
        let j = panel_integral(
            |w| {
                let down = a_j - w;
                if down < AIRY_FLOOR {
                    0.0
                } else {
                    (-sigma * w).exp() * airy_ai(a_i + w) * airy_ai(down)
                }
            },
            |w0| {
                let drift = if sigma < 0.0 {
                    -sigma * (w0 + 1.0)
                } else {
                    -sigma * w0
                };
                drift + airy_cap(a_i + w0) + airy_cap(a_j - w0 - 1.0) + 2.0 * AIRY_SUP_LOG
            },
        );
        let us_i = ut_i / c13;
        let us_j = ut_j / c13;
        let ddxi = xi_j - xi_i;
        value += airy_ai(ddxi * ddxi + us_i + us_j)
            * ((2.0 / 3.0) * ddxi.powi(3) + ddxi * (us_i + us_j)).exp();
        value += assemble_tail(i1 - j, ln_r);
    } else {
        let j = panel_integral(
            |w| {
                let down = a_i - w;
                if down < AIRY_FLOOR {
                    0.0
                } else {
                    (sigma * w).exp() * airy_ai(down) * airy_ai(a_j + w)
                }
            },
            |w0| {
                let drift = if sigma > 0.0 {
                    sigma * (w0 + 1.0)
                } else {
                    sigma * w0
                };
                drift + airy_cap(a_i - w0 - 1.0) + airy_cap(a_j + w0) + 2.0 * AIRY_SUP_LOG
            },
        );
        value += assemble_tail(i1 + j, ln_r);
    }
    value
}

/// sign(i) · 2^{1/3} e^{ln_r} |i| without intermediate overflow.
fn assemble_tail(i: f64, ln_r: f64) -> f64 {
    if i == 0.0 {
        return 0.0;
    }
    i.signum() * (i.abs().ln() + ln_r + std::f64::consts::LN_2 / 3.0).exp()
}

/// Crossover kernel entry between coordinates (ξᵢ, uᵢ) and (ξⱼ, uⱼ), in the
/// plain (untilded) normalization whose equal-ξ large-ξ limit is the GOE edge
/// kernel Ai(uᵢ + uⱼ).
pub fn airy21_kernel(xi_i: f64, u_i: f64, xi_j: f64, u_j: f64) -> f64 {
    airy21_entry(xi_i, u_i, xi_j, u_j, TailForm::Auto)
}

/// The same entry with the tail integral forced through each of its two
/// algebraically equal forms, returned as (rewritten, direct). Near σ = 0 both
/// are stable and must agree to full precision; away from it the off-branch
/// form sheds digits, which is the cross-check this exists for.
pub fn airy21_kernel_forms(xi_i: f64, u_i: f64, xi_j: f64, u_j: f64) -> (f64, f64) {
    (
        airy21_entry(xi_i, u_i, xi_j, u_j, TailForm::Rewritten),
        airy21_entry(xi_i, u_i, xi_j, u_j, TailForm::Direct),
    )
}

fn onepoint_with_form(xi: f64, s: f64, form: TailForm) -> Result<f64, LimitsError> {
    if xi.abs() > XI_BOUND {
        return Err(LimitsError::OutOfDomain {
            name: "crossover xi",
            value: xi,
        });
    }
    if s < S_FLOOR || !s.is_finite() {
        return Err(LimitsError::OutOfDomain {
            name: "crossover s",
            value: s,
        });
    }
    let rule = QuadratureRule::gauss_legendre(DET_ORDER)?;
    let (nodes, weights) = rule.semi_infinite(s, MAP_SCALE);
    let n = nodes.len();
    let sqw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let rows = parallel_map_indexed(n, |i| {
        (0..n)
            .map(|j| {
                let base = if i == j { 1.0 } else { 0.0 };
                base - sqw[i] * airy21_entry(xi, nodes[i], xi, nodes[j], form) * sqw[j]
            })
            .collect::<Vec<f64>>()
    });
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(m.lu().determinant().clamp(0.0, 1.0))
}

/// Probability that the crossover field at parameter ξ stays below s: the
/// Fredholm determinant of the one-point kernel on (s, ∞). Interpolates
/// between certainty (ξ → -∞) and the square-root-rescaled GOE edge law
/// (ξ → +∞).
pub fn airy21_onepoint(xi: f64, s: f64) -> Result<f64, LimitsError> {
    onepoint_with_form(xi, s, TailForm::Auto)
}
