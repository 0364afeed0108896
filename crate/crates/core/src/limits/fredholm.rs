//! Fredholm determinants det(I - K) on a half line (s, ∞) by Nyström
//! discretization.
//!
//! A Gauss-Legendre rule is pushed onto the half line through the exponential
//! map of [`QuadratureRule::semi_infinite`], the kernel is sampled on the
//! mapped nodes, and the determinant of I - D(√w) K D(√w) is computed by LU
//! factorization. The symmetrized weighting keeps the matrix well conditioned
//! even when the kernel itself is not symmetric.

use nalgebra::DMatrix;

use super::quadrature::QuadratureRule;
use super::LimitsError;

/// Decay scale of the exponential node map. Kernels in this crate decay at
/// least like exp(-x) along the diagonal, so a scale of 2 places roughly half
/// the nodes in the first two units past s and the rest along the tail.
const EXP_MAP_SCALE: f64 = 2.0;

/// Agreement demanded between an order-n and an order-2n evaluation before
/// the checked variant accepts the result.
const CROSS_CHECK_TOL: f64 = 1.0e-6;

fn nystrom_matrix<F>(kernel: &F, s: f64, rule: &QuadratureRule) -> DMatrix<f64>
where
    F: Fn(f64, f64) -> f64 + ?Sized,
{
    let (nodes, weights) = rule.semi_infinite(s, EXP_MAP_SCALE);
    let n = nodes.len();
    let sqw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base - sqw[i] * kernel(nodes[i], nodes[j]) * sqw[j]
    })
}

/// det(I - K) restricted to (s, ∞) under the given base rule.
pub fn fredholm_det<F>(kernel: &F, s: f64, rule: &QuadratureRule) -> f64
where
    F: Fn(f64, f64) -> f64 + ?Sized,
{
    nystrom_matrix(kernel, s, rule).lu().determinant()
}

/// Evaluates the determinant at `order` and at `2 * order` and returns the
/// finer value, refusing when the two disagree by more than the cross-check
/// tolerance.
pub fn fredholm_det_checked<F>(kernel: &F, s: f64, order: usize) -> Result<f64, LimitsError>
where
    F: Fn(f64, f64) -> f64 + ?Sized,
{
    let coarse_rule = QuadratureRule::gauss_legendre(order)?;
    let fine_rule = QuadratureRule::gauss_legendre(2 * order)?;
    let coarse = fredholm_det(kernel, s, &coarse_rule);
    let fine = fredholm_det(kernel, s, &fine_rule);
    if (coarse - fine).abs() > CROSS_CHECK_TOL {
        return Err(LimitsError::NonConvergent { coarse, fine });
    }
    Ok(fine)
}

/// Diagonal value R(x, x) of the resolvent R = (I - K)⁻¹ K on (s, ∞).
///
/// The Nyström system (I - K W) z = K(·, x) is solved on the mapped nodes and
/// the resolvent is reconstructed off the grid from R = K + K W R.
pub fn resolvent_diag<F>(kernel: &F, s: f64, rule: &QuadratureRule, x: f64) -> f64
where
    F: Fn(f64, f64) -> f64 + ?Sized,
{
    let (nodes, weights) = rule.semi_infinite(s, EXP_MAP_SCALE);
    let n = nodes.len();
    let system = DMatrix::from_fn(n, n, |i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base - kernel(nodes[i], nodes[j]) * weights[j]
    });
    let rhs = nalgebra::DVector::from_fn(n, |i, _| kernel(nodes[i], x));
    let z = system
        .lu()
        .solve(&rhs)
        .expect("resolvent system is singular: kernel has an eigenvalue at 1");
    let mut value = kernel(x, x);
    for j in 0..n {
        value += weights[j] * kernel(x, nodes[j]) * z[j];
    }
    value
}

#[cfg(test)]
mod tests {
    use super::super::airy::airy_ai;
    use super::super::airy::airy_ai_prime;
    use super::*;

    fn airy_kernel(x: f64, y: f64) -> f64 {
        if (x - y).abs() < 1.0e-6 {
            let m = 0.5 * (x + y);
            let (a, ap) = (airy_ai(m), airy_ai_prime(m));
            ap * ap - m * a * a
        } else {
            (airy_ai(x) * airy_ai_prime(y) - airy_ai(y) * airy_ai_prime(x)) / (x - y)
        }
    }

    #[test]
    fn zero_kernel_gives_one() {
        let rule = QuadratureRule::gauss_legendre(20).unwrap();
        let det = fredholm_det(&|_x: f64, _y: f64| 0.0, -3.0, &rule);
        assert_eq!(det, 1.0);
    }

    #[test]
    fn rank_one_kernel_matches_closed_form() {
        // K(x, y) = e^{-x} e^{-y} has det(I - K) = 1 - ∫_s^∞ e^{-2x} dx.
        let rule = QuadratureRule::gauss_legendre(40).unwrap();
        for &s in &[0.0_f64, 0.5, 1.3, 2.0] {
            let det = fredholm_det(&|x: f64, y: f64| (-x - y).exp(), s, &rule);
            let exact = 1.0 - 0.5 * (-2.0 * s).exp();
            assert!(
                (det - exact).abs() < 1.0e-10,
                "s={s}: det={det}, exact={exact}"
            );
        }
    }

    #[test]
    fn airy_determinant_at_origin() {
        let rule = QuadratureRule::gauss_legendre(60).unwrap();
        let det = fredholm_det(&airy_kernel, 0.0, &rule);
        assert!(
            (det - 0.9693728283552628).abs() < 1.0e-9,
            "det(I - K_Ai) on (0, ∞) = {det}"
        );
    }

    #[test]
    fn airy_determinant_self_converges() {
        let coarse_rule = QuadratureRule::gauss_legendre(30).unwrap();
        let fine_rule = QuadratureRule::gauss_legendre(60).unwrap();
        for &s in &[-2.0_f64, 0.0, 1.0] {
            let coarse = fredholm_det(&airy_kernel, s, &coarse_rule);
            let fine = fredholm_det(&airy_kernel, s, &fine_rule);
            assert!(
                (coarse - fine).abs() < 1.0e-8,
                "s={s}: order 30 gave {coarse}, order 60 gave {fine}"
            );
        }
    }

    #[test]
    fn checked_variant_accepts_smooth_kernel() {
        let det = fredholm_det_checked(&airy_kernel, -1.0, 30).unwrap();
        let rule = QuadratureRule::gauss_legendre(60).unwrap();
        assert_eq!(det, fredholm_det(&airy_kernel, -1.0, &rule));
    }

    #[test]
    fn checked_variant_rejects_oscillatory_kernel() {
        // Rank-one oscillation at a frequency the order-20 rule cannot resolve.
        let wild = |x: f64, y: f64| (37.0 * x).sin() * (37.0 * y).sin() * (-0.1 * (x + y)).exp();
        let err = fredholm_det_checked(&wild, 0.0, 20).unwrap_err();
        match err {
            LimitsError::NonConvergent { coarse, fine } => {
                assert!((coarse - fine).abs() > 1.0e-6);
            }
            other => panic!("expected NonConvergent, got {other:?}"),
        }
    }

    #[test]
    fn resolvent_diag_matches_rank_one_closed_form() {
        // For K = φ⊗φ the resolvent is φ⊗φ / (1 - ∫φ²), so on the diagonal
        // R(x, x) = e^{-2x} / (1 - e^{-2s}/2).
        let rule = QuadratureRule::gauss_legendre(40).unwrap();
        let s = 0.4;
        for &x in &[0.5_f64, 1.0, 2.5] {
            let r = resolvent_diag(&|a: f64, b: f64| (-a - b).exp(), s, &rule, x);
            let exact = (-2.0 * x).exp() / (1.0 - 0.5 * (-2.0 * s).exp());
            assert!((r - exact).abs() < 1.0e-10, "x={x}: r={r}, exact={exact}");
        }
    }
}
