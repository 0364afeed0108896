//! Gauss-Legendre quadrature on the reference interval, plus the mappings the
//! determinant evaluators need: affine onto a finite interval and a logarithmic
//! substitution onto a semi-infinite one.

use super::LimitsError;

/// Largest supported rule; Newton refinement of the nodes is rock solid well past
/// this, but determinant matrices scale quadratically so bigger is never useful here.
pub const MAX_ORDER: usize = 512;

/// Nodes and weights of a Gauss-Legendre rule on [-1, 1].
///
/// A rule of order `n` integrates polynomials of degree up to `2n - 1` exactly.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

/// Evaluates the Legendre polynomial of degree `n` and its derivative at `x` by the
/// three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl QuadratureRule {
    /// Builds the Gauss-Legendre rule of the given order by Newton iteration from
    /// the Chebyshev-angle initial guesses.
    pub fn gauss_legendre(order: usize) -> Result<Self, LimitsError> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(LimitsError::QuadratureOrder(order));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1.0e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Ok(QuadratureRule {
            nodes,
            weights,
            order,
        })
    }

    /// Rule mapped affinely onto [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let xs = self.nodes.iter().map(|&r| mid + half * r).collect();
        let ws = self.weights.iter().map(|&w| w * half).collect();
        (xs, ws)
    }

    /// Rule mapped onto (s, ∞) through x = s - scale·ln((1-r)/2), which places half
    /// the nodes within s + scale·ln 2 of the endpoint and stretches the rest
    /// geometrically. `scale` tunes how far out the tail is probed.
    pub fn semi_infinite(&self, s: f64, scale: f64) -> (Vec<f64>, Vec<f64>) {
        let xs = self
            .nodes
            .iter()
            .map(|&r| s - scale * (0.5 * (1.0 - r)).ln())
            .collect();
        let ws = self
            .weights
            .iter()
            .zip(&self.nodes)
            .map(|(&w, &r)| w * scale / (1.0 - r))
            .collect();
        (xs, ws)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn integrate(xs: &[f64], ws: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        xs.iter().zip(ws).map(|(&x, &w)| w * f(x)).sum()
    }

    #[test]
    fn rejects_silly_orders() {
        assert!(QuadratureRule::gauss_legendre(1).is_err());
        assert!(QuadratureRule::gauss_legendre(0).is_err());
        assert!(QuadratureRule::gauss_legendre(MAX_ORDER + 1).is_err());
    }

    #[test]
    fn integrates_monomials_exactly_up_to_stated_degree() {
        for &order in &[2usize, 5, 20, 60] {
            let rule = QuadratureRule::gauss_legendre(order).unwrap();
            for k in 0..2 * order {
                let got = integrate(&rule.nodes, &rule.weights, |x| x.powi(k as i32));
                let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!(
                    (got - want).abs() < 1.0e-12,
                    "order {order} degree {k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let rule = QuadratureRule::gauss_legendre(31).unwrap();
        for w in rule.nodes.windows(2) {
            assert!(w[1] > w[0]);
        }
        for i in 0..rule.nodes.len() {
            let j = rule.nodes.len() - 1 - i;
            assert!((rule.nodes[i] + rule.nodes[j]).abs() < 1.0e-14);
            assert!((rule.weights[i] - rule.weights[j]).abs() < 1.0e-14);
        }
    }

    #[test]
    fn interval_map_integrates_sine() {
        let rule = QuadratureRule::gauss_legendre(20).unwrap();
        let (xs, ws) = rule.on_interval(0.0, std::f64::consts::PI);
        let got = integrate(&xs, &ws, f64::sin);
        assert!((got - 2.0).abs() < 1.0e-12);
    }

    #[test]
    fn semi_infinite_map_integrates_exponential_exactly() {
        // Under the log substitution the integrand of ∫_s^∞ e^{-x} dx at scale 1
        // becomes constant, so any order must reproduce e^{-s} to roundoff.
        let rule = QuadratureRule::gauss_legendre(8).unwrap();
        for &s in &[-1.0, 0.0, 0.7, 3.0] {
            let (xs, ws) = rule.semi_infinite(s, 1.0);
            let got = integrate(&xs, &ws, |x| (-x).exp());
            assert!((got - (-s).exp()).abs() < 1.0e-13 * (-s).exp());
        }
    }

    #[test]
    fn semi_infinite_map_converges_on_gaussian() {
        let rule = QuadratureRule::gauss_legendre(60).unwrap();
        let (xs, ws) = rule.semi_infinite(0.0, 2.0);
        let got = integrate(&xs, &ws, |x| (-0.5 * x * x).exp());
        let want = (std::f64::consts::PI / 2.0).sqrt();
        assert!((got - want).abs() < 1.0e-10);
    }

    proptest! {
        #[test]
        fn weights_positive_and_sum_to_two(order in 2usize..120) {
            let rule = QuadratureRule::gauss_legendre(order).unwrap();
            for &w in &rule.weights {
                prop_assert!(w > 0.0);
            }
            let total: f64 = rule.weights.iter().sum();
            prop_assert!((total - 2.0).abs() < 1.0e-12);
        }
    }
}
