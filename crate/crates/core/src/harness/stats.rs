//! Statistics kit for the harness: empirical CDF comparisons against tabulated
//! laws, moment estimates with normal-approximation confidence intervals, and a
//! least-squares slope for the variance growth exponent.

use crate::limits::DistributionTable;

/// Seed of trajectory `index` within the batch rooted at `base`. Streams derived
/// this way are decorrelated because every site clock hashes (seed, site) again.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

/// Right-continuous empirical CDF of a sorted sample.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// Kolmogorov-Smirnov distance between a sample and a tabulated CDF, taken as the
/// supremum over the table grid (linear interpolation happens only off-grid, so on
/// the grid the table values are exact).
pub fn ks_distance_to_table(samples: &[f64], table: &DistributionTable) -> f64 {
    assert!(!samples.is_empty(), "KS distance of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sup = 0.0_f64;
    for (&x, &f) in table.s.iter().zip(&table.cdf) {
        sup = sup.max((empirical_cdf(&sorted, x) - f).abs());
    }
    sup
}

/// Sample mean with a 95% normal half-width.
pub fn mean_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    assert!(n >= 2, "mean CI needs at least two samples");
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

/// Unbiased sample variance with a 95% half-width from the asymptotic normal law
/// of the second moment. The plug-in dispersion uses the biased central moments,
/// where m4 >= m2^2 always holds, so the width is well defined for any sample.
pub fn variance_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    assert!(n >= 2, "variance CI needs at least two samples");
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let m2 = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let m4 = samples.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n as f64;
    let se2 = ((m4 - m2 * m2).max(0.0) / n as f64).sqrt();
    (var, 1.96 * se2)
}

/// Binomial proportion with a 95% normal half-width.
pub fn fraction_ci(successes: usize, n: usize) -> (f64, f64) {
    assert!(n > 0, "fraction of an empty sample");
    let p = successes as f64 / n as f64;
    (p, 1.96 * (p * (1.0 - p) / n as f64).sqrt())
}

pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "median of an empty sample");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Pearson correlation coefficient of two equally long samples.
pub fn pearson_corr(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "correlation of unequal samples");
    let n = a.len();
    assert!(n >= 2, "correlation needs at least two samples");
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

/// Ordinary least squares slope of y against x, with its standard error from the
/// residuals. Exact fits report a zero standard error.
pub fn slope_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len(), "slope fit on unequal samples");
    let n = x.len();
    assert!(n >= 2, "slope fit needs at least two points");
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    assert!(sxx > 0.0, "slope fit needs at least two distinct x values");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if n == 2 {
        return (slope, 0.0);
    }
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - intercept - slope * a).powi(2))
        .sum();
    (slope, (ss_res / (n - 2) as f64 / sxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::uniform_grid;

    #[test]
    fn empirical_cdf_is_right_continuous() {
        let s = [1.0, 2.0, 2.0, 5.0];
        assert_eq!(empirical_cdf(&s, 0.0), 0.0);
        assert_eq!(empirical_cdf(&s, 1.0), 0.25);
        assert_eq!(empirical_cdf(&s, 2.0), 0.75);
        assert_eq!(empirical_cdf(&s, 4.9), 0.75);
        assert_eq!(empirical_cdf(&s, 5.0), 1.0);
    }

    #[test]
    fn ks_distance_matches_hand_computation() {
        let table = DistributionTable::build("uniform", "", 0, uniform_grid(0.0, 1.0, 0.25), |x| x);
        let ks = ks_distance_to_table(&[0.1, 0.6], &table);
        assert!((ks - 0.25).abs() < 1e-12);
    }

    #[test]
    fn moment_estimates_match_hand_values() {
        let s = [1.0, 2.0, 3.0, 4.0];
        let (m, hw) = mean_ci(&s);
        assert!((m - 2.5).abs() < 1e-12);
        let sd = (5.0_f64 / 3.0).sqrt();
        assert!((hw - 1.96 * sd / 2.0).abs() < 1e-12);
        let (v, vhw) = variance_ci(&s);
        assert!((v - 5.0 / 3.0).abs() < 1e-12);
        // m4 = 2.5625, m2^2 = 1.5625, so the width is 1.96 sqrt(1/4).
        assert!((vhw - 0.98).abs() < 1e-12);
    }

    #[test]
    fn fraction_ci_endpoints() {
        assert_eq!(fraction_ci(0, 10), (0.0, 0.0));
        let (p, hw) = fraction_ci(5, 10);
        assert_eq!(p, 0.5);
        assert!((hw - 1.96 * (0.025_f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn median_handles_both_parities() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn pearson_corr_detects_exact_dependence() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        let c = [-1.0, -2.0, -3.0, -4.0];
        assert!((pearson_corr(&a, &b) - 1.0).abs() < 1e-12);
        assert!((pearson_corr(&a, &c) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let (slope, se) = slope_fit(&x, &y);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn derived_seeds_wrap() {
        assert_eq!(derive_seed(u64::MAX, 2), 1);
        assert_eq!(derive_seed(7, 0), 7);
    }
}
