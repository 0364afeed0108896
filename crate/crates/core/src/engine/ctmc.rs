//! Exact law of the closed finite chain, for cross-validating the samplers.
//!
//! A window of `n` sites with `k` particles is a continuous-time Markov chain on the
//! `C(n, k)` occupancy patterns with that particle count (jumps conserve it, so the
//! full `2^n` space never enters). The distribution at time `t` is the initial row of
//! `exp(tL)` for the jump-rate generator `L`, computed by scaling and squaring with a
//! Taylor series on the scaled matrix.

use super::EngineError;
use crate::lattice::{Cell, Configuration};
use nalgebra::DMatrix;
use std::collections::HashMap;

/// Largest window the exact solver accepts; `C(12, 6) = 924` states is comfortable,
/// the next even size would quadruple the matrix work.
pub const MAX_CTMC_SITES: usize = 12;

/// Exact occupancy distribution of a closed chain at one time.
#[derive(Debug, Clone)]
pub struct CtmcDistribution {
    pub window: (i64, i64),
    pub particle_count: u32,
    /// Occupancy bitmasks (bit `i` is site `x_min + i`), ascending.
    pub states: Vec<u64>,
    /// Probabilities aligned with `states`; nonnegative, summing to one.
    pub probabilities: Vec<f64>,
}

impl CtmcDistribution {
    /// Bitmask of a two-class configuration.
    pub fn mask_of(cfg: &Configuration) -> u64 {
        let mut mask = 0u64;
        for (i, &c) in cfg.codes().iter().enumerate() {
            if c != 0 {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Probability of observing exactly `cfg`, or `None` if it lives outside this
    /// chain (different window or particle count, or second-class cells).
    pub fn probability_of(&self, cfg: &Configuration) -> Option<f64> {
        if cfg.window() != self.window || !cfg.is_two_class() {
            return None;
        }
        if cfg.count(Cell::First) as u32 != self.particle_count {
            return None;
        }
        let mask = Self::mask_of(cfg);
        let idx = self.states.binary_search(&mask).ok()?;
        Some(self.probabilities[idx])
    }
}

fn masks_with_popcount(n_sites: usize, k: u32) -> Vec<u64> {
    let mut masks: Vec<u64> = (0..1u64 << n_sites).filter(|m| m.count_ones() == k).collect();
    masks.sort_unstable();
    masks
}

/// Dense matrix exponential, scaling and squaring around a Taylor series. Terms are
/// added until their max-norm falls below `tol`; with the scaled norm at most one
/// half this converges geometrically and the partial sums stay bounded.
fn expm(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    let mut k = 1.0f64;
    loop {
        term = &term * &b / k;
        result += &term;
        if term.abs().max() < tol {
            break;
        }
        k += 1.0;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Exact distribution at time `t` of the closed chain started from `initial`.
/// `tol` bounds the truncation of the exponential series (1e-12 is typical).
pub fn exact_ctmc_distribution(
    initial: &Configuration,
    t: f64,
    tol: f64,
) -> Result<CtmcDistribution, EngineError> {
    if !initial.is_two_class() {
        return Err(EngineError::NotTwoClass);
    }
    let n_sites = initial.codes().len();
    if n_sites > MAX_CTMC_SITES {
        return Err(EngineError::TooManySites(n_sites, MAX_CTMC_SITES));
    }
    if !(t >= 0.0) || !(tol > 0.0) {
        return Err(EngineError::BadCtmcParameter);
    }
    let k = initial.count(Cell::First) as u32;
    let states = masks_with_popcount(n_sites, k);
    let index: HashMap<u64, usize> = states.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let s = states.len();

    let mut gen = DMatrix::<f64>::zeros(s, s);
    for (i, &mask) in states.iter().enumerate() {
        for bond in 0..n_sites - 1 {
            let here = 1u64 << bond;
            let right = 1u64 << (bond + 1);
            if mask & here != 0 && mask & right == 0 {
                let target = (mask & !here) | right;
                let j = index[&target];
                gen[(i, j)] += 1.0;
                gen[(i, i)] -= 1.0;
            }
        }
    }

    let transition = expm(&(gen * t), tol);
    let start = index[&CtmcDistribution::mask_of(initial)];
    let mut probabilities: Vec<f64> = (0..s).map(|j| transition[(start, j)]).collect();
    let mut total = 0.0;
    for p in &mut probabilities {
        if *p < 0.0 {
            debug_assert!(*p > -1e-9, "negative probability beyond tolerance");
            *p = 0.0;
        }
        total += *p;
    }
    debug_assert!((total - 1.0).abs() < 1e-9, "mass not conserved: {total}");
    Ok(CtmcDistribution {
        window: initial.window(),
        particle_count: k,
        states,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::streaming::StreamingSystem;
    use crate::lattice::build_initial;
    use crate::lattice::InitialCondition;
    use approx::assert_abs_diff_eq;

    fn explicit(window: (i64, i64), occupied: &[i64]) -> Configuration {
        build_initial(
            &InitialCondition::Explicit {
                occupied: occupied.to_vec(),
            },
            window,
        )
        .unwrap()
    }

    #[test]
    fn lone_particle_two_sites_is_exponential_decay() {
        let cfg = explicit((0, 1), &[0]);
        for &t in &[0.0, 0.3, 0.7, 2.0] {
            let d = exact_ctmc_distribution(&cfg, t, 1e-14).unwrap();
            assert_abs_diff_eq!(d.probability_of(&cfg).unwrap(), (-t).exp(), epsilon = 1e-12);
            let moved = explicit((0, 1), &[1]);
            assert_abs_diff_eq!(
                d.probability_of(&moved).unwrap(),
                1.0 - (-t).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn lone_particle_three_sites_matches_poisson_counts() {
        // One particle hops freely, so its position at time t is a Poisson count
        // truncated at the last site.
        let cfg = explicit((0, 2), &[0]);
        let t = 0.9;
        let d = exact_ctmc_distribution(&cfg, t, 1e-14).unwrap();
        let e = (-t).exp();
        assert_abs_diff_eq!(d.probability_of(&explicit((0, 2), &[0])).unwrap(), e, epsilon = 1e-12);
        assert_abs_diff_eq!(
            d.probability_of(&explicit((0, 2), &[1])).unwrap(),
            t * e,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            d.probability_of(&explicit((0, 2), &[2])).unwrap(),
            1.0 - e - t * e,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fully_packed_chain_is_frozen() {
        let cfg = explicit((0, 2), &[0, 1, 2]);
        let d = exact_ctmc_distribution(&cfg, 5.0, 1e-14).unwrap();
        assert_eq!(d.states.len(), 1);
        assert_abs_diff_eq!(d.probability_of(&cfg).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn distribution_is_a_probability_vector() {
        let cfg = explicit((-3, 4), &[-3, -1, 0, 2]);
        for &t in &[0.1, 1.0, 6.0] {
            let d = exact_ctmc_distribution(&cfg, t, 1e-13).unwrap();
            assert_eq!(d.states.len(), 70); // C(8, 4)
            assert!(d.probabilities.iter().all(|&p| p >= 0.0));
            let total: f64 = d.probabilities.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_time_is_a_point_mass() {
        let cfg = explicit((0, 5), &[1, 3]);
        let d = exact_ctmc_distribution(&cfg, 0.0, 1e-14).unwrap();
        assert_abs_diff_eq!(d.probability_of(&cfg).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut cfg = explicit((0, 3), &[0]);
        assert!(matches!(
            exact_ctmc_distribution(&cfg, -1.0, 1e-12),
            Err(EngineError::BadCtmcParameter)
        ));
        assert!(matches!(
            exact_ctmc_distribution(&cfg, 1.0, 0.0),
            Err(EngineError::BadCtmcParameter)
        ));
        cfg.set(2, Cell::Second).unwrap();
        assert!(matches!(
            exact_ctmc_distribution(&cfg, 1.0, 1e-12),
            Err(EngineError::NotTwoClass)
        ));
        let wide = explicit((0, 14), &[0]);
        assert!(matches!(
            exact_ctmc_distribution(&wide, 1.0, 1e-12),
            Err(EngineError::TooManySites(15, MAX_CTMC_SITES))
        ));
    }

    #[test]
    fn sampler_frequencies_match_exact_law() {
        // Small version of the cross-validation run by the acceptance suite: two
        // particles on four sites, compare empirical state frequencies against the
        // exact law within four binomial standard errors.
        let window = (0, 3);
        let cfg = explicit(window, &[0, 1]);
        let t = 0.7;
        let exact = exact_ctmc_distribution(&cfg, t, 1e-13).unwrap();
        let n_runs = 20_000u64;
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for seed in 0..n_runs {
            let mut sys = StreamingSystem::new(seed.wrapping_mul(0x9E37), vec![cfg.clone()], None).unwrap();
            sys.evolve_to(t).unwrap();
            let mask = CtmcDistribution::mask_of(&sys.member(0).configuration());
            *counts.entry(mask).or_insert(0) += 1;
        }
        for (i, &mask) in exact.states.iter().enumerate() {
            let p = exact.probabilities[i];
            let freq = *counts.get(&mask).unwrap_or(&0) as f64 / n_runs as f64;
            let se = (p * (1.0 - p) / n_runs as f64).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * se + 1e-9,
                "state {mask:04b}: freq {freq}, exact {p}, se {se}"
            );
        }
    }
}
