//! Backwards paths through the space-time event field.
//!
//! Walking down from an anchor `(x, t)`, the path reacts to the recorded clock
//! events at the site just left of its current position. The pre-event occupancies
//! `(a, b)` of that bond decide everything locally:
//!
//! * `(1, 0)`: the event moved a particle and raised the height at the path's
//!   position; the path stays.
//! * `(0, 0)`: only the left neighbor sits one height level lower; move left.
//! * `(1, 1)`: only the right neighbor sits one lower; move right.
//! * `(0, 1)`: the path sits on a local maximum and both neighbors qualify; the
//!   variant picks a side.
//!
//! No height profile is ever consulted during construction: the two bits carry the
//! whole local geometry. Heights at past times, needed by the verification below,
//! come from counting executed events per bond on top of the initial profile.

use crate::clockwork::{ClockError, EventStream};
use crate::engine::{CoupledSystem, EngineError, EventLog};
use crate::lattice::{
    build_initial, HeightFunction, InitialCondition, LatticeError, ShockParameters,
};
use crate::tracker::ShockSetup;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeodesicsError {
    #[error("event log has no record for event {1} at site {0}; evolve further first")]
    IncompleteLog(i64, usize),
    #[error("anchor site {0} outside the height domain")]
    AnchorOutside(i64),
    #[error("path pushed against the window edge at site {0}")]
    PathLeftWindow(i64),
    #[error("slope must lie strictly inside (-1, 1), got {0}")]
    BadAlpha(f64),
    #[error("initial heights do not match the required profile at site {0}")]
    BadInitialProfile(i64),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Tracker(#[from] Box<crate::tracker::TrackerError>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathVariant {
    Rightmost,
    Leftmost,
}

/// A backwards path: piecewise-constant in time, recorded as breakpoints.
///
/// `breakpoints[0]` is the anchor `(t, x)`; a later entry `(s, p)` means the path
/// sits at `p` on the half-open span below `s`, down to the next breakpoint. The
/// list ends with a `(0, endpoint)` sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardsPath {
    pub anchor: (i64, f64),
    pub variant: PathVariant,
    pub breakpoints: Vec<(f64, i64)>,
}

impl BackwardsPath {
    /// Position at time `tau`; at a breakpoint time the upper segment wins, matching
    /// the closed-above convention of the construction.
    pub fn position_at(&self, tau: f64) -> i64 {
        let mut pos = self.breakpoints[0].1;
        for &(s, p) in &self.breakpoints[1..] {
            if tau < s {
                pos = p;
            } else {
                break;
            }
        }
        pos
    }

    pub fn endpoint(&self) -> i64 {
        self.breakpoints.last().unwrap().1
    }

    /// Largest deviation of the path from the straight line of slope `alpha`
    /// through the origin, over the whole time span. Piecewise constancy makes the
    /// supremum sit at a segment end.
    pub fn max_deviation_from_line(&self, alpha: f64) -> f64 {
        let mut sup: f64 = 0.0;
        let (mut prev_time, mut prev_site) = self.breakpoints[0];
        for &(s, p) in &self.breakpoints[1..] {
            sup = sup
                .max((prev_site as f64 - alpha * prev_time).abs())
                .max((prev_site as f64 - alpha * s).abs());
            prev_time = s;
            prev_site = p;
        }
        sup.max((prev_site as f64 - alpha * prev_time).abs())
    }

    /// CSV rows `tau,site`, time-descending, one row per breakpoint.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("tau,site\n");
        for &(s, p) in &self.breakpoints {
            out.push_str(&format!("{s},{p}\n"));
        }
        out
    }
}

fn last_event_index(list: &[f64], bound: f64, inclusive: bool) -> Option<usize> {
    let cut = if inclusive {
        list.partition_point(|&e| e <= bound)
    } else {
        list.partition_point(|&e| e < bound)
    };
    cut.checked_sub(1)
}

/// Builds the backwards path anchored at `(x, t)` for the occupancy view `view` of
/// the log. The log must cover `[0, t]`, i.e. the generating system must have been
/// evolved at least to `t`.
pub fn build_backwards_path(
    stream: &EventStream,
    log: &EventLog,
    view: usize,
    x: i64,
    t: f64,
    variant: PathVariant,
) -> Result<BackwardsPath, GeodesicsError> {
    let (x_min, x_max) = stream.window();
    if x < x_min || x > x_max + 1 {
        return Err(GeodesicsError::AnchorOutside(x));
    }
    let mut breakpoints = vec![(t, x)];
    let mut cur = x;
    let mut bound = t;
    let mut inclusive = true;
    loop {
        let probe = cur - 1;
        if probe < x_min {
            break;
        }
        let list = stream.site(probe)?;
        let Some(idx) = last_event_index(list, bound, inclusive) else {
            break;
        };
        let s = list[idx];
        let (a, b) = log
            .view_bits(view, probe, idx)
            .ok_or(GeodesicsError::IncompleteLog(probe, idx))?;
        match (a, b) {
            (true, false) => {} // executed: the height here was just created; stay
            (false, false) => {
                cur -= 1;
                breakpoints.push((s, cur));
            }
            (true, true) => {
                cur += 1;
                breakpoints.push((s, cur));
            }
            (false, true) => {
                match variant {
                    PathVariant::Rightmost => cur += 1,
                    PathVariant::Leftmost => cur -= 1,
                }
                breakpoints.push((s, cur));
            }
        }
        if cur > x_max + 1 || cur < x_min {
            return Err(GeodesicsError::PathLeftWindow(cur));
        }
        bound = s;
        inclusive = false;
    }
    breakpoints.push((0.0, cur));
    Ok(BackwardsPath {
        anchor: (x, t),
        variant,
        breakpoints,
    })
}

/// Number of executed events (particle moved across the bond into `site`) recorded
/// at `site - 1` with time at most `tau`.
pub fn executed_count_through(
    stream: &EventStream,
    log: &EventLog,
    view: usize,
    site: i64,
    tau: f64,
) -> Result<u64, GeodesicsError> {
    let probe = site - 1;
    if probe < stream.window().0 {
        return Ok(0);
    }
    let list = stream.site(probe)?;
    let cut = list.partition_point(|&e| e <= tau);
    let mut n = 0;
    for idx in 0..cut {
        let executed = log
            .executed(view, probe, idx)
            .ok_or(GeodesicsError::IncompleteLog(probe, idx))?;
        if executed {
            n += 1;
        }
    }
    Ok(n)
}

/// Height of the logged view at `(site, tau)`, reconstructed as the initial value
/// plus two per executed event at the bond to its left.
pub fn height_at_time(
    stream: &EventStream,
    log: &EventLog,
    view: usize,
    initial: &HeightFunction,
    site: i64,
    tau: f64,
) -> Result<i64, GeodesicsError> {
    Ok(initial.at(site)? + 2 * executed_count_through(stream, log, view, site, tau)? as i64)
}

/// Exact reconstruction check: at every sampled time, the anchor height must split
/// into the height at the path plus the height grown from a fresh step planted on
/// the path point. Returns false on the first violated time.
pub fn verify_geodesic_property(
    stream: &EventStream,
    log: &EventLog,
    view: usize,
    initial: &HeightFunction,
    path: &BackwardsPath,
    sample_times: &[f64],
) -> Result<bool, GeodesicsError> {
    let (x, t) = path.anchor;
    let h_x_t = height_at_time(stream, log, view, initial, x, t)?;
    for &tau in sample_times {
        let y = path.position_at(tau);
        let h_y_tau = height_at_time(stream, log, view, initial, y, tau)?;
        let step = build_initial(&InitialCondition::Step { front: y }, stream.window())?;
        let mut sys = CoupledSystem::new_anchored(stream, vec![(step, y, 0)], tau)?;
        sys.evolve_to(t)?;
        let grown = sys.member(0).height_at(x, false)?;
        if h_x_t != h_y_tau + grown {
            return Ok(false);
        }
    }
    Ok(true)
}

fn merged_breakpoint_times(paths: &[&BackwardsPath]) -> Vec<f64> {
    let mut times: Vec<f64> = paths
        .iter()
        .flat_map(|p| p.breakpoints.iter().map(|&(s, _)| s))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Ordering of two rightmost paths from `x1 < x2` at the same time: the right one
/// never falls strictly left of the other at any time.
pub fn check_path_ordering(
    stream: &EventStream,
    log: &EventLog,
    view: usize,
    x1: i64,
    x2: i64,
    t: f64,
) -> Result<bool, GeodesicsError> {
    let p1 = build_backwards_path(stream, log, view, x1, t, PathVariant::Rightmost)?;
    let p2 = build_backwards_path(stream, log, view, x2, t, PathVariant::Rightmost)?;
    for tau in merged_breakpoint_times(&[&p1, &p2]) {
        if p2.position_at(tau) < p1.position_at(tau) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Domination of the path of a height profile that is flat-empty right of the
/// origin by the path of the pure step profile, both rightmost and sharing clocks.
/// `view_h` and `view_step` index the two members inside one log.
pub fn check_step_domination(
    stream: &EventStream,
    log: &EventLog,
    view_h: usize,
    view_step: usize,
    initial_h: &HeightFunction,
    x: i64,
    t: f64,
) -> Result<bool, GeodesicsError> {
    for site in 0..=initial_h.x_end() {
        if initial_h.at(site)? != site {
            return Err(GeodesicsError::BadInitialProfile(site));
        }
    }
    let ph = build_backwards_path(stream, log, view_h, x, t, PathVariant::Rightmost)?;
    let ps = build_backwards_path(stream, log, view_step, x, t, PathVariant::Rightmost)?;
    for tau in merged_breakpoint_times(&[&ph, &ps]) {
        if ph.position_at(tau) > ps.position_at(tau) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Empirical tail of the scaled sup-deviation of step-profile paths from their
/// macroscopic ray, with binomial 95% half-widths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailStatistics {
    pub u_values: Vec<f64>,
    pub tail: Vec<f64>,
    pub half_width: Vec<f64>,
    pub samples: usize,
}

/// Distribution of `sup_tau |x(tau) - alpha tau| / t^{2/3}` for rightmost paths of
/// the step profile anchored at `(round(alpha t), t)`, over `n_samples` seeds.
pub fn localization_statistics(
    alpha: f64,
    t: f64,
    n_samples: usize,
    u_values: &[f64],
    seed0: u64,
) -> Result<TailStatistics, GeodesicsError> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(GeodesicsError::BadAlpha(alpha));
    }
    let window = crate::engine::window_for(alpha, t);
    let anchor = (alpha * t).round() as i64;
    let scale = t.powf(2.0 / 3.0);
    let mut deviations = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let seed = seed0.wrapping_add(k as u64);
        let stream = crate::clockwork::generate_events(seed, window, t)?;
        let step = build_initial(&InitialCondition::Step { front: 0 }, window)?;
        let mut sys = CoupledSystem::new(&stream, vec![step])?
            .with_log(vec![crate::engine::LogView { member: 0, upper: false }])?;
        sys.evolve_to(t)?;
        let log = sys.into_log().unwrap();
        let path = build_backwards_path(&stream, &log, 0, anchor, t, PathVariant::Rightmost)?;
        deviations.push(path.max_deviation_from_line(alpha) / scale);
    }
    let n = n_samples as f64;
    let mut tail = Vec::with_capacity(u_values.len());
    let mut half_width = Vec::with_capacity(u_values.len());
    for &u in u_values {
        let hits = deviations.iter().filter(|&&d| d > u).count() as f64;
        let p = hits / n;
        tail.push(p);
        half_width.push(1.96 * (p * (1.0 - p) / n).sqrt());
    }
    Ok(TailStatistics {
        u_values: u_values.to_vec(),
        tail,
        half_width,
        samples: n_samples,
    })
}

/// Fraction of samples whose two shock paths end on the correct far sides of the
/// origin: the left-profile path at or left of `-delta t`, the right one at or
/// right of `delta t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointStatistics {
    pub fraction: f64,
    pub half_width: f64,
    pub samples: usize,
    pub delta: f64,
}

pub fn endpoint_control_statistics(
    setup: &ShockSetup,
    n_samples: usize,
    seed0: u64,
) -> Result<EndpointStatistics, GeodesicsError> {
    let params = ShockParameters::new(setup.lambda, setup.rho)?;
    let delta = params.delta();
    let t = setup.t_final;
    let window = setup.window()?;
    let anchor = (params.v_s() * t).round() as i64;
    let threshold = (delta * t).ceil() as i64;
    let mut hits = 0usize;
    for k in 0..n_samples {
        let seed = seed0.wrapping_add(k as u64);
        let base = setup.base_config(seed).map_err(Box::new)?;
        let split = crate::lattice::split_minus_plus(&base)?;
        let stream = crate::clockwork::generate_events(seed, window, t)?;
        let mut sys = CoupledSystem::new(&stream, vec![split.minus, split.plus_upper])?
            .with_log(vec![
                crate::engine::LogView { member: 0, upper: false },
                crate::engine::LogView { member: 1, upper: false },
            ])?;
        sys.evolve_to(t)?;
        let log = sys.into_log().unwrap();
        let minus = build_backwards_path(&stream, &log, 0, anchor, t, PathVariant::Rightmost)?;
        let plus = build_backwards_path(&stream, &log, 1, anchor, t, PathVariant::Rightmost)?;
        if minus.endpoint() <= -threshold && plus.endpoint() >= threshold {
            hits += 1;
        }
    }
    let n = n_samples as f64;
    let fraction = hits as f64 / n;
    Ok(EndpointStatistics {
        fraction,
        half_width: 1.96 * (fraction * (1.0 - fraction) / n).sqrt(),
        samples: n_samples,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clockwork::generate_events;
    use crate::engine::LogView;
    use crate::lattice::{height_profile, Configuration};

    fn logged_system<'a>(
        stream: &'a EventStream,
        cfgs: Vec<Configuration>,
        t: f64,
    ) -> (CoupledSystem<'a>, EventLog) {
        let views = (0..cfgs.len()).map(|m| LogView { member: m, upper: false }).collect();
        let mut sys = CoupledSystem::new(stream, cfgs)
            .unwrap()
            .with_log(views)
            .unwrap();
        sys.evolve_to(t).unwrap();
        let log = sys.log().unwrap().clone();
        (sys, log)
    }

    fn explicit(window: (i64, i64), occupied: &[i64]) -> Configuration {
        build_initial(
            &InitialCondition::Explicit { occupied: occupied.to_vec() },
            window,
        )
        .unwrap()
    }

    #[test]
    fn no_events_means_constant_path() {
        let stream = EventStream::from_lists(0, -3, 5.0, vec![vec![]; 7]).unwrap();
        let cfg = explicit((-3, 3), &[0]);
        let (_sys, log) = logged_system(&stream, vec![cfg], 5.0);
        let path = build_backwards_path(&stream, &log, 0, 1, 5.0, PathVariant::Rightmost).unwrap();
        assert_eq!(path.endpoint(), 1);
        assert_eq!(path.position_at(2.5), 1);
        assert_eq!(path.breakpoints, vec![(5.0, 1), (0.0, 1)]);
    }

    #[test]
    fn executed_event_keeps_the_path_in_place() {
        // Particle at 0 jumps to 1 at time 1; the path anchored at (1, 2) was
        // created by that event and stays.
        let stream = EventStream::from_lists(0, -2, 5.0, vec![vec![], vec![], vec![1.0], vec![], vec![]])
            .unwrap();
        let cfg = explicit((-2, 2), &[0]);
        let (_sys, log) = logged_system(&stream, vec![cfg], 5.0);
        let path = build_backwards_path(&stream, &log, 0, 1, 2.0, PathVariant::Rightmost).unwrap();
        assert_eq!(path.endpoint(), 1);
    }

    #[test]
    fn descent_moves_left_when_only_left_is_lower() {
        // Empty lattice: pattern (0,0) at the probe bond sends the path left.
        let stream = EventStream::from_lists(0, -2, 5.0, vec![vec![], vec![1.0], vec![], vec![], vec![]])
            .unwrap();
        let cfg = Configuration::empty((-2, 2)).unwrap();
        let (_sys, log) = logged_system(&stream, vec![cfg], 5.0);
        for variant in [PathVariant::Rightmost, PathVariant::Leftmost] {
            let path = build_backwards_path(&stream, &log, 0, 0, 3.0, variant).unwrap();
            assert_eq!(path.endpoint(), -1, "{variant:?}");
        }
    }

    #[test]
    fn descent_moves_right_when_only_right_is_lower() {
        // Particles at -1 and 0: pattern (1,1) at the bond (-1, 0).
        let stream = EventStream::from_lists(0, -2, 5.0, vec![vec![], vec![1.0], vec![], vec![], vec![]])
            .unwrap();
        let cfg = explicit((-2, 2), &[-1, 0]);
        let (_sys, log) = logged_system(&stream, vec![cfg], 5.0);
        for variant in [PathVariant::Rightmost, PathVariant::Leftmost] {
            let path = build_backwards_path(&stream, &log, 0, 0, 3.0, variant).unwrap();
            assert_eq!(path.endpoint(), 1, "{variant:?}");
        }
    }

    #[test]
    fn local_maximum_respects_the_variant() {
        // Hole at -1, particle at 0: the anchor sits on a local maximum.
        let stream = EventStream::from_lists(0, -2, 5.0, vec![vec![], vec![1.0], vec![], vec![], vec![]])
            .unwrap();
        let cfg = explicit((-2, 2), &[0]);
        let (_sys, log) = logged_system(&stream, vec![cfg], 5.0);
        let right = build_backwards_path(&stream, &log, 0, 0, 3.0, PathVariant::Rightmost).unwrap();
        let left = build_backwards_path(&stream, &log, 0, 0, 3.0, PathVariant::Leftmost).unwrap();
        assert_eq!(right.endpoint(), 1);
        assert_eq!(left.endpoint(), -1);
    }

    #[test]
    fn reconstructed_heights_match_live_profiles() {
        for seed in 0..20u64 {
            let window = (-15, 15);
            let t = 10.0;
            let stream = generate_events(seed, window, t).unwrap();
            let cfg = build_initial(
                &InitialCondition::BernoulliShock { lambda: 0.3, rho: 0.7, ic_seed: seed },
                window,
            )
            .unwrap();
            let h0 = height_profile(&cfg, 0, 0, false).unwrap();
            let (mut sys, _) = logged_system(&stream, vec![cfg.clone()], 4.0);
            let mid = sys.member(0).height_profile(false);
            sys.evolve_to(t).unwrap();
            let log = sys.log().unwrap().clone();
            for x in [-10, -3, 0, 2, 9] {
                assert_eq!(
                    height_at_time(&stream, &log, 0, &h0, x, 4.0).unwrap(),
                    mid.at(x).unwrap(),
                    "seed {seed}, x {x}"
                );
            }
        }
    }

    #[test]
    fn geodesic_reconstruction_holds_everywhere() {
        for seed in 0..25u64 {
            let t = 20.0;
            let window = crate::engine::window_for(0.0, t);
            let stream = generate_events(seed, window, t).unwrap();
            let cfg = build_initial(
                &InitialCondition::BernoulliShock { lambda: 0.25, rho: 0.75, ic_seed: seed },
                window,
            )
            .unwrap();
            let h0 = height_profile(&cfg, 0, 0, false).unwrap();
            let (sys, log) = logged_system(&stream, vec![cfg], t);
            drop(sys);
            for variant in [PathVariant::Rightmost, PathVariant::Leftmost] {
                let path = build_backwards_path(&stream, &log, 0, 2, t, variant).unwrap();
                let ok = verify_geodesic_property(
                    &stream,
                    &log,
                    0,
                    &h0,
                    &path,
                    &[0.0, 4.3, 11.0, 17.5, t],
                )
                .unwrap();
                assert!(ok, "seed {seed} variant {variant:?}");
            }
        }
    }

    #[test]
    fn truncated_paths_restart_identically() {
        for seed in 0..20u64 {
            let t = 16.0;
            let window = (-40, 40);
            let stream = generate_events(seed, window, t).unwrap();
            let cfg = build_initial(
                &InitialCondition::BernoulliShock { lambda: 0.25, rho: 0.75, ic_seed: seed },
                window,
            )
            .unwrap();
            let (_sys, log) = logged_system(&stream, vec![cfg], t);
            let full = build_backwards_path(&stream, &log, 0, 0, t, PathVariant::Rightmost).unwrap();
            let t_cut = 7.0;
            let restart = build_backwards_path(
                &stream,
                &log,
                0,
                full.position_at(t_cut),
                t_cut,
                PathVariant::Rightmost,
            )
            .unwrap();
            for tau in merged_breakpoint_times(&[&full, &restart]) {
                if tau <= t_cut {
                    assert_eq!(
                        full.position_at(tau),
                        restart.position_at(tau),
                        "seed {seed}, tau {tau}"
                    );
                }
            }
        }
    }

    #[test]
    fn rightmost_paths_stay_ordered_and_merge() {
        for seed in 0..40u64 {
            let t = 15.0;
            let window = (-45, 45);
            let stream = generate_events(seed, window, t).unwrap();
            let cfg = build_initial(
                &InitialCondition::BernoulliShock { lambda: 0.25, rho: 0.75, ic_seed: seed },
                window,
            )
            .unwrap();
            let (_sys, log) = logged_system(&stream, vec![cfg], t);
            assert!(check_path_ordering(&stream, &log, 0, -3, 4, t).unwrap(), "seed {seed}");

            let p1 = build_backwards_path(&stream, &log, 0, -3, t, PathVariant::Rightmost).unwrap();
            let p2 = build_backwards_path(&stream, &log, 0, 4, t, PathVariant::Rightmost).unwrap();
            let mut met = false;
            let mut times = merged_breakpoint_times(&[&p1, &p2]);
            times.reverse(); // walk downwards in time
            for tau in times {
                if met {
                    assert_eq!(p1.position_at(tau), p2.position_at(tau), "seed {seed} tau {tau}");
                } else if p1.position_at(tau) == p2.position_at(tau) {
                    met = true;
                }
            }
        }
    }

    #[test]
    fn step_profile_dominates_empty_right_profiles() {
        for seed in 0..40u64 {
            let t = 15.0;
            let window = (-45, 45);
            let stream = generate_events(seed, window, t).unwrap();
            // Left of the origin: particles only at even sites, right: empty. The
            // height then satisfies h(x,0) = x for x >= 0.
            let occupied: Vec<i64> = (window.0..0).filter(|x| x % 2 == 0).collect();
            let h_cfg = explicit(window, &occupied);
            let step_cfg = build_initial(&InitialCondition::Step { front: 0 }, window).unwrap();
            let h0 = height_profile(&h_cfg, 0, 0, false).unwrap();
            let (_sys, log) = logged_system(&stream, vec![h_cfg, step_cfg], t);
            assert!(
                check_step_domination(&stream, &log, 0, 1, &h0, 3, t).unwrap(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn step_domination_requires_the_flat_right_profile() {
        let t = 5.0;
        let window = (-10, 10);
        let stream = generate_events(1, window, t).unwrap();
        let bad = explicit(window, &[2]); // particle right of the origin
        let step_cfg = build_initial(&InitialCondition::Step { front: 0 }, window).unwrap();
        let h0 = height_profile(&bad, 0, 0, false).unwrap();
        let (_sys, log) = logged_system(&stream, vec![bad, step_cfg], t);
        assert!(matches!(
            check_step_domination(&stream, &log, 0, 1, &h0, 0, t),
            Err(GeodesicsError::BadInitialProfile(_))
        ));
    }

    #[test]
    fn localization_tail_is_monotone_and_small_at_three() {
        let stats = localization_statistics(0.2, 40.0, 60, &[1.0, 2.0, 3.0], 500).unwrap();
        assert!(stats.tail[0] >= stats.tail[1] && stats.tail[1] >= stats.tail[2]);
        assert!(stats.tail[2] <= 0.5, "tail at 3: {}", stats.tail[2]);
        assert!(matches!(
            localization_statistics(1.0, 40.0, 5, &[1.0], 0),
            Err(GeodesicsError::BadAlpha(_))
        ));
    }

    #[test]
    fn endpoint_fractions_are_sane() {
        let setup = ShockSetup {
            lambda: 0.25,
            rho: 0.75,
            deterministic_ic: false,
            t_final: 40.0,
        };
        let stats = endpoint_control_statistics(&setup, 40, 900).unwrap();
        assert!(stats.fraction >= 0.0 && stats.fraction <= 1.0);
        assert!(stats.fraction >= 0.3, "fraction {}", stats.fraction);
        assert_eq!(stats.delta, 0.25);
    }

    #[test]
    fn csv_export_lists_breakpoints() {
        let path = BackwardsPath {
            anchor: (2, 4.0),
            variant: PathVariant::Rightmost,
            breakpoints: vec![(4.0, 2), (1.5, 3), (0.0, 3)],
        };
        let csv = path.trajectory_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "tau,site");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "1.5,3");
    }
}
