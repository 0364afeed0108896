//! Evolution of particle configurations against shared Poisson clocks.
//!
//! The central object is [`CoupledSystem`]: any number of configurations replayed in
//! lockstep against one [`EventStream`], which realizes the basic coupling. When the
//! clock of site `s` rings, every member applies the same bond rule to `(s, s+1)`:
//!
//! * first-class particle ahead of a hole: jump;
//! * first-class particle ahead of a second-class particle: swap;
//! * second-class particle ahead of a hole: jump;
//! * anything else: nothing.
//!
//! Windows are closed: no particle enters from outside and none leaves, so the height
//! value at the left edge of the window never changes, which pins every height profile
//! without extra bookkeeping. Runs meant to emulate the infinite lattice choose the
//! window wide enough (see [`window_for`]) that boundary artifacts cannot reach the
//! observables; [`observable_contaminated`] is the corresponding cone check, and the
//! system counts executed jumps inside the guard bands as a cheap diagnostic.
//!
//! Submodules: [`streaming`] holds an equivalent engine that skips empty regions (for
//! large statistical runs), [`ctmc`] the exact finite-chain law for cross-validation.

pub mod ctmc;
pub mod streaming;

use crate::clockwork::{ClockError, EventStream};
use crate::lattice::{
    height_of, height_profile, Cell, Configuration, HeightFunction, LatticeError,
};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("member windows disagree with the stream window")]
    WindowMismatch,
    #[error("cannot evolve backwards: at {0}, asked for {1}")]
    TimeBackwards(f64, f64),
    #[error("target time {0} beyond stream horizon {1}")]
    BeyondHorizon(f64, f64),
    #[error("no members supplied")]
    NoMembers,
    #[error("at most {0} logged views supported, got {1}")]
    TooManyViews(usize, usize),
    #[error("log view references member {0}, but only {1} members exist")]
    BadViewMember(usize, usize),
    #[error("minimizer of the superposition touches the boundary of y_range")]
    MinimizerOnBoundary,
    #[error("empty or inverted y_range")]
    BadRange,
    #[error("exact chain solver needs a two-class configuration")]
    NotTwoClass,
    #[error("window of {0} sites exceeds the exact solver cap of {1}")]
    TooManySites(usize, usize),
    #[error("exact chain solver needs t >= 0 and tol > 0")]
    BadCtmcParameter,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Clock(#[from] ClockError),
}

/// Window half-width multiplier: the simulated window extends `KAPPA * t + MARGIN`
/// sites on both sides of the observation center. Influence spreads at most one site
/// per clock ring, so reaching distance `2t` in time `t` already has probability
/// `exp(-0.38 t)`; a multiplier of three leaves the full guard band on top of that.
pub const WINDOW_KAPPA: f64 = 3.0;
/// Additive window margin covering small times.
pub const WINDOW_MARGIN: i64 = 50;
/// Speed of the backwards cone used in contamination checks, slightly above the
/// almost-sure unit propagation speed to absorb rare bursts.
pub const GUARD_CONE_SPEED: f64 = 1.5;

/// Simulation window for observables near `center_velocity * t` at time `t`.
pub fn window_for(center_velocity: f64, t: f64) -> (i64, i64) {
    let c = center_velocity * t;
    let half = (WINDOW_KAPPA * t).ceil() as i64 + WINDOW_MARGIN;
    (c.floor() as i64 - half, c.ceil() as i64 + half)
}

/// Width (in sites) of the guard band at each window edge for a run of length `t`.
pub fn guard_width(t: f64) -> f64 {
    t / 2.0
}

/// True when the backwards cone from the observable `(x, t_obs)`, opened at
/// [`GUARD_CONE_SPEED`], reaches a guard band of width `guard` inside `window`.
/// Flagged samples are discarded and counted by the callers.
pub fn observable_contaminated(window: (i64, i64), guard: f64, x: i64, t_obs: f64) -> bool {
    let reach = GUARD_CONE_SPEED * t_obs;
    (x as f64 - reach) <= window.0 as f64 + guard || (x as f64 + reach) >= window.1 as f64 - guard
}

/// What an event did to one member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    None,
    JumpFirst,
    JumpSecond,
    Swap,
}

/// Applies the bond rule at offset `i` (site `x_min + i`); `i + 1` must be in range.
#[inline]
fn apply_bond(cells: &mut [u8], i: usize) -> MoveKind {
    let a = cells[i];
    if a == 0 {
        return MoveKind::None;
    }
    let b = cells[i + 1];
    match (a, b) {
        (1, 0) => {
            cells[i] = 0;
            cells[i + 1] = 1;
            MoveKind::JumpFirst
        }
        (1, 2) => {
            cells[i] = 2;
            cells[i + 1] = 1;
            MoveKind::Swap
        }
        (2, 0) => {
            cells[i] = 0;
            cells[i + 1] = 2;
            MoveKind::JumpSecond
        }
        _ => MoveKind::None,
    }
}

/// One configuration evolving inside a [`CoupledSystem`].
///
/// Heights are pinned at construction time by `h(anchor_site, 0) = anchor_value` and
/// thereafter tracked through the invariant height at the closed left edge.
#[derive(Debug, Clone)]
pub struct Member {
    x_min: i64,
    cells: Vec<u8>,
    h_left_lower: i64,
    h_left_upper: i64,
    seconds: Vec<i64>,
}

impl Member {
    fn new(cfg: &Configuration, anchor_site: i64, anchor_value: i64) -> Result<Member, EngineError> {
        let h_left_lower = height_of(cfg, anchor_site, anchor_value, false, cfg.x_min())?;
        let h_left_upper = height_of(cfg, anchor_site, anchor_value, true, cfg.x_min())?;
        let seconds = cfg
            .occupied_sites()
            .into_iter()
            .filter(|&x| cfg.get(x).unwrap() == Cell::Second)
            .collect();
        Ok(Member {
            x_min: cfg.x_min(),
            cells: cfg.codes().to_vec(),
            h_left_lower,
            h_left_upper,
            seconds,
        })
    }

    pub fn configuration(&self) -> Configuration {
        Configuration::from_codes(self.x_min, self.cells.clone())
    }

    pub fn cell(&self, x: i64) -> Option<Cell> {
        let off = x.checked_sub(self.x_min)?;
        self.cells.get(off as usize).and_then(|&c| Cell::from_code(c))
    }

    /// Height profile of the lower (`upper = false`) or upper view of the member.
    /// Two-class members give the same answer for both.
    pub fn height_profile(&self, upper: bool) -> HeightFunction {
        let cfg = Configuration::from_codes(self.x_min, self.cells.clone());
        let h_left = if upper { self.h_left_upper } else { self.h_left_lower };
        height_profile(&cfg, self.x_min, h_left, upper).expect("anchor inside window")
    }

    /// Single height value; prefix walk from the pinned left edge.
    pub fn height_at(&self, x: i64, upper: bool) -> Result<i64, EngineError> {
        let x_max = self.x_min + self.cells.len() as i64 - 1;
        if x < self.x_min || x > x_max + 1 {
            return Err(EngineError::Lattice(LatticeError::HeightOutsideWindow(
                x, self.x_min, x_max + 1,
            )));
        }
        let mut acc = if upper { self.h_left_upper } else { self.h_left_lower };
        for off in 0..(x - self.x_min) as usize {
            let cell = Cell::from_code(self.cells[off]).unwrap();
            acc += 1 - 2 * cell.eta(upper);
        }
        Ok(acc)
    }

    /// Positions of the second-class particles, ascending. Their relative order is
    /// preserved by the dynamics (no rule exchanges two of them).
    pub fn second_positions(&self) -> &[i64] {
        &self.seconds
    }

    fn on_move(&mut self, site: i64, kind: MoveKind) {
        match kind {
            MoveKind::JumpSecond => {
                if let Ok(idx) = self.seconds.binary_search(&site) {
                    self.seconds[idx] = site + 1;
                }
            }
            MoveKind::Swap => {
                if let Ok(idx) = self.seconds.binary_search(&(site + 1)) {
                    self.seconds[idx] = site;
                }
            }
            _ => {}
        }
    }
}

/// Snapshot of a multiclass evolution: final cells plus second-class positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulticlassState {
    pub cfg: Configuration,
    pub second_positions: Vec<i64>,
}

/// Occupancy view of one member entering the event log: `upper` decides how
/// second-class cells count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogView {
    pub member: usize,
    pub upper: bool,
}

pub const MAX_LOG_VIEWS: usize = 4;

/// Pre-event occupancy patterns, one byte per clock event, aligned index-for-index
/// with the site lists of the generating [`EventStream`]. For view `v`, bit `2v` is
/// the occupancy of the ringing site and bit `2v + 1` that of its right neighbor.
#[derive(Debug, Clone)]
pub struct EventLog {
    views: Vec<LogView>,
    x_min: i64,
    patterns: Vec<Vec<u8>>,
}

impl EventLog {
    pub fn views(&self) -> &[LogView] {
        &self.views
    }

    pub fn recorded(&self, site: i64, index: usize) -> Option<u8> {
        let off = site.checked_sub(self.x_min)?;
        self.patterns.get(off as usize)?.get(index).copied()
    }

    /// Pre-event `(occ(site), occ(site + 1))` of view `view` at event `index`.
    pub fn view_bits(&self, view: usize, site: i64, index: usize) -> Option<(bool, bool)> {
        let p = self.recorded(site, index)?;
        Some((p >> (2 * view) & 1 == 1, p >> (2 * view + 1) & 1 == 1))
    }

    /// Whether event `index` at `site` moved a particle of view `view` (its height
    /// rose by two at `site + 1`).
    pub fn executed(&self, view: usize, site: i64, index: usize) -> Option<bool> {
        self.view_bits(view, site, index).map(|(a, b)| a && !b)
    }
}

/// Several configurations replayed in lockstep over one materialized event stream.
pub struct CoupledSystem<'a> {
    stream: &'a EventStream,
    time: f64,
    members: Vec<Member>,
    last_offset: usize,
    cursors: Vec<usize>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
    guard_inner: Option<(i64, i64)>,
    guard_jumps: u64,
    log: Option<EventLog>,
}

impl<'a> CoupledSystem<'a> {
    /// Members anchored by `h(0, 0) = 0`; the stream window must contain the origin.
    pub fn new(
        stream: &'a EventStream,
        configs: Vec<Configuration>,
    ) -> Result<CoupledSystem<'a>, EngineError> {
        let anchored = configs.into_iter().map(|c| (c, 0, 0)).collect();
        Self::new_anchored(stream, anchored, 0.0)
    }

    /// General constructor: per-member height anchors and a start time. Events at or
    /// before `start_time` are treated as already consumed.
    pub fn new_anchored(
        stream: &'a EventStream,
        configs: Vec<(Configuration, i64, i64)>,
        start_time: f64,
    ) -> Result<CoupledSystem<'a>, EngineError> {
        if configs.is_empty() {
            return Err(EngineError::NoMembers);
        }
        let window = stream.window();
        let mut members = Vec::with_capacity(configs.len());
        for (cfg, anchor_site, anchor_value) in configs {
            if cfg.window() != window {
                return Err(EngineError::WindowMismatch);
            }
            members.push(Member::new(&cfg, anchor_site, anchor_value)?);
        }
        let n_sites = (window.1 - window.0 + 1) as usize;
        let mut cursors = vec![0usize; n_sites];
        let mut heap = BinaryHeap::with_capacity(n_sites);
        for off in 0..n_sites {
            let site = window.0 + off as i64;
            let list = stream.site(site)?;
            let idx = list.partition_point(|&e| e <= start_time);
            cursors[off] = idx;
            if idx < list.len() {
                heap.push(Reverse((list[idx].to_bits(), off as u32)));
            }
        }
        Ok(CoupledSystem {
            stream,
            time: start_time,
            members,
            last_offset: n_sites - 1,
            cursors,
            heap,
            guard_inner: None,
            guard_jumps: 0,
            log: None,
        })
    }

    /// Arms the guard-band diagnostic for a run of final time `t_final`: executed
    /// jumps within `guard_width(t_final)` of either edge are counted.
    pub fn with_guard(mut self, t_final: f64) -> Self {
        let g = guard_width(t_final).ceil() as i64;
        let (a, b) = self.stream.window();
        self.guard_inner = Some((a + g, b - g));
        self
    }

    /// Starts recording pre-event occupancy patterns for the given views.
    pub fn with_log(mut self, views: Vec<LogView>) -> Result<Self, EngineError> {
        if views.len() > MAX_LOG_VIEWS {
            return Err(EngineError::TooManyViews(MAX_LOG_VIEWS, views.len()));
        }
        for v in &views {
            if v.member >= self.members.len() {
                return Err(EngineError::BadViewMember(v.member, self.members.len()));
            }
        }
        let n_sites = self.cursors.len();
        self.log = Some(EventLog {
            views,
            x_min: self.stream.window().0,
            patterns: vec![Vec::new(); n_sites],
        });
        Ok(self)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Member {
        &self.members[i]
    }

    pub fn guard_jumps(&self) -> u64 {
        self.guard_jumps
    }

    pub fn log(&self) -> Option<&EventLog> {
        self.log.as_ref()
    }

    pub fn into_log(self) -> Option<EventLog> {
        self.log
    }

    /// Applies every event with time in `(current, t]`, in global time order with
    /// site-index tie-breaking, to all members.
    pub fn evolve_to(&mut self, t: f64) -> Result<(), EngineError> {
        if t < self.time {
            return Err(EngineError::TimeBackwards(self.time, t));
        }
        if t > self.stream.horizon {
            return Err(EngineError::BeyondHorizon(t, self.stream.horizon));
        }
        let x_min = self.stream.window().0;
        while let Some(&Reverse((bits, off))) = self.heap.peek() {
            let event_time = f64::from_bits(bits);
            if event_time > t {
                break;
            }
            self.heap.pop();
            let off = off as usize;
            let site = x_min + off as i64;

            if let Some(log) = &mut self.log {
                let mut pattern = 0u8;
                for (v, view) in log.views.iter().enumerate() {
                    let m = &self.members[view.member];
                    let a = Cell::from_code(m.cells[off]).unwrap().eta(view.upper) as u8;
                    let b = if off < self.last_offset {
                        Cell::from_code(m.cells[off + 1]).unwrap().eta(view.upper) as u8
                    } else {
                        1 // closed boundary: the edge site never jumps out
                    };
                    pattern |= a << (2 * v) | b << (2 * v + 1);
                }
                log.patterns[off].push(pattern);
            }

            let mut any_move = false;
            if off < self.last_offset {
                for m in &mut self.members {
                    let kind = apply_bond(&mut m.cells, off);
                    if kind != MoveKind::None {
                        m.on_move(site, kind);
                        any_move = true;
                    }
                }
            }
            if any_move {
                if let Some((li, ri)) = self.guard_inner {
                    if site <= li || site >= ri {
                        self.guard_jumps += 1;
                    }
                }
            }

            self.cursors[off] += 1;
            let list = self.stream.site(site)?;
            if self.cursors[off] < list.len() {
                self.heap.push(Reverse((list[self.cursors[off]].to_bits(), off as u32)));
            }
        }
        self.time = t;
        Ok(())
    }
}

/// Evolves a single configuration to time `t` under `stream` (anchor `h(0,0) = 0`).
pub fn evolve<'a>(
    stream: &'a EventStream,
    cfg: Configuration,
    t: f64,
) -> Result<CoupledSystem<'a>, EngineError> {
    let mut sys = CoupledSystem::new(stream, vec![cfg])?;
    sys.evolve_to(t)?;
    Ok(sys)
}

/// Evolves a multiclass configuration and reports the final state with the
/// second-class particle positions.
pub fn evolve_multiclass(
    stream: &EventStream,
    cfg: Configuration,
    t: f64,
) -> Result<MulticlassState, EngineError> {
    let sys = evolve(stream, cfg, t)?;
    let m = sys.member(0);
    Ok(MulticlassState {
        cfg: m.configuration(),
        second_positions: m.second_positions().to_vec(),
    })
}

/// Result of a superposition minimization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinSuperposition {
    pub value: i64,
    pub minimizers: Vec<i64>,
}

/// Evaluates `min_y { h(y, tau) + h_step_from_y(x, t) }` over `y in y_range`, where
/// the inner term is the height at `x` grown from a step configuration planted at `y`
/// at time `tau`, evolved by the same clocks. The minimum over all `y` reproduces
/// `h(x, t)` exactly; an error is returned if the minimum is attained only on the
/// boundary of `y_range`, since then the range cannot certify the true minimum.
pub fn min_superposition(
    heights_at_tau: &HeightFunction,
    stream: &EventStream,
    tau: f64,
    t: f64,
    x: i64,
    y_range: (i64, i64),
) -> Result<MinSuperposition, EngineError> {
    let (y_lo, y_hi) = y_range;
    if y_lo > y_hi {
        return Err(EngineError::BadRange);
    }
    let window = stream.window();
    let mut members = Vec::with_capacity((y_hi - y_lo + 1) as usize);
    for y in y_lo..=y_hi {
        let cfg = crate::lattice::build_initial(
            &crate::lattice::InitialCondition::Step { front: y },
            window,
        )?;
        members.push((cfg, y, 0));
    }
    let mut sys = CoupledSystem::new_anchored(stream, members, tau)?;
    sys.evolve_to(t)?;
    let mut value = i64::MAX;
    let mut minimizers = Vec::new();
    for (i, y) in (y_lo..=y_hi).enumerate() {
        let step_h = sys.member(i).height_at(x, false)?;
        let total = heights_at_tau.at(y)? + step_h;
        if total < value {
            value = total;
            minimizers.clear();
        }
        if total == value {
            minimizers.push(y);
        }
    }
    if minimizers.iter().all(|&y| y == y_lo || y == y_hi) {
        return Err(EngineError::MinimizerOnBoundary);
    }
    Ok(MinSuperposition { value, minimizers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clockwork::generate_events;
    use crate::lattice::{build_initial, InitialCondition};
    use proptest::prelude::*;

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
    fn single_particle_jumps_and_heights_rise() {
        let stream =
            EventStream::from_lists(0, -2, 10.0, vec![vec![], vec![], vec![1.0, 3.0], vec![2.0], vec![]])
                .unwrap();
        // Particle at the origin; events at site 0 at times 1 and 3, site 1 at time 2.
        let cfg = explicit((-2, 2), &[0]);
        let mut sys = CoupledSystem::new(&stream, vec![cfg]).unwrap();
        sys.evolve_to(0.5).unwrap();
        assert_eq!(sys.member(0).cell(0), Some(Cell::First));
        sys.evolve_to(1.0).unwrap(); // jump 0 -> 1 happens exactly at t = 1
        assert_eq!(sys.member(0).cell(0), Some(Cell::Hole));
        assert_eq!(sys.member(0).cell(1), Some(Cell::First));
        sys.evolve_to(2.0).unwrap(); // jump 1 -> 2
        assert_eq!(sys.member(0).cell(2), Some(Cell::First));
        sys.evolve_to(3.0).unwrap(); // site 0 empty now, nothing happens
        let h = sys.member(0).height_profile(false);
        // h(0,0) = 0; the jumps raised h(1) and h(2) by two each.
        assert_eq!(h.at(0).unwrap(), 0);
        assert_eq!(h.at(1).unwrap(), 1 - 2 + 2); // initial -1, one arrival
        assert_eq!(h.at(2).unwrap(), 0 + 2);
        assert_eq!(sys.member(0).height_at(1, false).unwrap(), h.at(1).unwrap());
    }

    #[test]
    fn blocked_jump_does_nothing() {
        let stream = EventStream::from_lists(0, 0, 10.0, vec![vec![1.0], vec![]]).unwrap();
        let cfg = explicit((0, 1), &[0, 1]);
        let mut sys = CoupledSystem::new(&stream, vec![cfg]).unwrap();
        sys.evolve_to(5.0).unwrap();
        assert_eq!(sys.member(0).cell(0), Some(Cell::First));
        assert_eq!(sys.member(0).cell(1), Some(Cell::First));
    }

    #[test]
    fn first_class_swaps_with_second_class() {
        let stream = EventStream::from_lists(0, -1, 10.0, vec![vec![], vec![1.0], vec![2.0], vec![]]).unwrap();
        let mut cfg = Configuration::empty((-1, 2)).unwrap();
        cfg.set(0, Cell::First).unwrap();
        cfg.set(1, Cell::Second).unwrap();
        let mut sys = CoupledSystem::new(&stream, vec![cfg]).unwrap();
        sys.evolve_to(1.0).unwrap();
        assert_eq!(sys.member(0).cell(0), Some(Cell::Second));
        assert_eq!(sys.member(0).cell(1), Some(Cell::First));
        assert_eq!(sys.member(0).second_positions(), &[0]);
        // Second-class particle now jumps into the hole at its right at t = 2? No:
        // site 1 holds the first-class particle, so the event at site 1 moves it.
        sys.evolve_to(2.0).unwrap();
        assert_eq!(sys.member(0).cell(2), Some(Cell::First));
        assert_eq!(sys.member(0).second_positions(), &[0]);
    }

    #[test]
    fn second_class_jumps_into_holes() {
        let stream = EventStream::from_lists(0, 0, 10.0, vec![vec![1.5], vec![]]).unwrap();
        let mut cfg = Configuration::empty((0, 1)).unwrap();
        cfg.set(0, Cell::Second).unwrap();
        let state = evolve_multiclass(&stream, cfg, 2.0).unwrap();
        assert_eq!(state.second_positions, vec![1]);
        assert_eq!(state.cfg.get(1).unwrap(), Cell::Second);
    }

    #[test]
    fn multiclass_rules_match_coupled_pair() {
        // A multiclass state is the compact form of two coupled configurations that
        // differ exactly at the second-class sites. Evolving both representations
        // against the same clocks must stay consistent.
        for seed in 0..50u64 {
            let stream = generate_events(seed, (-10, 10), 12.0).unwrap();
            let lower = build_initial(
                &InitialCondition::BernoulliShock {
                    lambda: 0.3,
                    rho: 0.55,
                    ic_seed: seed,
                },
                (-10, 10),
            )
            .unwrap();
            let mut multi = lower.clone();
            multi.set(0, Cell::Second).unwrap();
            let mut upper = lower.clone();
            upper.set(0, Cell::First).unwrap();

            let mut sys = CoupledSystem::new(&stream, vec![lower, upper, multi]).unwrap();
            sys.evolve_to(12.0).unwrap();
            let multi_final = sys.member(2);
            for x in -10..=10 {
                let low = sys.member(0).cell(x).unwrap().eta(true);
                let up = sys.member(1).cell(x).unwrap().eta(true);
                let c = multi_final.cell(x).unwrap();
                assert_eq!(c.eta(false), low, "lower view mismatch at {x} seed {seed}");
                assert_eq!(c.eta(true), up, "upper view mismatch at {x} seed {seed}");
            }
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let stream = generate_events(7, (-15, 15), 20.0).unwrap();
        let cfg = build_initial(&InitialCondition::Step { front: 0 }, (-15, 15)).unwrap();
        let a = evolve(&stream, cfg.clone(), 20.0).unwrap();
        let b = evolve(&stream, cfg, 20.0).unwrap();
        assert_eq!(a.member(0).configuration(), b.member(0).configuration());
        assert_eq!(
            a.member(0).height_profile(false).values(),
            b.member(0).height_profile(false).values()
        );
    }

    #[test]
    fn left_edge_height_is_invariant() {
        let stream = generate_events(3, (-12, 12), 15.0).unwrap();
        let cfg = build_initial(&InitialCondition::Step { front: 2 }, (-12, 12)).unwrap();
        let before = CoupledSystem::new(&stream, vec![cfg.clone()]).unwrap();
        let h0 = before.member(0).height_at(-12, false).unwrap();
        let sys = evolve(&stream, cfg, 15.0).unwrap();
        assert_eq!(sys.member(0).height_at(-12, false).unwrap(), h0);
    }

    #[test]
    fn evolve_rejects_bad_times() {
        let stream = generate_events(0, (0, 3), 5.0).unwrap();
        let cfg = explicit((0, 3), &[0]);
        let mut sys = CoupledSystem::new(&stream, vec![cfg]).unwrap();
        sys.evolve_to(4.0).unwrap();
        assert!(matches!(
            sys.evolve_to(3.0),
            Err(EngineError::TimeBackwards(_, _))
        ));
        assert!(matches!(
            sys.evolve_to(6.0),
            Err(EngineError::BeyondHorizon(_, _))
        ));
    }

    #[test]
    fn guard_band_jumps_are_counted() {
        let stream = EventStream::from_lists(0, 0, 10.0, vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![]])
            .unwrap();
        let cfg = explicit((0, 4), &[0]);
        // Guard width ceil(4/2) = 2: bands are sites <= 2 and >= 2.
        let mut sys = CoupledSystem::new(&stream, vec![cfg]).unwrap().with_guard(4.0);
        sys.evolve_to(10.0).unwrap();
        assert_eq!(sys.guard_jumps(), 4);
    }

    #[test]
    fn contamination_cone_check() {
        let window = (-350, 350);
        let guard = guard_width(100.0);
        assert!(!observable_contaminated(window, guard, 0, 100.0));
        assert!(!observable_contaminated(window, guard, 5, 100.0));
        // Same cone inside a window that is far too narrow.
        assert!(observable_contaminated((-160, 160), guard, 0, 100.0));
        // Observable sitting close to an edge.
        assert!(observable_contaminated(window, guard, -280, 100.0));
    }

    #[test]
    fn log_records_aligned_patterns() {
        let stream =
            EventStream::from_lists(0, 0, 10.0, vec![vec![1.0, 2.0], vec![1.5], vec![]]).unwrap();
        let cfg = explicit((0, 2), &[0, 1]);
        let mut sys = CoupledSystem::new(&stream, vec![cfg])
            .unwrap()
            .with_log(vec![LogView { member: 0, upper: false }])
            .unwrap();
        sys.evolve_to(10.0).unwrap();
        let log = sys.log().unwrap();
        // Event (site 0, t=1): pre-pattern (1,1) blocked. Event (site 1, t=1.5):
        // (1,0) executed. Event (site 0, t=2): (1,0) executed.
        assert_eq!(log.view_bits(0, 0, 0), Some((true, true)));
        assert_eq!(log.executed(0, 0, 0), Some(false));
        assert_eq!(log.view_bits(0, 1, 0), Some((true, false)));
        assert_eq!(log.executed(0, 1, 0), Some(true));
        assert_eq!(log.view_bits(0, 0, 1), Some((true, false)));
        assert_eq!(log.executed(0, 0, 1), Some(true));
        assert_eq!(log.recorded(2, 0), None);
    }

    #[test]
    fn min_superposition_at_equal_times_recovers_heights() {
        let stream = generate_events(5, (-10, 10), 8.0).unwrap();
        let cfg = build_initial(
            &InitialCondition::BernoulliShock {
                lambda: 0.25,
                rho: 0.75,
                ic_seed: 9,
            },
            (-10, 10),
        )
        .unwrap();
        let sys = evolve(&stream, cfg, 5.0).unwrap();
        let h = sys.member(0).height_profile(false);
        // With tau = t the step heights are |x - y| and the superposition collapses
        // to the 1-Lipschitz envelope of h itself.
        let m = min_superposition(&h, &stream, 5.0, 5.0, 1, (-9, 10)).unwrap();
        assert_eq!(m.value, h.at(1).unwrap());
        assert!(m.minimizers.contains(&1));
    }

    #[test]
    fn min_superposition_reconstructs_later_heights() {
        for seed in 0..20u64 {
            let stream = generate_events(seed, (-14, 14), 9.0).unwrap();
            let cfg = build_initial(
                &InitialCondition::BernoulliShock {
                    lambda: 0.35,
                    rho: 0.65,
                    ic_seed: seed + 100,
                },
                (-14, 14),
            )
            .unwrap();
            let mut sys = CoupledSystem::new(&stream, vec![cfg]).unwrap();
            sys.evolve_to(3.0).unwrap();
            let h_tau = sys.member(0).height_profile(false);
            sys.evolve_to(9.0).unwrap();
            let expect = sys.member(0).height_at(0, false).unwrap();
            let m = min_superposition(&h_tau, &stream, 3.0, 9.0, 0, (-14, 14)).unwrap();
            assert_eq!(m.value, expect, "superposition mismatch, seed {seed}");
        }
    }

    #[test]
    fn min_superposition_flags_boundary_minimizers() {
        let stream = generate_events(2, (-10, 10), 6.0).unwrap();
        let cfg = build_initial(&InitialCondition::Step { front: -5 }, (-10, 10)).unwrap();
        let sys = evolve(&stream, cfg, 2.0).unwrap();
        let h = sys.member(0).height_profile(false);
        // The height of a far-left step keeps decreasing to the left of the front,
        // so a range cut off there cannot certify its minimum.
        let res = min_superposition(&h, &stream, 2.0, 2.0, -9, (-8, -7));
        assert!(matches!(res, Err(EngineError::MinimizerOnBoundary)));
        assert!(matches!(
            min_superposition(&h, &stream, 2.0, 2.0, 0, (3, 1)),
            Err(EngineError::BadRange)
        ));
    }

    #[test]
    fn window_helper_covers_observables() {
        let (a, b) = window_for(0.0, 100.0);
        assert_eq!((a, b), (-350, 350));
        let (a, b) = window_for(-0.5, 40.0);
        assert!(a <= -20 - 170 && b >= -20 + 170);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prop_attractivity_preserved(seed in 0u64..10_000, extra in proptest::collection::vec(-8i64..8, 0..6)) {
            // eta <= zeta coordinatewise at time zero stays ordered for all later
            // times under the basic coupling.
            let window = (-8i64, 8i64);
            let low = build_initial(
                &InitialCondition::BernoulliShock { lambda: 0.2, rho: 0.5, ic_seed: seed },
                window,
            ).unwrap();
            let mut high = low.clone();
            for &x in &extra {
                high.set(x, Cell::First).unwrap();
            }
            let stream = generate_events(seed, window, 10.0).unwrap();
            let mut sys = CoupledSystem::new(&stream, vec![low, high]).unwrap();
            for k in 1..=5 {
                sys.evolve_to(2.0 * k as f64).unwrap();
                for x in window.0..=window.1 {
                    prop_assert!(
                        sys.member(0).cell(x).unwrap().eta(true) <= sys.member(1).cell(x).unwrap().eta(true)
                    );
                }
            }
        }

        #[test]
        fn prop_particle_count_conserved(seed in 0u64..5_000) {
            let window = (-10i64, 10i64);
            let cfg = build_initial(
                &InitialCondition::BernoulliShock { lambda: 0.3, rho: 0.7, ic_seed: seed },
                window,
            ).unwrap();
            let n0 = cfg.count(Cell::First);
            let stream = generate_events(seed, window, 15.0).unwrap();
            let sys = evolve(&stream, cfg, 15.0).unwrap();
            prop_assert_eq!(sys.member(0).configuration().count(Cell::First), n0);
        }
    }
}
