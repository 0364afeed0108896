//! Second-class particle tracking and pathwise identity checks.
//!
//! A two-class shock configuration `eta` with an empty origin generates a family of
//! coupled configurations, all evolved against the same clocks:
//!
//! * `eta~`: `eta` plus a second-class particle at the origin. Its position
//!   `X2nd(t)` is the unique discrepancy between `eta` and `eta + particle at 0`.
//! * `eta-`: only the particles of `eta` left of the origin.
//! * `eta+`: `eta` right of the origin, with everything left of it filled.
//! * `eta~+`: `eta+` plus the origin particle.
//! * the Y-system: first-class particles where `eta-` has one, second-class where
//!   `eta~+` exceeds `eta-`. The tracked `Y(t)` is the second-class particle that
//!   starts at the origin.
//!
//! The checks in this module are exact statements about one realization of the
//! clocks, not statistical ones: a single failure on a sample whose observables sit
//! outside the boundary cones is a bug. Samples whose cones touch the guard bands
//! are excluded and counted separately.

use crate::clockwork::{ClockError, EventStream};
use crate::engine::{observable_contaminated, window_for, CoupledSystem, EngineError};
use crate::lattice::{
    build_initial, split_minus_plus, Cell, Configuration, HeightFunction, InitialCondition,
    LatticeError, ShockParameters,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("configurations differ at {0} sites at time {1}, expected exactly one")]
    DiscrepancyCount(usize, f64),
    #[error("no discrepancy at the origin initially")]
    NoInitialDiscrepancy,
    #[error("checkpoint times must be nondecreasing")]
    BadTimes,
    #[error("origin must be empty in the base configuration")]
    OriginOccupied,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Clock(#[from] ClockError),
}

/// Shared description of a shock verification run: densities, initial-condition
/// style, and the run length that sizes the window and guard bands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockSetup {
    pub lambda: f64,
    pub rho: f64,
    /// Resolved deterministic profile when true, product-measure sampling when false.
    pub deterministic_ic: bool,
    pub t_final: f64,
}

impl ShockSetup {
    pub fn params(&self) -> Result<ShockParameters, LatticeError> {
        ShockParameters::new(self.lambda, self.rho)
    }

    pub fn window(&self) -> Result<(i64, i64), LatticeError> {
        Ok(window_for(self.params()?.v_s(), self.t_final))
    }

    pub fn guard(&self) -> f64 {
        crate::engine::guard_width(self.t_final)
    }

    /// Base two-class configuration for one sample; the dynamics seed doubles as the
    /// sampling seed (the two use unrelated generator keyings).
    pub fn base_config(&self, seed: u64) -> Result<Configuration, TrackerError> {
        let ic = if self.deterministic_ic {
            InitialCondition::ShockDeterministic {
                lambda: self.lambda,
                rho: self.rho,
            }
        } else {
            InitialCondition::BernoulliShock {
                lambda: self.lambda,
                rho: self.rho,
                ic_seed: seed,
            }
        };
        Ok(build_initial(&ic, self.window()?)?)
    }

    /// Whether an observable at `(x, t_obs)` could feel the window boundary.
    pub fn contaminated(&self, x: i64, t_obs: f64) -> Result<bool, LatticeError> {
        Ok(observable_contaminated(
            self.window()?,
            self.guard(),
            x,
            t_obs,
        ))
    }
}

/// Tags the empty origin of a two-class configuration with a second-class particle.
pub fn with_tagged_origin(cfg: &Configuration) -> Result<Configuration, TrackerError> {
    if cfg.get(0)? != Cell::Hole {
        return Err(TrackerError::OriginOccupied);
    }
    let mut tagged = cfg.clone();
    tagged.set(0, Cell::Second)?;
    Ok(tagged)
}

/// Multiclass configuration carrying `eta-` as first class and the surplus of
/// `eta~+` as second class, plus the rank of the second-class particle at the
/// origin within the ascending order of all of them.
pub fn y_system(cfg: &Configuration) -> Result<(Configuration, usize), TrackerError> {
    let split = split_minus_plus(cfg)?;
    let window = cfg.window();
    let mut sys = Configuration::empty(window)?;
    let mut rank = 0usize;
    for x in window.0..=window.1 {
        let lower = split.minus.get(x)?.eta(true);
        let upper = split.plus_upper.get(x)?.eta(true);
        if lower == 1 {
            sys.set(x, Cell::First)?;
        } else if upper == 1 {
            sys.set(x, Cell::Second)?;
            if x < 0 {
                rank += 1;
            }
        }
    }
    Ok((sys, rank))
}

/// Positions of a tracked discrepancy at requested times.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiscrepancyTrace {
    pub times: Vec<f64>,
    pub positions: Vec<i64>,
    pub source: String,
}

fn discrepancy_sites(a: &Configuration, b: &Configuration) -> Vec<i64> {
    let window = a.window();
    (window.0..=window.1)
        .filter(|&x| a.get(x).unwrap().eta(true) != b.get(x).unwrap().eta(true))
        .collect()
}

/// Evolves the pair `(eta, eta~)` and records the unique discrepancy site at each
/// requested time. The pair must differ exactly at the origin initially; any state
/// with a discrepancy count other than one aborts.
pub fn track_second_class(
    stream: &EventStream,
    eta: &Configuration,
    eta_tilde: &Configuration,
    times: &[f64],
) -> Result<DiscrepancyTrace, TrackerError> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(TrackerError::BadTimes);
    }
    let initial = discrepancy_sites(eta, eta_tilde);
    if initial != [0] {
        return Err(TrackerError::NoInitialDiscrepancy);
    }
    let mut sys = CoupledSystem::new(stream, vec![eta.clone(), eta_tilde.clone()])?;
    let mut positions = Vec::with_capacity(times.len());
    for &t in times {
        sys.evolve_to(t)?;
        let sites = discrepancy_sites(
            &sys.member(0).configuration(),
            &sys.member(1).configuration(),
        );
        if sites.len() != 1 {
            return Err(TrackerError::DiscrepancyCount(sites.len(), t));
        }
        positions.push(sites[0]);
    }
    Ok(DiscrepancyTrace {
        times: times.to_vec(),
        positions,
        source: "two-member pair".into(),
    })
}

/// Replays the pair event by event and confirms the discrepancy count is one after
/// every single event. Expensive; meant for small-instance audits.
pub fn audit_discrepancy_count(
    stream: &EventStream,
    eta: &Configuration,
    eta_tilde: &Configuration,
    horizon: f64,
) -> Result<(), TrackerError> {
    let mut sys = CoupledSystem::new(stream, vec![eta.clone(), eta_tilde.clone()])?;
    for (t, _site) in stream.merged_order() {
        if t > horizon {
            break;
        }
        sys.evolve_to(t)?;
        let sites = discrepancy_sites(
            &sys.member(0).configuration(),
            &sys.member(1).configuration(),
        );
        if sites.len() != 1 {
            return Err(TrackerError::DiscrepancyCount(sites.len(), t));
        }
    }
    Ok(())
}

/// Exact check of the two-sided height relation between a configuration and its
/// copy with one extra particle: equal up to the discrepancy, offset by two past it.
pub fn verify_shift_relation(h: &HeightFunction, h_tilde: &HeightFunction, x2nd: i64) -> bool {
    if h.x_min() != h_tilde.x_min() || h.x_end() != h_tilde.x_end() {
        return false;
    }
    for x in h.x_min()..=h.x_end() {
        let expect = if x <= x2nd {
            h.at(x).unwrap()
        } else {
            h.at(x).unwrap() - 2
        };
        if h_tilde.at(x).unwrap() != expect {
            return false;
        }
    }
    true
}

/// True when the sign pattern of `h~+ - h-` is a single down-crossing: nonnegative
/// up to some site, negative after. Attractivity makes the difference nonincreasing
/// in space, so any other pattern indicates a coupling defect.
pub fn difference_crossing_is_clean(h_minus: &HeightFunction, h_tilde_plus: &HeightFunction) -> bool {
    let mut seen_negative = false;
    for x in h_minus.x_min()..=h_minus.x_end() {
        let nonneg = h_tilde_plus.at(x).unwrap() >= h_minus.at(x).unwrap();
        if seen_negative && nonneg {
            return false;
        }
        if !nonneg {
            seen_negative = true;
        }
    }
    true
}

/// Outcome of one pathwise check on one sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub contaminated: bool,
    pub guard_jumps: u64,
    /// Human-readable mismatch descriptions; empty on pass.
    pub failures: Vec<String>,
}

impl CheckOutcome {
    fn clean() -> CheckOutcome {
        CheckOutcome {
            passed: true,
            contaminated: false,
            guard_jumps: 0,
            failures: Vec::new(),
        }
    }

    fn fail(&mut self, msg: String) {
        self.passed = false;
        self.failures.push(msg);
    }
}

/// JSONL record of all checks on one seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedVerdict {
    pub seed: u64,
    pub checks: BTreeMap<String, bool>,
    pub contaminated: bool,
    pub guard_jumps: u64,
}

const M_TAGGED: usize = 0;
const M_MINUS: usize = 1;
const M_PLUS: usize = 2;
const M_PLUS_UPPER: usize = 3;
const M_Y: usize = 4;

struct VerificationRun<'a> {
    sys: CoupledSystem<'a>,
    setup: &'a ShockSetup,
    y_rank: usize,
}

impl<'a> VerificationRun<'a> {
    fn new(
        setup: &'a ShockSetup,
        stream: &'a EventStream,
        base: &Configuration,
    ) -> Result<VerificationRun<'a>, TrackerError> {
        let split = split_minus_plus(base)?;
        let (y_cfg, y_rank) = y_system(base)?;
        let members = vec![
            with_tagged_origin(base)?,
            split.minus,
            split.plus,
            split.plus_upper,
            y_cfg,
        ];
        let sys = CoupledSystem::new(stream, members)?.with_guard(setup.t_final);
        Ok(VerificationRun { sys, setup, y_rank })
    }

    fn x2nd(&self) -> i64 {
        self.sys.member(M_TAGGED).second_positions()[0]
    }

    fn y(&self) -> i64 {
        self.sys.member(M_Y).second_positions()[self.y_rank]
    }
}

/// Runs every pathwise check at the given `(x, t)` points (times nondecreasing) on
/// one seed, inside a single lockstep replay. The shared randomness is what makes
/// the cross-member statements meaningful.
pub fn verify_all(
    setup: &ShockSetup,
    stream: &EventStream,
    seed: u64,
    pairs: &[(i64, f64)],
) -> Result<SeedVerdict, TrackerError> {
    if pairs.windows(2).any(|w| w[1].1 < w[0].1) {
        return Err(TrackerError::BadTimes);
    }
    let base = setup.base_config(seed)?;
    let mut run = VerificationRun::new(setup, stream, &base)?;

    let mut shift = CheckOutcome::clean();
    let mut identity = CheckOutcome::clean();
    let mut y_eq_x = CheckOutcome::clean();
    let mut matching = CheckOutcome::clean();
    let mut min_prop = CheckOutcome::clean();
    let mut contaminated = false;

    for &(x, t) in pairs {
        run.sys.evolve_to(t)?;
        let x2nd = run.x2nd();
        let y = run.y();
        for site in [x, x2nd, y] {
            if setup.contaminated(site, t)? {
                contaminated = true;
            }
        }

        let h = run.sys.member(M_TAGGED).height_profile(false);
        let h_tilde = run.sys.member(M_TAGGED).height_profile(true);
        let h_minus = run.sys.member(M_MINUS).height_profile(false);
        let h_plus = run.sys.member(M_PLUS).height_profile(false);
        let h_tilde_plus = run.sys.member(M_PLUS_UPPER).height_profile(false);

        if !verify_shift_relation(&h, &h_tilde, x2nd) {
            shift.fail(format!("shift relation broken at t={t}"));
        }

        let particle_event = x2nd >= x;
        let height_event = h_minus.at(x)? <= h_tilde_plus.at(x)?;
        if particle_event != height_event {
            identity.fail(format!(
                "at (x={x}, t={t}): X2nd={x2nd}, h-={}, h~+={}",
                h_minus.at(x)?,
                h_tilde_plus.at(x)?
            ));
        }
        if !difference_crossing_is_clean(&h_minus, &h_tilde_plus) {
            identity.fail(format!("difference sign pattern not monotone at t={t}"));
        }

        if y != x2nd {
            y_eq_x.fail(format!("Y={y} but X2nd={x2nd} at t={t}"));
        }

        if h_minus.at(y)? != h_tilde_plus.at(y)? {
            matching.fail(format!("heights split at Y={y}, t={t}"));
        }
        if h_minus.at(y + 1)? != h_tilde_plus.at(y + 1)? + 2 {
            matching.fail(format!("offset lost right of Y={y}, t={t}"));
        }

        if h.at(x)? != h_minus.at(x)?.min(h_plus.at(x)?) {
            min_prop.fail(format!("h not the envelope of h-/h+ at (x={x}, t={t})"));
        }
        if h_tilde.at(x)? != h_minus.at(x)?.min(h_tilde_plus.at(x)?) {
            min_prop.fail(format!("h~ not the envelope of h-/h~+ at (x={x}, t={t})"));
        }
    }

    let mut checks = BTreeMap::new();
    checks.insert("shift_relation".into(), shift.passed);
    checks.insert("distribution_identity".into(), identity.passed);
    checks.insert("y_equals_x".into(), y_eq_x.passed);
    checks.insert("height_matching".into(), matching.passed);
    checks.insert("min_property".into(), min_prop.passed);
    Ok(SeedVerdict {
        seed,
        checks,
        contaminated,
        guard_jumps: run.sys.guard_jumps(),
    })
}

/// Set identity between the tracked particle and the height comparison, checked at
/// each `(x_i, t_i)`.
pub fn verify_distribution_identity(
    setup: &ShockSetup,
    stream: &EventStream,
    seed: u64,
    pairs: &[(i64, f64)],
) -> Result<CheckOutcome, TrackerError> {
    let verdict = verify_all(setup, stream, seed, pairs)?;
    Ok(CheckOutcome {
        passed: verdict.checks["distribution_identity"],
        contaminated: verdict.contaminated,
        guard_jumps: verdict.guard_jumps,
        failures: Vec::new(),
    })
}

/// Compares the discrepancy walker of the tagged pair against the tracked
/// second-class particle of the Y-system after every event up to `horizon`.
pub fn verify_y_equals_x(
    setup: &ShockSetup,
    stream: &EventStream,
    seed: u64,
    horizon: f64,
) -> Result<CheckOutcome, TrackerError> {
    let base = setup.base_config(seed)?;
    let mut run = VerificationRun::new(setup, stream, &base)?;
    let mut outcome = CheckOutcome::clean();
    for (t, _site) in stream.merged_order() {
        if t > horizon {
            break;
        }
        run.sys.evolve_to(t)?;
        let (x2nd, y) = (run.x2nd(), run.y());
        if x2nd != y {
            outcome.fail(format!("diverged at t={t}: X2nd={x2nd}, Y={y}"));
            break;
        }
    }
    run.sys.evolve_to(horizon)?;
    let t_obs = horizon;
    outcome.contaminated = setup.contaminated(run.x2nd(), t_obs)? || setup.contaminated(run.y(), t_obs)?;
    outcome.guard_jumps = run.sys.guard_jumps();
    Ok(outcome)
}

/// Checks the two matching equalities at the tracked particle at each time.
pub fn verify_height_matching(
    setup: &ShockSetup,
    stream: &EventStream,
    seed: u64,
    times: &[f64],
) -> Result<CheckOutcome, TrackerError> {
    let pairs: Vec<(i64, f64)> = times.iter().map(|&t| (0, t)).collect();
    let verdict = verify_all(setup, stream, seed, &pairs)?;
    Ok(CheckOutcome {
        passed: verdict.checks["height_matching"] && verdict.checks["y_equals_x"],
        contaminated: verdict.contaminated,
        guard_jumps: verdict.guard_jumps,
        failures: Vec::new(),
    })
}

/// Checks both envelope identities at one `(x, t)`.
pub fn verify_min_property(
    setup: &ShockSetup,
    stream: &EventStream,
    seed: u64,
    x: i64,
    t: f64,
) -> Result<CheckOutcome, TrackerError> {
    let verdict = verify_all(setup, stream, seed, &[(x, t)])?;
    Ok(CheckOutcome {
        passed: verdict.checks["min_property"],
        contaminated: verdict.contaminated,
        guard_jumps: verdict.guard_jumps,
        failures: Vec::new(),
    })
}

/// Position of the tracked second-class particle at time `t` for one seed, using the
/// event-skipping engine; the cheap path for large statistical batches.
pub fn second_class_position(
    setup: &ShockSetup,
    seed: u64,
    t: f64,
) -> Result<(i64, bool), TrackerError> {
    let base = setup.base_config(seed)?;
    let tagged = with_tagged_origin(&base)?;
    let mut sys = crate::engine::streaming::StreamingSystem::new(seed, vec![tagged], Some(setup.t_final))?;
    sys.evolve_to(t)?;
    let pos = sys.member(0).second_positions()[0];
    Ok((pos, setup.contaminated(pos, t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clockwork::generate_events;
    use crate::engine::evolve_multiclass;

    fn small_setup(t_final: f64) -> ShockSetup {
        ShockSetup {
            lambda: 0.25,
            rho: 0.75,
            deterministic_ic: false,
            t_final,
        }
    }

    #[test]
    fn single_event_moves_the_discrepancy() {
        let stream = EventStream::from_lists(0, -2, 5.0, vec![vec![], vec![], vec![1.0], vec![], vec![]])
            .unwrap();
        let eta = Configuration::empty((-2, 2)).unwrap();
        let mut eta_tilde = eta.clone();
        eta_tilde.set(0, Cell::First).unwrap();
        let trace = track_second_class(&stream, &eta, &eta_tilde, &[0.0, 2.0]).unwrap();
        assert_eq!(trace.positions, vec![0, 1]);
        assert_eq!(trace.times, vec![0.0, 2.0]);
    }

    #[test]
    fn trace_requires_single_origin_discrepancy() {
        let stream = generate_events(0, (-3, 3), 2.0).unwrap();
        let eta = Configuration::empty((-3, 3)).unwrap();
        let mut two_off = eta.clone();
        two_off.set(0, Cell::First).unwrap();
        two_off.set(2, Cell::First).unwrap();
        assert!(matches!(
            track_second_class(&stream, &eta, &two_off, &[1.0]),
            Err(TrackerError::NoInitialDiscrepancy)
        ));
        let mut tilde = eta.clone();
        tilde.set(0, Cell::First).unwrap();
        assert!(matches!(
            track_second_class(&stream, &eta, &tilde, &[2.0, 1.0]),
            Err(TrackerError::BadTimes)
        ));
    }

    #[test]
    fn discrepancy_count_is_always_one() {
        for seed in 0..30u64 {
            let setup = small_setup(12.0);
            let window = (-30, 30);
            let base = build_initial(
                &InitialCondition::BernoulliShock {
                    lambda: setup.lambda,
                    rho: setup.rho,
                    ic_seed: seed,
                },
                window,
            )
            .unwrap();
            let mut tilde = base.clone();
            tilde.set(0, Cell::First).unwrap();
            let stream = generate_events(seed, window, 12.0).unwrap();
            audit_discrepancy_count(&stream, &base, &tilde, 12.0).unwrap();
        }
    }

    #[test]
    fn shift_relation_holds_and_detects_corruption() {
        let setup = small_setup(20.0);
        let stream = generate_events(41, setup.window().unwrap(), 20.0).unwrap();
        let base = setup.base_config(41).unwrap();
        let tagged = with_tagged_origin(&base).unwrap();
        let mut sys = CoupledSystem::new(&stream, vec![tagged]).unwrap();
        sys.evolve_to(20.0).unwrap();
        let h = sys.member(0).height_profile(false);
        let h_tilde = sys.member(0).height_profile(true);
        let x2nd = sys.member(0).second_positions()[0];
        assert!(verify_shift_relation(&h, &h_tilde, x2nd));
        assert!(!verify_shift_relation(&h, &h_tilde, x2nd + 1));
        assert!(!verify_shift_relation(&h, &h, x2nd));
    }

    #[test]
    fn y_system_layout_and_rank() {
        let window = (-4, 4);
        let base = build_initial(
            &InitialCondition::Explicit { occupied: vec![-3, 1, 2] },
            window,
        )
        .unwrap();
        let (sys, rank) = y_system(&base).unwrap();
        // eta- keeps the particle at -3; eta~+ fills -4..0 and keeps 1, 2.
        assert_eq!(sys.get(-3).unwrap(), Cell::First);
        for x in [-4, -2, -1, 0] {
            assert_eq!(sys.get(x).unwrap(), Cell::Second, "site {x}");
        }
        assert_eq!(sys.get(1).unwrap(), Cell::Second);
        assert_eq!(sys.get(2).unwrap(), Cell::Second);
        assert_eq!(sys.get(3).unwrap(), Cell::Hole);
        // Seconds below the origin: sites -4, -2, -1.
        assert_eq!(rank, 3);
        let (y_cfg, r) = y_system(&base).unwrap();
        assert_eq!(y_cfg.occupied_sites().len(), 7);
        assert_eq!(r, 3);
    }

    #[test]
    fn all_checks_pass_on_clean_samples() {
        let setup = small_setup(25.0);
        let window = setup.window().unwrap();
        let pairs = [(-3i64, 5.0f64), (0, 10.0), (2, 25.0)];
        for seed in 0..60u64 {
            let stream = generate_events(seed, window, setup.t_final).unwrap();
            let verdict = verify_all(&setup, &stream, seed, &pairs).unwrap();
            assert!(!verdict.contaminated, "seed {seed} unexpectedly contaminated");
            for (name, ok) in &verdict.checks {
                assert!(ok, "check {name} failed on seed {seed}");
            }
        }
    }

    #[test]
    fn deterministic_profile_also_passes() {
        let setup = ShockSetup {
            deterministic_ic: true,
            ..small_setup(20.0)
        };
        let window = setup.window().unwrap();
        for seed in 0..20u64 {
            let stream = generate_events(seed, window, setup.t_final).unwrap();
            let verdict = verify_all(&setup, &stream, seed, &[(0, 10.0), (4, 20.0)]).unwrap();
            assert!(verdict.checks.values().all(|&v| v), "seed {seed}");
        }
    }

    #[test]
    fn y_trace_matches_discrepancy_at_every_event() {
        let setup = small_setup(15.0);
        let window = setup.window().unwrap();
        for seed in 0..25u64 {
            let stream = generate_events(seed, window, setup.t_final).unwrap();
            let outcome = verify_y_equals_x(&setup, &stream, seed, 15.0).unwrap();
            assert!(outcome.passed, "seed {seed}: {:?}", outcome.failures);
        }
    }

    #[test]
    fn mismatched_streams_break_the_y_identity() {
        let setup = small_setup(30.0);
        let window = setup.window().unwrap();
        let mut diverged = 0;
        for seed in 0..20u64 {
            let base = setup.base_config(seed).unwrap();
            let tagged = with_tagged_origin(&base).unwrap();
            let (y_cfg, rank) = y_system(&base).unwrap();
            let stream_a = generate_events(seed, window, 30.0).unwrap();
            let stream_b = generate_events(seed + 10_000, window, 30.0).unwrap();
            let a = evolve_multiclass(&stream_a, tagged, 30.0).unwrap();
            let b = evolve_multiclass(&stream_b, y_cfg, 30.0).unwrap();
            if a.second_positions[0] != b.second_positions[rank] {
                diverged += 1;
            }
        }
        assert!(diverged > 10, "only {diverged} of 20 mismatched-stream pairs diverged");
    }

    #[test]
    fn height_matching_and_min_property_wrappers() {
        let setup = small_setup(18.0);
        let window = setup.window().unwrap();
        let stream = generate_events(77, window, setup.t_final).unwrap();
        let m = verify_height_matching(&setup, &stream, 77, &[4.0, 9.0, 18.0]).unwrap();
        assert!(m.passed && !m.contaminated);
        let p = verify_min_property(&setup, &stream, 77, -2, 18.0).unwrap();
        assert!(p.passed);
        let d = verify_distribution_identity(&setup, &stream, 77, &[(0, 9.0), (3, 18.0)]).unwrap();
        assert!(d.passed);
    }

    #[test]
    fn left_region_minimum_comes_from_the_left_heights() {
        // Far left of the shock front the lower envelope should almost always be
        // the left-only height.
        let setup = small_setup(30.0);
        let window = setup.window().unwrap();
        let mut attained = 0;
        let n = 80;
        for seed in 0..n {
            let base = setup.base_config(seed).unwrap();
            let split = split_minus_plus(&base).unwrap();
            let stream = generate_events(seed, window, 30.0).unwrap();
            let mut sys =
                CoupledSystem::new(&stream, vec![split.minus, split.plus]).unwrap();
            sys.evolve_to(30.0).unwrap();
            let x = -45;
            let hm = sys.member(0).height_at(x, false).unwrap();
            let hp = sys.member(1).height_at(x, false).unwrap();
            if hm <= hp {
                attained += 1;
            }
        }
        assert!(attained as f64 >= 0.9 * n as f64, "only {attained}/{n}");
    }

    #[test]
    fn streaming_position_agrees_with_replay() {
        let setup = small_setup(20.0);
        let window = setup.window().unwrap();
        for seed in 0..20u64 {
            let (pos, contaminated) = second_class_position(&setup, seed, 20.0).unwrap();
            let base = setup.base_config(seed).unwrap();
            let tagged = with_tagged_origin(&base).unwrap();
            let stream = generate_events(seed, window, 20.0).unwrap();
            let state = evolve_multiclass(&stream, tagged, 20.0).unwrap();
            assert_eq!(pos, state.second_positions[0], "seed {seed}");
            assert!(!contaminated);
        }
    }

    #[test]
    fn verdicts_serialize_to_json_lines() {
        let setup = small_setup(10.0);
        let window = setup.window().unwrap();
        let stream = generate_events(5, window, 10.0).unwrap();
        let verdict = verify_all(&setup, &stream, 5, &[(0, 10.0)]).unwrap();
        let line = serde_json::to_string(&verdict).unwrap();
        assert!(line.contains("\"seed\":5"));
        assert!(line.contains("min_property"));
        let back: SeedVerdict = serde_json::from_str(&line).unwrap();
        assert_eq!(back.checks.len(), 5);
    }
}
