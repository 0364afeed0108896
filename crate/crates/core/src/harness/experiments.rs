//! The statistical experiments: pathwise identity verification at scale, shock
//! position scaling and limit-law comparisons, height decoupling across the front,
//! two-time decorrelation along characteristics, backwards-path diagnostics, and
//! the wedge-profile edge law. Every run derives its trajectory seeds from the
//! config's seed base, so parallel and serial executions produce identical
//! reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::clockwork::{generate_events, EventStream};
use crate::engine::streaming::StreamingSystem;
use crate::engine::{window_for, CoupledSystem, LogView};
use crate::geodesics::{
    build_backwards_path, check_path_ordering, check_step_domination,
    endpoint_control_statistics, localization_statistics, verify_geodesic_property, BackwardsPath,
    PathVariant,
};
use crate::lattice::{
    build_initial, height_profile, split_minus_plus, InitialCondition, ShockParameters,
};
use crate::limits::{
    f_goe, goe_table, gue_table, parallel_map_indexed, shock_table, uniform_grid,
    DistributionTable,
};
use crate::tracker::{
    second_class_position, verify_all, with_tagged_origin, SeedVerdict, ShockSetup,
};

use super::config::ExperimentConfig;
use super::report::{ensure_dir, write_csv, write_jsonl, StatReport};
use super::stats;
use super::HarnessError;

fn shock_setup(cfg: &ExperimentConfig, t_final: f64) -> ShockSetup {
    ShockSetup {
        lambda: cfg.lambda,
        rho: cfg.rho,
        deterministic_ic: cfg.deterministic_ic,
        t_final,
    }
}

fn require_samples(got: usize, need: usize) -> Result<(), HarnessError> {
    if got < need {
        return Err(HarnessError::InsufficientSamples { need, got });
    }
    Ok(())
}

fn contamination_check(report: &mut StatReport, cfg: &ExperimentConfig) {
    let rate = report.contaminated as f64 / report.total_samples.max(1) as f64;
    report.check(
        "contamination_rate",
        rate <= cfg.thresholds.contamination_rate,
        rate,
        cfg.thresholds.contamination_rate,
        "fraction of trajectories with window-edge influence at an observable",
    );
}

/// Runs every pathwise check over a batch of seeds, at all checkpoint pairs from
/// the config, and writes one verdict line per seed. A zero-sample run reports a
/// vacuous pass and says so.
pub fn run_identity_suite(cfg: &ExperimentConfig) -> Result<StatReport, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = StatReport::new(&format!("{}-identity", cfg.experiment));
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let report_path = dir.join(format!("{}-identity-report.json", cfg.experiment));
    if cfg.samples == 0 {
        report.check(
            "identity_failures",
            true,
            0.0,
            0.0,
            "vacuous: zero samples requested, nothing was checked",
        );
        report.runtime_seconds = start.elapsed().as_secs_f64();
        report.write_json(&report_path)?;
        return Ok(report);
    }
    let t_max = *cfg.t_grid.last().unwrap();
    let setup = shock_setup(cfg, t_max);
    let window = setup.window()?;
    let mut pairs = Vec::new();
    for &t in &cfg.t_grid {
        for &x in &cfg.x_checkpoints {
            pairs.push((x, t));
        }
    }
    let results = parallel_map_indexed(cfg.samples, |k| -> Result<SeedVerdict, HarnessError> {
        let seed = stats::derive_seed(cfg.seed_base, k as u64);
        let stream = generate_events(seed, window, t_max)?;
        Ok(verify_all(&setup, &stream, seed, &pairs)?)
    });
    let mut verdicts = Vec::with_capacity(cfg.samples);
    for r in results {
        verdicts.push(r?);
    }
    let contaminated = verdicts.iter().filter(|v| v.contaminated).count();
    let failures = verdicts
        .iter()
        .filter(|v| !v.contaminated && v.checks.values().any(|&pass| !pass))
        .count();
    write_jsonl(
        dir.join(format!("{}-identity-verdicts.jsonl", cfg.experiment)),
        &verdicts,
    )?;
    report.total_samples = cfg.samples;
    report.contaminated = contaminated;
    report.check(
        "identity_failures",
        failures == 0,
        failures as f64,
        0.0,
        "uncontaminated trajectories failing any pathwise check (must be zero)",
    );
    contamination_check(&mut report, cfg);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.write_json(&report_path)?;
    Ok(report)
}

/// Negative control for the identity suite: the tracked position is replayed from
/// a tampered copy of the event stream (every clock in a band around the origin
/// deleted, which freezes the tracked particle), while the height profiles come
/// from the clean stream. Detection succeeds exactly when the clean position has
/// moved off the origin, so most seeds must detect the tampering.
pub fn corrupted_replay_detected(cfg: &ExperimentConfig, seed: u64) -> Result<bool, HarnessError> {
    cfg.validate()?;
    let t = 100.0;
    let setup = shock_setup(cfg, t);
    let window = setup.window()?;
    let base = setup.base_config(seed)?;
    let stream = generate_events(seed, window, t)?;

    let split = split_minus_plus(&base)?;
    let mut clean = CoupledSystem::new(&stream, vec![split.minus, split.plus_upper])?;
    clean.evolve_to(t)?;
    let h_minus = clean.member(0).height_profile(false);
    let h_tilde_plus = clean.member(1).height_profile(false);

    let mut lists: Vec<Vec<f64>> = (window.0..=window.1)
        .map(|x| stream.site(x).expect("site inside window").to_vec())
        .collect();
    for x in -6..=5_i64 {
        lists[(x - window.0) as usize].clear();
    }
    let tampered = EventStream::from_lists(seed, window.0, t, lists)?;
    let mut corrupt = CoupledSystem::new(&tampered, vec![with_tagged_origin(&base)?])?;
    corrupt.evolve_to(t)?;
    let claimed = corrupt.member(0).second_positions()[0];

    for x in [-2_i64, -1, 0, 1, 2] {
        let particle_event = claimed >= x;
        let height_event = h_minus.at(x)? <= h_tilde_plus.at(x)?;
        if particle_event != height_event {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Rescaled tracked-position samples at one observation time.
#[derive(Debug, Clone)]
pub struct PositionBatch {
    pub t: f64,
    pub rescaled: Vec<f64>,
    pub contaminated: usize,
}

fn position_batch_at(cfg: &ExperimentConfig, j: usize) -> Result<PositionBatch, HarnessError> {
    let t = cfg.t_grid[j];
    let setup = shock_setup(cfg, t);
    let v_s = ShockParameters::new(cfg.lambda, cfg.rho)?.v_s();
    let t13 = t.cbrt();
    let results = parallel_map_indexed(cfg.samples, |k| {
        let seed = stats::derive_seed(cfg.seed_base, (j * cfg.samples + k) as u64);
        second_class_position(&setup, seed, t)
    });
    let mut rescaled = Vec::with_capacity(cfg.samples);
    let mut contaminated = 0;
    for r in results {
        let (pos, dirty) = r?;
        if dirty {
            contaminated += 1;
        } else {
            rescaled.push((pos as f64 - v_s * t) / t13);
        }
    }
    Ok(PositionBatch {
        t,
        rescaled,
        contaminated,
    })
}

/// One batch of tracked front positions per grid time, each sample rescaled to
/// (x - v_s t) / t^(1/3), with per-trajectory derived seeds.
pub fn shock_position_batches(cfg: &ExperimentConfig) -> Result<Vec<PositionBatch>, HarnessError> {
    cfg.validate()?;
    require_samples(cfg.samples, 2)?;
    (0..cfg.t_grid.len())
        .map(|j| position_batch_at(cfg, j))
        .collect()
}

fn scaling_report(
    cfg: &ExperimentConfig,
    batches: &[PositionBatch],
    start: Instant,
) -> Result<StatReport, HarnessError> {
    let mut report = StatReport::new(&format!("{}-scaling", cfg.experiment));
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let mut ln_t = Vec::new();
    let mut ln_var = Vec::new();
    let mut rows = Vec::new();
    let mut resolved = true;
    for b in batches {
        require_samples(b.rescaled.len(), 2)?;
        let (var_resc, hw_resc) = stats::variance_ci(&b.rescaled);
        let scale = b.t.powf(2.0 / 3.0);
        let (var, hw) = (var_resc * scale, hw_resc * scale);
        report.estimate(&format!("variance_t{:.0}", b.t), var, hw, b.rescaled.len());
        resolved &= hw < var;
        ln_t.push(b.t.ln());
        ln_var.push(var.ln());
        rows.push(format!(
            "{:.6e},{:.6e},{:.6e},{}",
            b.t,
            var,
            hw,
            b.rescaled.len()
        ));
        report.contaminated += b.contaminated;
        report.total_samples += b.rescaled.len() + b.contaminated;
    }
    write_csv(
        dir.join(format!("{}-scaling-variance.csv", cfg.experiment)),
        "t,variance,half_width,n",
        &rows,
    )?;
    if batches.len() >= 2 {
        let (slope, slope_se) = stats::slope_fit(&ln_t, &ln_var);
        report.estimate("variance_slope", slope, 1.96 * slope_se, batches.len());
        report.check(
            "variance_slope",
            (slope - 2.0 / 3.0).abs() <= cfg.thresholds.slope_tol,
            (slope - 2.0 / 3.0).abs(),
            cfg.thresholds.slope_tol,
            "deviation of the log-log variance growth exponent from 2/3",
        );
    }
    report.check(
        "variance_resolved",
        resolved,
        if resolved { 1.0 } else { 0.0 },
        1.0,
        "every per-time variance interval stays clear of zero (1 = yes)",
    );
    let last = batches.last().unwrap();
    let (mean, mean_hw) = stats::mean_ci(&last.rescaled);
    report.estimate("rescaled_mean", mean, mean_hw, last.rescaled.len());
    report.check(
        "rescaled_mean",
        mean.abs() <= cfg.thresholds.mean_tol,
        mean.abs(),
        cfg.thresholds.mean_tol,
        "mean of (x - v_s t) / t^(1/3) at the largest time",
    );
    contamination_check(&mut report, cfg);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.write_json(dir.join(format!("{}-scaling-report.json", cfg.experiment)))?;
    Ok(report)
}

fn limit_report(
    cfg: &ExperimentConfig,
    batch: &PositionBatch,
    start: Instant,
) -> Result<StatReport, HarnessError> {
    let mut report = StatReport::new(&format!("{}-limit", cfg.experiment));
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    require_samples(batch.rescaled.len(), 2)?;
    let n = batch.rescaled.len();
    let params = ShockParameters::new(cfg.lambda, cfg.rho)?;
    let table = shock_table(cfg.lambda, cfg.rho)?;
    let ks = stats::ks_distance_to_table(&batch.rescaled, &table);
    report.ks.insert("shock-position".into(), ks);
    report.check(
        "limit_law_ks",
        ks <= cfg.thresholds.ks_limit_law,
        ks,
        cfg.thresholds.ks_limit_law,
        &format!("KS distance to the tabulated law at t = {:.0}", batch.t),
    );

    // A deliberately wrong reference: the law of a single rescaled edge height,
    // which shares the fluctuation scale but sits at a shifted mean. The sample
    // must fit it strictly worse than the tabulated difference law.
    let beta = 0.5_f64.cbrt() / params.chi_minus().powf(2.0 / 3.0);
    let gap = 2.0 * (cfg.rho - cfg.lambda);
    let wrong = DistributionTable::build(
        "single-edge-marginal",
        &format!("lambda={},rho={}", cfg.lambda, cfg.rho),
        table.order,
        uniform_grid(-8.0, 8.0, 0.01),
        |s| f_goe(beta * gap * s),
    );
    let ks_wrong = stats::ks_distance_to_table(&batch.rescaled, &wrong);
    report.ks.insert("single-edge-marginal".into(), ks_wrong);
    report.check(
        "wrong_law_separation",
        ks_wrong > ks,
        ks_wrong - ks,
        0.0,
        "margin by which the wrong reference fits worse (must be positive)",
    );

    let (mean, mean_hw) = stats::mean_ci(&batch.rescaled);
    let (var, var_hw) = stats::variance_ci(&batch.rescaled);
    let med = stats::median(&batch.rescaled);
    report.estimate("rescaled_mean", mean, mean_hw, n);
    report.estimate("rescaled_variance", var, var_hw, n);
    report.estimate("rescaled_median", med, 0.0, n);
    if (params.chi_minus() - params.chi_plus()).abs() < 1e-12 {
        report.check(
            "median_centered",
            med.abs() <= cfg.thresholds.median_tol,
            med.abs(),
            cfg.thresholds.median_tol,
            "median of the rescaled position under symmetric densities",
        );
    }
    report.contaminated = batch.contaminated;
    report.total_samples = n + batch.contaminated;
    contamination_check(&mut report, cfg);

    let mut sorted = batch.rescaled.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rows: Vec<String> = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{v:.6e},{:.6e}", (i + 1) as f64 / n as f64))
        .collect();
    write_csv(
        dir.join(format!("{}-limit-empirical.csv", cfg.experiment)),
        "value,ecdf",
        &rows,
    )?;
    table.to_csv(dir.join(format!("{}-limit-table.csv", cfg.experiment)))?;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.write_json(dir.join(format!("{}-limit-report.json", cfg.experiment)))?;
    Ok(report)
}

/// Variance growth of the tracked front position across the time grid.
pub fn run_scaling_experiment(cfg: &ExperimentConfig) -> Result<StatReport, HarnessError> {
    let start = Instant::now();
    let batches = shock_position_batches(cfg)?;
    scaling_report(cfg, &batches, start)
}

/// Distribution of the rescaled front position at the largest grid time, compared
/// against the tabulated limit law.
pub fn run_limit_comparison(cfg: &ExperimentConfig) -> Result<StatReport, HarnessError> {
    cfg.validate()?;
    require_samples(cfg.samples, 2)?;
    let start = Instant::now();
    let batch = position_batch_at(cfg, cfg.t_grid.len() - 1)?;
    limit_report(cfg, &batch, start)
}

/// Both position experiments off one shared set of batches, so the largest-time
/// samples are simulated once.
pub fn run_scaling_and_limit(
    cfg: &ExperimentConfig,
) -> Result<(StatReport, StatReport), HarnessError> {
    let start = Instant::now();
    let batches = shock_position_batches(cfg)?;
    let scaling = scaling_report(cfg, &batches, start)?;
    let limit = limit_report(cfg, batches.last().unwrap(), Instant::now())?;
    Ok((scaling, limit))
}

/// Observation geometry shared by the two-point and two-time experiments: the
/// early observation points sit at time t - t^nu, tilted off the front position by
/// the local characteristic slopes; the late point sits at time t + tau t^(2/3).
/// Heights are recentered by the macroscopic growth and divided by -t^(1/3).
struct TwoPointFrame {
    t13: f64,
    t_obs: f64,
    t_pre: f64,
    x_minus: i64,
    x_plus: i64,
    x_probe: i64,
    x_late: i64,
    center_minus: f64,
    center_plus: f64,
    two_time_center: f64,
}

fn two_point_frame(cfg: &ExperimentConfig, t: f64) -> Result<TwoPointFrame, HarnessError> {
    let p = ShockParameters::new(cfg.lambda, cfg.rho)?;
    let tau = cfg.tau_grid[0];
    let s = cfg.s_grid[0];
    let t13 = t.cbrt();
    let t23 = t13 * t13;
    let t_nu = t.powf(cfg.nu);
    let back = tau * t23 + t_nu;
    let t_obs = t + tau * t23;
    let t_pre = t - t_nu;
    if !(t_pre > 0.0) {
        return Err(HarnessError::Config(format!(
            "t = {t} is too small for nu = {}",
            cfg.nu
        )));
    }
    let (v, mu) = (p.v_s(), p.mu_s());
    let (cm, cp) = (p.chi_minus(), p.chi_plus());
    let x_minus = (v * t_obs - (1.0 - 2.0 * cfg.lambda) * back).round() as i64;
    let x_plus = (v * t_obs - (1.0 - 2.0 * cfg.rho) * back).round() as i64;
    let x_late = (v * t_obs + s * t13).round() as i64;
    let x_probe = x_minus + (t13.round() as i64).max(1);
    let center_minus =
        mu * t_obs - (1.0 - 2.0 * cm) * back - (1.0 - 2.0 * cfg.lambda) * s * t13;
    let center_plus = mu * t_obs - (1.0 - 2.0 * cp) * back - (1.0 - 2.0 * cfg.rho) * s * t13;
    let two_time_center = (1.0 - 2.0 * cm) * back + (1.0 - 2.0 * cfg.lambda) * s * t13;
    Ok(TwoPointFrame {
        t13,
        t_obs,
        t_pre,
        x_minus,
        x_plus,
        x_probe,
        x_late,
        center_minus,
        center_plus,
        two_time_center,
    })
}

/// Whether a backwards path stays strictly on its own side of the moving front:
/// left of v_s * ell at every time for the left profile, right of it for the
/// right profile. Piecewise constancy reduces each span to its two endpoints.
fn path_confined(path: &BackwardsPath, v_s: f64, left_side: bool) -> bool {
    let bp = &path.breakpoints;
    for i in 0..bp.len() {
        let (hi, pos) = bp[i];
        let lo = if i + 1 < bp.len() { bp[i + 1].0 } else { 0.0 };
        let p = pos as f64;
        let ok = if left_side {
            p < v_s * lo && p < v_s * hi
        } else {
            p > v_s * lo && p > v_s * hi
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Couples the two one-sided profiles through shared clocks and tests that their
/// rescaled heights, read off left and right of the front shortly before the final
/// time, are uncorrelated within the configured band. Also reports the fraction of
/// backwards paths confined to their own side, and a same-side probe correlation
/// that should sit near one (the discriminative control).
pub fn run_independence_check(cfg: &ExperimentConfig) -> Result<StatReport, HarnessError> {
    cfg.validate()?;
    require_samples(cfg.samples, 2)?;
    let start = Instant::now();
    let mut report = StatReport::new(&format!("{}-independence", cfg.experiment));
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let t = *cfg.t_grid.last().unwrap();
    let frame = two_point_frame(cfg, t)?;
    let setup = shock_setup(cfg, frame.t_obs);

    type Obs = (f64, f64, f64, f64, bool);
    let results = parallel_map_indexed(cfg.samples, |k| -> Result<Obs, HarnessError> {
        let seed = stats::derive_seed(cfg.seed_base, k as u64);
        let base = setup.base_config(seed)?;
        let split = split_minus_plus(&base)?;
        let mut sys = StreamingSystem::new(
            seed,
            vec![split.minus, split.plus_upper],
            Some(setup.t_final),
        )?;
        sys.evolve_to(frame.t_pre)?;
        let h_m = sys.member(0).height_at(frame.x_minus, false)? as f64;
        let h_p = sys.member(1).height_at(frame.x_plus, false)? as f64;
        let h_probe = sys.member(0).height_at(frame.x_probe, false)? as f64;
        let z_m = (frame.center_minus - h_m) / frame.t13;
        let z_p = (frame.center_plus - h_p) / frame.t13;
        let dirty = setup.contaminated(frame.x_minus, frame.t_pre)?
            || setup.contaminated(frame.x_plus, frame.t_pre)?;
        Ok((z_m, z_p, h_m, h_probe, dirty))
    });
    let mut z_minus = Vec::new();
    let mut z_plus = Vec::new();
    let mut h_seen = Vec::new();
    let mut h_probe = Vec::new();
    let mut contaminated = 0;
    for r in results {
        let (zm, zp, hm, hp, dirty) = r?;
        if dirty {
            contaminated += 1;
        } else {
            z_minus.push(zm);
            z_plus.push(zp);
            h_seen.push(hm);
            h_probe.push(hp);
        }
    }
    let n = z_minus.len();
    require_samples(n, 2)?;
    let corr = stats::pearson_corr(&z_minus, &z_plus);
    let band = cfg.thresholds.corr_band_factor / (n as f64).sqrt();
    report.estimate("cross_correlation", corr, band, n);
    report.check(
        "cross_correlation",
        corr.abs() <= band,
        corr.abs(),
        band,
        "two-sided rescaled heights; the band is corr_band_factor / sqrt(N)",
    );
    let probe = stats::pearson_corr(&h_seen, &h_probe);
    report.estimate(
        "same_side_probe_correlation",
        probe,
        1.0 / (n as f64).sqrt(),
        n,
    );
    report.contaminated = contaminated;
    report.total_samples = cfg.samples;

    if cfg.path_samples > 0 {
        let window = setup.window()?;
        let v_s = ShockParameters::new(cfg.lambda, cfg.rho)?.v_s();
        let confined =
            parallel_map_indexed(cfg.path_samples, |k| -> Result<(bool, bool), HarnessError> {
                let seed = stats::derive_seed(cfg.seed_base, (cfg.samples + k) as u64);
                let base = setup.base_config(seed)?;
                let split = split_minus_plus(&base)?;
                let stream = generate_events(seed, window, frame.t_pre)?;
                let mut sys =
                    CoupledSystem::new(&stream, vec![split.minus, split.plus_upper])?.with_log(
                        vec![
                            LogView {
                                member: 0,
                                upper: false,
                            },
                            LogView {
                                member: 1,
                                upper: false,
                            },
                        ],
                    )?;
                sys.evolve_to(frame.t_pre)?;
                let log = sys.into_log().expect("log was requested");
                let pm = build_backwards_path(
                    &stream,
                    &log,
                    0,
                    frame.x_minus,
                    frame.t_pre,
                    PathVariant::Rightmost,
                )?;
                let pp = build_backwards_path(
                    &stream,
                    &log,
                    1,
                    frame.x_plus,
                    frame.t_pre,
                    PathVariant::Rightmost,
                )?;
                Ok((
                    path_confined(&pm, v_s, true),
                    path_confined(&pp, v_s, false),
                ))
            });
        let mut ok_minus = 0;
        let mut ok_plus = 0;
        for r in confined {
            let (m, p) = r?;
            ok_minus += m as usize;
            ok_plus += p as usize;
        }
        let (fm, hm) = stats::fraction_ci(ok_minus, cfg.path_samples);
        let (fp, hp) = stats::fraction_ci(ok_plus, cfg.path_samples);
        report.estimate("confined_minus", fm, hm, cfg.path_samples);
        report.estimate("confined_plus", fp, hp, cfg.path_samples);
    }

    let rows: Vec<String> = z_minus
        .iter()
        .zip(&z_plus)
        .map(|(a, b)| format!("{a:.6e},{b:.6e}"))
        .collect();
    write_csv(
        dir.join(format!("{}-independence-samples.csv", cfg.experiment)),
        "z_minus,z_plus",
        &rows,
    )?;
    contamination_check(&mut report, cfg);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.write_json(dir.join(format!("{}-independence-report.json", cfg.experiment)))?;
    Ok(report)
}

/// Measures two-time height differences along the left characteristic: the height
/// at the early tilted point against the height at the late point, centered by the
/// macroscopic growth between them. Exceedances at scale t^(1/3) must not grow
/// along the time grid; the difference itself lives at scale t^(nu/3).
pub fn run_slow_decorrelation(cfg: &ExperimentConfig) -> Result<StatReport, HarnessError> {
    cfg.validate()?;
    require_samples(cfg.samples, 2)?;
    let start = Instant::now();
    let mut report = StatReport::new(&format!("{}-slowdec", cfg.experiment));
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let mut rows = Vec::new();
    let mut exceed: Vec<Vec<f64>> = vec![Vec::new(); cfg.epsilons.len()];
    for (j, &t) in cfg.t_grid.iter().enumerate() {
        let frame = two_point_frame(cfg, t)?;
        let setup = shock_setup(cfg, frame.t_obs);
        let results = parallel_map_indexed(cfg.samples, |k| -> Result<(f64, bool), HarnessError> {
            let seed = stats::derive_seed(cfg.seed_base, (j * cfg.samples + k) as u64);
            let base = setup.base_config(seed)?;
            let split = split_minus_plus(&base)?;
            let mut sys =
                StreamingSystem::new(seed, vec![split.minus], Some(setup.t_final))?;
            sys.evolve_to(frame.t_pre)?;
            let h_early = sys.member(0).height_at(frame.x_minus, false)? as f64;
            sys.evolve_to(frame.t_obs)?;
            let h_late = sys.member(0).height_at(frame.x_late, false)? as f64;
            let diff = h_late - h_early - frame.two_time_center;
            let dirty = setup.contaminated(frame.x_minus, frame.t_pre)?
                || setup.contaminated(frame.x_late, frame.t_obs)?;
            Ok((diff, dirty))
        });
        let mut diffs = Vec::with_capacity(cfg.samples);
        let mut contaminated = 0;
        for r in results {
            let (d, dirty) = r?;
            if dirty {
                contaminated += 1;
            } else {
                diffs.push(d);
            }
        }
        let n = diffs.len();
        require_samples(n, 2)?;
        let scale_nu = t.powf(cfg.nu / 3.0);
        let normalized: Vec<f64> = diffs.iter().map(|d| d / scale_nu).collect();
        let (var, var_hw) = stats::variance_ci(&normalized);
        let sd = var.sqrt();
        let sd_hw = if sd > 0.0 { var_hw / (2.0 * sd) } else { 0.0 };
        report.estimate(&format!("normalized_spread_t{t:.0}"), sd, sd_hw, n);
        for (e_idx, &eps) in cfg.epsilons.iter().enumerate() {
            let count = diffs.iter().filter(|d| d.abs() >= eps * frame.t13).count();
            let (p, hw) = stats::fraction_ci(count, n);
            exceed[e_idx].push(p);
            report.estimate(&format!("exceedance_t{t:.0}_eps{eps}"), p, hw, n);
            rows.push(format!("{t:.6e},{eps:.6e},{p:.6e},{hw:.6e},{n}"));
        }
        report.contaminated += contaminated;
        report.total_samples += cfg.samples;
    }
    for (e_idx, &eps) in cfg.epsilons.iter().enumerate() {
        let ps = &exceed[e_idx];
        if ps.len() >= 2 {
            let worst_rise = ps
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max);
            report.check(
                &format!("exceedance_monotone_eps{eps}"),
                worst_rise <= 0.0,
                worst_rise,
                0.0,
                "largest rise of the exceedance probability along the time grid",
            );
        }
    }
    write_csv(
        dir.join(format!("{}-slowdec-exceedance.csv", cfg.experiment)),
        "t,epsilon,probability,half_width,n",
        &rows,
    )?;
    contamination_check(&mut report, cfg);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.write_json(dir.join(format!("{}-slowdec-report.json", cfg.experiment)))?;
    Ok(report)
}

/// Grows the wedge profile to the largest grid time and compares the rescaled
/// origin height against the tabulated edge law, in mean and in KS distance. The
/// reference mean is the tabulated law's own mean, so no constant is baked in.
pub fn run_step_law(cfg: &ExperimentConfig) -> Result<StatReport, HarnessError> {
    cfg.validate()?;
    require_samples(cfg.samples, 2)?;
    let start = Instant::now();
    let mut report = StatReport::new(&format!("{}-step", cfg.experiment));
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let t = *cfg.t_grid.last().unwrap();
    let window = window_for(0.0, t);
    let scale = 2.0_f64.cbrt() / t.cbrt();
    let results = parallel_map_indexed(cfg.samples, |k| -> Result<f64, HarnessError> {
        let seed = stats::derive_seed(cfg.seed_base, k as u64);
        let wedge = build_initial(&InitialCondition::Step { front: 0 }, window)?;
        let mut sys = StreamingSystem::new(seed, vec![wedge], None)?;
        sys.evolve_to(t)?;
        let h = sys.member(0).height_at(0, false)? as f64;
        Ok((0.5 * t - h) * scale)
    });
    let mut samples = Vec::with_capacity(cfg.samples);
    for r in results {
        samples.push(r?);
    }
    let table = gue_table()?;
    let (table_mean, _) = table.mean_variance();
    let (mean, mean_hw) = stats::mean_ci(&samples);
    let ks = stats::ks_distance_to_table(&samples, &table);
    report.ks.insert("edge-law".into(), ks);
    report.estimate("rescaled_mean", mean, mean_hw, samples.len());
    report.check(
        "step_mean",
        (mean - table_mean).abs() <= cfg.thresholds.step_mean_tol,
        (mean - table_mean).abs(),
        cfg.thresholds.step_mean_tol,
        &format!("distance of the sample mean from the tabulated mean {table_mean:.4}"),
    );
    report.check(
        "step_ks",
        ks <= cfg.thresholds.ks_step_law,
        ks,
        cfg.thresholds.ks_step_law,
        &format!("KS distance of the rescaled origin height at t = {t:.0}"),
    );
    report.total_samples = samples.len();
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.write_json(dir.join(format!("{}-step-report.json", cfg.experiment)))?;
    Ok(report)
}

/// Upper bound on localization sample counts; deviation tails stabilize long
/// before path reconstruction runs out of seeds.
const LOCALIZATION_SAMPLES_MAX: usize = 400;

/// Backwards-path diagnostics: exact height reconstruction along rebuilt paths,
/// pointwise ordering in the anchor, domination by the wedge path, deviation
/// tails around the characteristic, and endpoint control for the two one-sided
/// profiles. Path checks run at the first grid time; the deviation tail runs at
/// the second grid time when one is present.
pub fn run_geodesic_suite(cfg: &ExperimentConfig) -> Result<StatReport, HarnessError> {
    cfg.validate()?;
    require_samples(cfg.path_samples, 1)?;
    let start = Instant::now();
    let mut report = StatReport::new(&format!("{}-geodesics", cfg.experiment));
    let dir = cfg.resolved_output_dir();
    ensure_dir(&dir)?;
    let t_path = cfg.t_grid[0];
    let t_loc = cfg.t_grid.get(1).copied().unwrap_or(t_path);
    let setup = shock_setup(cfg, t_path);
    let window = setup.window()?;
    let times: Vec<f64> = [0.12, 0.35, 0.58, 0.81]
        .iter()
        .map(|f| f * t_path)
        .collect();

    type Outcome = (usize, bool, bool);
    let outcomes = parallel_map_indexed(cfg.path_samples, |k| -> Result<Outcome, HarnessError> {
        let seed = stats::derive_seed(cfg.seed_base, k as u64);
        let stream = generate_events(seed, window, t_path)?;
        let wedge_cfg = build_initial(&InitialCondition::Step { front: 0 }, window)?;
        let minus_cfg = split_minus_plus(&setup.base_config(seed)?)?.minus;
        let wedge_h = height_profile(&wedge_cfg, 0, 0, false)?;
        let minus_h = height_profile(&minus_cfg, 0, 0, false)?;
        let mut sys = CoupledSystem::new(&stream, vec![minus_cfg, wedge_cfg])?.with_log(vec![
            LogView {
                member: 0,
                upper: false,
            },
            LogView {
                member: 1,
                upper: false,
            },
        ])?;
        sys.evolve_to(t_path)?;
        let log = sys.into_log().expect("log was requested");
        let anchor = (k % 7) as i64 - 3;
        let path =
            build_backwards_path(&stream, &log, 1, anchor, t_path, PathVariant::Rightmost)?;
        let mut exact = 0;
        for &tau in &times {
            if verify_geodesic_property(&stream, &log, 1, &wedge_h, &path, &[tau])? {
                exact += 1;
            }
        }
        let x1 = -1 - (k % 4) as i64;
        let x2 = (k % 3) as i64;
        let ordered = check_path_ordering(&stream, &log, 1, x1, x2, t_path)?;
        let dominated =
            check_step_domination(&stream, &log, 0, 1, &minus_h, (k % 5) as i64 - 2, t_path)?;
        Ok((exact, ordered, dominated))
    });
    let mut pair_failures = 0;
    let mut unordered = 0;
    let mut undominated = 0;
    for r in outcomes {
        let (exact, ordered, dominated) = r?;
        pair_failures += times.len() - exact;
        unordered += !ordered as usize;
        undominated += !dominated as usize;
    }
    let pairs_total = cfg.path_samples * times.len();
    report.check(
        "geodesic_reconstruction",
        pair_failures == 0,
        pair_failures as f64,
        0.0,
        &format!("height mismatches along rebuilt paths over {pairs_total} (seed, time) pairs"),
    );
    report.check(
        "path_ordering",
        unordered == 0,
        unordered as f64,
        0.0,
        "anchor pairs x1 <= x2 whose rightmost paths cross (must be zero)",
    );
    report.check(
        "step_domination",
        undominated == 0,
        undominated as f64,
        0.0,
        "wedge paths overtaken by a one-sided profile's path (must be zero)",
    );

    let n_loc = cfg.path_samples.min(LOCALIZATION_SAMPLES_MAX);
    let u_values = [1.0, 2.0, cfg.thresholds.localization_u];
    let tails = localization_statistics(
        0.0,
        t_loc,
        n_loc,
        &u_values,
        stats::derive_seed(cfg.seed_base, 1 << 20),
    )?;
    for (i, &u) in tails.u_values.iter().enumerate() {
        report.estimate(
            &format!("localization_tail_u{u}"),
            tails.tail[i],
            tails.half_width[i],
            tails.samples,
        );
    }
    let last = tails.tail.len() - 1;
    report.check(
        "localization_tail",
        tails.tail[last] <= cfg.thresholds.localization_tail,
        tails.tail[last],
        cfg.thresholds.localization_tail,
        &format!(
            "fraction of paths wandering beyond {} t^(2/3) at t = {t_loc:.0}",
            cfg.thresholds.localization_u
        ),
    );
    let endpoints = endpoint_control_statistics(
        &setup,
        cfg.path_samples,
        stats::derive_seed(cfg.seed_base, 2 << 20),
    )?;
    report.estimate(
        "endpoint_control",
        endpoints.fraction,
        endpoints.half_width,
        endpoints.samples,
    );

    let seed0 = stats::derive_seed(cfg.seed_base, 0);
    let stream = generate_events(seed0, window, t_path)?;
    let wedge_cfg = build_initial(&InitialCondition::Step { front: 0 }, window)?;
    let mut sys = CoupledSystem::new(&stream, vec![wedge_cfg])?.with_log(vec![LogView {
        member: 0,
        upper: false,
    }])?;
    sys.evolve_to(t_path)?;
    let log = sys.into_log().expect("log was requested");
    let trace = build_backwards_path(&stream, &log, 0, 0, t_path, PathVariant::Rightmost)?;
    fs::write(
        dir.join(format!("{}-geodesics-path.csv", cfg.experiment)),
        trace.trajectory_csv(),
    )?;

    report.total_samples = cfg.path_samples;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    report.write_json(dir.join(format!("{}-geodesics-report.json", cfg.experiment)))?;
    Ok(report)
}

/// Writes one of the tabulated laws as a deterministic CSV and returns its path.
pub fn write_law_table(
    cfg: &ExperimentConfig,
    law: &str,
    out: Option<&Path>,
) -> Result<PathBuf, HarnessError> {
    let table = match law {
        "gue" => gue_table()?,
        "goe" => goe_table()?,
        "shock" => shock_table(cfg.lambda, cfg.rho)?,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown law '{other}': expected gue, goe, or shock"
            )))
        }
    };
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = cfg.resolved_output_dir();
            ensure_dir(&dir)?;
            dir.join(format!("{law}-table.csv"))
        }
    };
    table.to_csv(&path)?;
    Ok(path)
}
