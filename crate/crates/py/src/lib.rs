//! Python bindings: thin wrappers over the simulator, the backwards-path
//! diagnostics, the tabulated laws, and the experiment harness. Everything maps
//! onto plain Python types (tuples, lists, dicts, JSON strings); errors surface
//! as ValueError.

use std::collections::BTreeMap;
use std::fmt::Display;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tasep_shock::clockwork::generate_events;
use tasep_shock::engine::streaming::StreamingSystem;
use tasep_shock::engine::{window_for, CoupledSystem, LogView};
use tasep_shock::geodesics::{
    build_backwards_path, localization_statistics, PathVariant,
};
use tasep_shock::harness::{
    run_geodesic_suite, run_identity_suite, run_independence_check, run_limit_comparison,
    run_scaling_experiment, run_slow_decorrelation, run_step_law, ExperimentConfig,
};
use tasep_shock::lattice::{build_initial, split_minus_plus, InitialCondition, ShockParameters};
use tasep_shock::limits;
use tasep_shock::tracker::{self, verify_all, with_tagged_origin, ShockSetup};

fn err<E: Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn setup(lam: f64, rho: f64, t: f64, deterministic_ic: bool) -> ShockSetup {
    ShockSetup {
        lambda: lam,
        rho,
        deterministic_ic,
        t_final: t,
    }
}

/// Position of the tracked second-class particle at time t, plus a flag telling
/// whether the observation was contaminated by the window edge.
#[pyfunction]
#[pyo3(signature = (lam, rho, t, seed, deterministic_ic=true))]
fn second_class_position(
    lam: f64,
    rho: f64,
    t: f64,
    seed: u64,
    deterministic_ic: bool,
) -> PyResult<(i64, bool)> {
    tracker::second_class_position(&setup(lam, rho, t, deterministic_ic), seed, t).map_err(err)
}

/// Tracked positions for seeds seed_base..seed_base+n; contaminated runs are
/// dropped and counted. Returns (positions, contaminated_count).
#[pyfunction]
#[pyo3(signature = (lam, rho, t, n, seed_base, deterministic_ic=true))]
fn second_class_batch(
    lam: f64,
    rho: f64,
    t: f64,
    n: usize,
    seed_base: u64,
    deterministic_ic: bool,
) -> PyResult<(Vec<i64>, usize)> {
    let s = setup(lam, rho, t, deterministic_ic);
    let mut positions = Vec::with_capacity(n);
    let mut contaminated = 0;
    for k in 0..n {
        let (pos, dirty) =
            tracker::second_class_position(&s, seed_base.wrapping_add(k as u64), t).map_err(err)?;
        if dirty {
            contaminated += 1;
        } else {
            positions.push(pos);
        }
    }
    Ok((positions, contaminated))
}

/// Runs every pathwise identity check for one seed at the given checkpoint sites.
/// Returns ({check_name: passed}, contaminated).
#[pyfunction]
#[pyo3(signature = (lam, rho, t, seed, checkpoints=None, deterministic_ic=true))]
fn verify_identity(
    lam: f64,
    rho: f64,
    t: f64,
    seed: u64,
    checkpoints: Option<Vec<i64>>,
    deterministic_ic: bool,
) -> PyResult<(BTreeMap<String, bool>, bool)> {
    let s = setup(lam, rho, t, deterministic_ic);
    let window = s.window().map_err(err)?;
    let stream = generate_events(seed, window, t).map_err(err)?;
    let xs = checkpoints.unwrap_or_else(|| vec![-5, 0, 5]);
    let pairs: Vec<(i64, f64)> = xs.into_iter().map(|x| (x, t)).collect();
    let verdict = verify_all(&s, &stream, seed, &pairs).map_err(err)?;
    Ok((verdict.checks, verdict.contaminated))
}

/// Heights of the coupled one-sided profiles at the given sites after evolving to
/// time t with shared clocks. Returns (h_minus, h_plus_upper).
#[pyfunction]
#[pyo3(signature = (lam, rho, t, seed, xs, deterministic_ic=true))]
fn shock_heights(
    lam: f64,
    rho: f64,
    t: f64,
    seed: u64,
    xs: Vec<i64>,
    deterministic_ic: bool,
) -> PyResult<(Vec<i64>, Vec<i64>)> {
    let s = setup(lam, rho, t, deterministic_ic);
    let base = s.base_config(seed).map_err(err)?;
    let split = split_minus_plus(&base).map_err(err)?;
    let mut sys = StreamingSystem::new(seed, vec![split.minus, split.plus_upper], Some(t))
        .map_err(err)?;
    sys.evolve_to(t).map_err(err)?;
    let mut h_minus = Vec::with_capacity(xs.len());
    let mut h_plus = Vec::with_capacity(xs.len());
    for &x in &xs {
        h_minus.push(sys.member(0).height_at(x, false).map_err(err)?);
        h_plus.push(sys.member(1).height_at(x, false).map_err(err)?);
    }
    Ok((h_minus, h_plus))
}

/// Run-length-encoded snapshot of a tagged trajectory's final configuration.
#[pyfunction]
#[pyo3(signature = (lam, rho, t, seed, deterministic_ic=true))]
fn final_state_rle(
    lam: f64,
    rho: f64,
    t: f64,
    seed: u64,
    deterministic_ic: bool,
) -> PyResult<String> {
    let s = setup(lam, rho, t, deterministic_ic);
    let tagged = with_tagged_origin(&s.base_config(seed).map_err(err)?).map_err(err)?;
    let mut sys = StreamingSystem::new(seed, vec![tagged], Some(t)).map_err(err)?;
    sys.evolve_to(t).map_err(err)?;
    Ok(sys.member(0).configuration().to_rle())
}

/// Simulation window [x_min, x_max] used for a shock run to time t.
#[pyfunction]
fn simulation_window(lam: f64, rho: f64, t: f64) -> PyResult<(i64, i64)> {
    let params = ShockParameters::new(lam, rho).map_err(err)?;
    Ok(window_for(params.v_s(), t))
}

/// Characteristic constants of the two-sided profile:
/// front speed, growth rate, one-sided variance factors, and density gap.
#[pyfunction]
fn shock_parameters(lam: f64, rho: f64) -> PyResult<BTreeMap<String, f64>> {
    let p = ShockParameters::new(lam, rho).map_err(err)?;
    Ok(BTreeMap::from([
        ("v_s".to_string(), p.v_s()),
        ("mu_s".to_string(), p.mu_s()),
        ("chi_minus".to_string(), p.chi_minus()),
        ("chi_plus".to_string(), p.chi_plus()),
        ("delta".to_string(), p.delta()),
    ]))
}

/// Breakpoints (time, site) of the rightmost backwards path of the wedge profile,
/// anchored at (anchor, t); the list ends with the time-zero endpoint.
#[pyfunction]
#[pyo3(signature = (t, seed, anchor=0))]
fn backwards_path(t: f64, seed: u64, anchor: i64) -> PyResult<Vec<(f64, i64)>> {
    let window = window_for(0.0, t);
    let stream = generate_events(seed, window, t).map_err(err)?;
    let wedge = build_initial(&InitialCondition::Step { front: 0 }, window).map_err(err)?;
    let mut sys = CoupledSystem::new(&stream, vec![wedge])
        .map_err(err)?
        .with_log(vec![LogView {
            member: 0,
            upper: false,
        }])
        .map_err(err)?;
    sys.evolve_to(t).map_err(err)?;
    let log = sys.into_log().expect("log was requested");
    let path =
        build_backwards_path(&stream, &log, 0, anchor, t, PathVariant::Rightmost).map_err(err)?;
    Ok(path.breakpoints)
}

/// Tail probabilities of the backwards-path deviation sup |x(tau)| / t^(2/3) at
/// the given thresholds. Returns (tails, half_widths).
#[pyfunction]
fn localization_tail(
    t: f64,
    n_samples: usize,
    u_values: Vec<f64>,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let stats = localization_statistics(0.0, t, n_samples, &u_values, seed).map_err(err)?;
    Ok((stats.tail, stats.half_width))
}

/// GUE edge distribution function.
#[pyfunction]
fn f_gue(s: f64) -> f64 {
    limits::f_gue(s)
}

/// GOE edge distribution function.
#[pyfunction]
fn f_goe(s: f64) -> f64 {
    limits::f_goe(s)
}

/// Exceedance probability of the rescaled shock position: the chance that the
/// limit variable is at least s.
#[pyfunction]
#[pyo3(signature = (s, lam, rho, tau=0.0))]
fn shock_cdf_complement(s: f64, lam: f64, rho: f64, tau: f64) -> PyResult<f64> {
    limits::shock_limit_cdf(s, lam, rho, tau).map_err(err)
}

/// One of the tabulated laws ("gue", "goe", or "shock") as (grid, cdf) lists.
#[pyfunction]
#[pyo3(signature = (law, lam=0.25, rho=0.75))]
fn law_table(law: &str, lam: f64, rho: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let table = match law {
        "gue" => limits::gue_table().map_err(err)?,
        "goe" => limits::goe_table().map_err(err)?,
        "shock" => limits::shock_table(lam, rho).map_err(err)?,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown law '{other}': expected gue, goe, or shock"
            )))
        }
    };
    Ok((table.s, table.cdf))
}

/// Mean and variance of the tabulated GUE edge law.
#[pyfunction]
fn gue_moments() -> PyResult<(f64, f64)> {
    Ok(limits::gue_table().map_err(err)?.mean_variance())
}

/// The default experiment configuration as a TOML document.
#[pyfunction]
fn default_config_toml() -> PyResult<String> {
    ExperimentConfig::default().to_toml_string().map_err(err)
}

/// Runs one named experiment from a TOML config string and returns the report as
/// JSON. Names: identity, scaling, limit-law, independence, slow-decorrelation,
/// geodesics, step-law.
#[pyfunction]
fn run_experiment(name: &str, config_toml: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(err)?;
    let report = match name {
        "identity" => run_identity_suite(&cfg),
        "scaling" => run_scaling_experiment(&cfg),
        "limit-law" => run_limit_comparison(&cfg),
        "independence" => run_independence_check(&cfg),
        "slow-decorrelation" => run_slow_decorrelation(&cfg),
        "geodesics" => run_geodesic_suite(&cfg),
        "step-law" => run_step_law(&cfg),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown experiment '{other}'"
            )))
        }
    }
    .map_err(err)?;
    serde_json::to_string_pretty(&report).map_err(err)
}

#[pymodule]
fn tasep_shock_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(second_class_position, m)?)?;
    m.add_function(wrap_pyfunction!(second_class_batch, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identity, m)?)?;
    m.add_function(wrap_pyfunction!(shock_heights, m)?)?;
    m.add_function(wrap_pyfunction!(final_state_rle, m)?)?;
    m.add_function(wrap_pyfunction!(simulation_window, m)?)?;
    m.add_function(wrap_pyfunction!(shock_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(backwards_path, m)?)?;
    m.add_function(wrap_pyfunction!(localization_tail, m)?)?;
    m.add_function(wrap_pyfunction!(f_gue, m)?)?;
    m.add_function(wrap_pyfunction!(f_goe, m)?)?;
    m.add_function(wrap_pyfunction!(shock_cdf_complement, m)?)?;
    m.add_function(wrap_pyfunction!(law_table, m)?)?;
    m.add_function(wrap_pyfunction!(gue_moments, m)?)?;
    m.add_function(wrap_pyfunction!(default_config_toml, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
