//! Experiment configuration. A TOML file fixes the densities, time and offset
//! grids, sample counts, seed base, and every statistical threshold, so that any
//! report can be reproduced from the file alone.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::engine::WINDOW_KAPPA;
use crate::lattice::ShockParameters;

/// Pass/fail tolerances used by the experiment checks. All of them are desk-scale
/// calibrations, frozen here and echoed verbatim into every report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Thresholds {
    /// Highest tolerated fraction of contaminated trajectories in a batch.
    pub contamination_rate: f64,
    /// KS bound for the rescaled shock position against its limit table.
    pub ks_limit_law: f64,
    /// KS bound for the rescaled step-profile height against the GUE edge table.
    pub ks_step_law: f64,
    /// Absolute error allowed on the mean of the rescaled step-profile height.
    pub step_mean_tol: f64,
    /// Allowed deviation of the position variance growth exponent from 2/3.
    pub slope_tol: f64,
    /// Bound on |median| of the rescaled position when the densities are symmetric.
    pub median_tol: f64,
    /// Bound on |mean| of the rescaled position. The profile initial data holds
    /// the front an origin-scale couple of sites right of zero, so this must
    /// cover roughly 2.5 sites divided by the cube root of the largest grid time.
    pub mean_tol: f64,
    /// Factor c in the decoupling band |corr| <= c / sqrt(N).
    pub corr_band_factor: f64,
    /// Tail probability bound for backwards-path localization at `localization_u`.
    pub localization_tail: f64,
    /// Deviation threshold for the localization tail, in units of t^(2/3).
    pub localization_u: f64,
}

impl Default for Thresholds {
    fn default() -> Thresholds {
        Thresholds {
            contamination_rate: 1.0e-3,
            ks_limit_law: 0.05,
            ks_step_law: 0.06,
            step_mean_tol: 0.1,
            slope_tol: 0.1,
            median_tol: 0.05,
            mean_tol: 0.2,
            corr_band_factor: 3.0,
            localization_tail: 0.05,
            localization_u: 3.0,
        }
    }
}

/// One experiment's full description. Unknown keys in the TOML are rejected;
/// missing keys fall back to the defaults below.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Identifier echoed into reports and output file names.
    pub experiment: String,
    /// Left density.
    pub lambda: f64,
    /// Right density.
    pub rho: f64,
    /// Observation times, strictly increasing.
    pub t_grid: Vec<f64>,
    /// Time offsets in units of t^(2/3); the first entry drives two-time checks.
    pub tau_grid: Vec<f64>,
    /// Spatial offsets in units of t^(1/3); the first entry drives two-point checks.
    pub s_grid: Vec<f64>,
    /// Checkpoint sites for the pathwise identity.
    pub x_checkpoints: Vec<i64>,
    /// Trajectories per statistical batch.
    pub samples: usize,
    /// Trajectories for backwards-path statistics.
    pub path_samples: usize,
    /// Base value from which per-trajectory seeds are derived.
    pub seed_base: u64,
    /// Light-cone window multiplier. Informational: the engine compiles this in,
    /// and validation rejects any other value.
    pub kappa: f64,
    /// Exponent of the pre-final observation time t - t^nu, strictly in (2/3, 1).
    pub nu: f64,
    /// Two-time exceedance thresholds, in units of t^(1/3).
    pub epsilons: Vec<f64>,
    /// Profile initial data when true, product-measure initial data when false.
    pub deterministic_ic: bool,
    /// Output directory; the TASEP_OUTPUT_DIR environment variable overrides it.
    pub output_dir: PathBuf,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            experiment: "shock-desk".into(),
            lambda: 0.25,
            rho: 0.75,
            t_grid: vec![250.0, 500.0, 1000.0, 2000.0],
            tau_grid: vec![0.0],
            s_grid: vec![0.0],
            x_checkpoints: vec![-5, 0, 5],
            samples: 2000,
            path_samples: 200,
            seed_base: 0xA11CE,
            kappa: WINDOW_KAPPA,
            nu: 0.75,
            epsilons: vec![0.5, 1.0, 2.0],
            deterministic_ic: true,
            output_dir: PathBuf::from("out"),
            thresholds: Thresholds::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML config file.
    pub fn from_toml_path<P: AsRef<Path>>(path: P) -> Result<ExperimentConfig, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Parses and validates a TOML config from a string.
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(format!("bad TOML: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Checks every range invariant. Sample counts are validated by the experiments
    /// that consume them, so that a zero-sample run can still report vacuously.
    pub fn validate(&self) -> Result<(), HarnessError> {
        ShockParameters::new(self.lambda, self.rho)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.t_grid.is_empty() {
            return Err(HarnessError::Config("t_grid is empty".into()));
        }
        for &t in &self.t_grid {
            if !(t > 0.0) || !t.is_finite() {
                return Err(HarnessError::Config(format!("t_grid entry {t} not positive")));
            }
        }
        if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config("t_grid not strictly increasing".into()));
        }
        if self.tau_grid.is_empty() || self.tau_grid.iter().any(|&v| !(v >= 0.0) || !v.is_finite())
        {
            return Err(HarnessError::Config(
                "tau_grid must be nonempty with finite entries >= 0".into(),
            ));
        }
        if self.s_grid.is_empty() || self.s_grid.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Config(
                "s_grid must be nonempty with finite entries".into(),
            ));
        }
        if self.x_checkpoints.is_empty() {
            return Err(HarnessError::Config("x_checkpoints is empty".into()));
        }
        if self.kappa != WINDOW_KAPPA {
            return Err(HarnessError::Config(format!(
                "window factor {} is not the engine value {WINDOW_KAPPA}; \
                 the multiplier is compiled into the simulation window",
                self.kappa
            )));
        }
        if !(self.nu > 2.0 / 3.0 && self.nu < 1.0) {
            return Err(HarnessError::Config(format!(
                "nu = {} outside (2/3, 1)",
                self.nu
            )));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0) || !e.is_finite())
        {
            return Err(HarnessError::Config(
                "epsilons must be nonempty with finite entries > 0".into(),
            ));
        }
        let thr = &self.thresholds;
        for (name, v) in [
            ("contamination_rate", thr.contamination_rate),
            ("ks_limit_law", thr.ks_limit_law),
            ("ks_step_law", thr.ks_step_law),
            ("step_mean_tol", thr.step_mean_tol),
            ("slope_tol", thr.slope_tol),
            ("median_tol", thr.median_tol),
            ("mean_tol", thr.mean_tol),
            ("corr_band_factor", thr.corr_band_factor),
            ("localization_tail", thr.localization_tail),
            ("localization_u", thr.localization_u),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(HarnessError::Config(format!(
                    "threshold {name} = {v} must be finite and positive"
                )));
            }
        }
        Ok(())
    }

    /// Output directory after applying the TASEP_OUTPUT_DIR override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match env::var_os("TASEP_OUTPUT_DIR") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}
