//! Particle configurations on a finite lattice window, their height functions, and
//! the initial data used by the shock experiments.
//!
//! A configuration assigns each site of `[x_min, x_max]` one of three cells: hole,
//! first-class particle, or second-class particle. Plain exclusion dynamics only uses
//! holes and first-class particles; the second-class cell encodes the coupled pair of
//! configurations that differ at a single site.
//!
//! The height function is the standard interface representation: fixing an anchor
//! value at one site, it changes by `1 - 2*eta(x)` across site `x` and grows by two at
//! a site whenever a particle jumps into it. All heights here are anchored so that
//! `h(0, 0) = 0` at time zero.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("window [{0}, {1}] is empty")]
    EmptyWindow(i64, i64),
    #[error("site {0} outside window [{1}, {2}]")]
    SiteOutsideWindow(i64, i64, i64),
    #[error("height queried at {0}, outside [{1}, {2}]")]
    HeightOutsideWindow(i64, i64, i64),
    #[error("invalid density {0}; need a value strictly inside (0, 1)")]
    BadDensity(f64),
    #[error("shock densities need 0 < lambda < rho < 1, got lambda={0}, rho={1}")]
    BadShockPair(f64, f64),
    #[error("window [{0}, {1}] must contain the origin for this initial condition")]
    OriginNotCovered(i64, i64),
    #[error("configuration has no hole at the origin")]
    OriginOccupied,
    #[error("explicit initial condition repeats site {0}")]
    DuplicateSite(i64),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Contents of one lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Cell {
    Hole = 0,
    First = 1,
    Second = 2,
}

impl Cell {
    pub fn from_code(code: u8) -> Option<Cell> {
        match code {
            0 => Some(Cell::Hole),
            1 => Some(Cell::First),
            2 => Some(Cell::Second),
            _ => None,
        }
    }

    /// Occupation indicator. A second-class particle is a particle for the upper
    /// member of the coupled pair and a hole for the lower one.
    pub fn eta(self, second_as_particle: bool) -> i64 {
        match self {
            Cell::Hole => 0,
            Cell::First => 1,
            Cell::Second => {
                if second_as_particle {
                    1
                } else {
                    0
                }
            }
        }
    }
}

/// Dense occupancy record over a window `[x_min, x_max]`, one cell per site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    x_min: i64,
    cells: Vec<u8>,
}

impl Configuration {
    pub fn empty(window: (i64, i64)) -> Result<Configuration, LatticeError> {
        let (x_min, x_max) = window;
        if x_min > x_max {
            return Err(LatticeError::EmptyWindow(x_min, x_max));
        }
        Ok(Configuration {
            x_min,
            cells: vec![0; (x_max - x_min + 1) as usize],
        })
    }

    pub fn window(&self) -> (i64, i64) {
        (self.x_min, self.x_min + self.cells.len() as i64 - 1)
    }

    pub fn x_min(&self) -> i64 {
        self.x_min
    }

    pub fn x_max(&self) -> i64 {
        self.x_min + self.cells.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains_site(&self, x: i64) -> bool {
        x >= self.x_min && x <= self.x_max()
    }

    pub fn get(&self, x: i64) -> Result<Cell, LatticeError> {
        if !self.contains_site(x) {
            return Err(LatticeError::SiteOutsideWindow(x, self.x_min, self.x_max()));
        }
        Ok(Cell::from_code(self.cells[(x - self.x_min) as usize]).unwrap())
    }

    pub fn set(&mut self, x: i64, cell: Cell) -> Result<(), LatticeError> {
        if !self.contains_site(x) {
            return Err(LatticeError::SiteOutsideWindow(x, self.x_min, self.x_max()));
        }
        self.cells[(x - self.x_min) as usize] = cell as u8;
        Ok(())
    }

    /// Raw cell codes in window order (0 hole, 1 first, 2 second).
    pub fn codes(&self) -> &[u8] {
        &self.cells
    }

    pub(crate) fn codes_mut(&mut self) -> &mut [u8] {
        &mut self.cells
    }

    pub(crate) fn from_codes(x_min: i64, cells: Vec<u8>) -> Configuration {
        debug_assert!(!cells.is_empty());
        debug_assert!(cells.iter().all(|&c| c <= 2));
        Configuration { x_min, cells }
    }

    pub fn occupied_sites(&self) -> Vec<i64> {
        self.cells
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0)
            .map(|(i, _)| self.x_min + i as i64)
            .collect()
    }

    pub fn count(&self, cell: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == cell as u8).count()
    }

    /// True when no second-class cell is present.
    pub fn is_two_class(&self) -> bool {
        self.cells.iter().all(|&c| c != Cell::Second as u8)
    }

    /// Writes the configuration as a short run-length-encoded text document.
    ///
    /// ```text
    /// tasep-config v1
    /// window -4 5
    /// cells 1 0^3 2 1^2 0^3
    /// ```
    pub fn to_rle(&self) -> String {
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < self.cells.len() {
            let c = self.cells[i];
            let mut j = i + 1;
            while j < self.cells.len() && self.cells[j] == c {
                j += 1;
            }
            let run = j - i;
            if run == 1 {
                tokens.push(format!("{c}"));
            } else {
                tokens.push(format!("{c}^{run}"));
            }
            i = j;
        }
        format!(
            "tasep-config v1\nwindow {} {}\ncells {}\n",
            self.x_min,
            self.x_max(),
            tokens.join(" ")
        )
    }

    /// Parses the format produced by [`Configuration::to_rle`].
    pub fn from_rle(text: &str) -> Result<Configuration, LatticeError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| LatticeError::Parse("empty document".into()))?;
        if header.trim() != "tasep-config v1" {
            return Err(LatticeError::Parse(format!("bad header {header:?}")));
        }
        let window_line = lines
            .next()
            .ok_or_else(|| LatticeError::Parse("missing window line".into()))?;
        let mut parts = window_line.split_whitespace();
        if parts.next() != Some("window") {
            return Err(LatticeError::Parse("expected window line".into()));
        }
        let x_min: i64 = parse_int(parts.next(), "window start")?;
        let x_max: i64 = parse_int(parts.next(), "window end")?;
        if parts.next().is_some() {
            return Err(LatticeError::Parse("trailing tokens on window line".into()));
        }
        if x_min > x_max {
            return Err(LatticeError::EmptyWindow(x_min, x_max));
        }
        let cells_line = lines
            .next()
            .ok_or_else(|| LatticeError::Parse("missing cells line".into()))?;
        let mut parts = cells_line.split_whitespace();
        if parts.next() != Some("cells") {
            return Err(LatticeError::Parse("expected cells line".into()));
        }
        let mut cells = Vec::new();
        for token in parts {
            let (code_str, run) = match token.split_once('^') {
                Some((c, r)) => (
                    c,
                    r.parse::<usize>()
                        .map_err(|_| LatticeError::Parse(format!("bad run length in {token:?}")))?,
                ),
                None => (token, 1),
            };
            if run == 0 {
                return Err(LatticeError::Parse(format!("zero run in {token:?}")));
            }
            let code: u8 = code_str
                .parse()
                .map_err(|_| LatticeError::Parse(format!("bad cell code in {token:?}")))?;
            if Cell::from_code(code).is_none() {
                return Err(LatticeError::Parse(format!("unknown cell code {code}")));
            }
            cells.extend(std::iter::repeat(code).take(run));
        }
        let expected = (x_max - x_min + 1) as usize;
        if cells.len() != expected {
            return Err(LatticeError::Parse(format!(
                "cells cover {} sites, window has {}",
                cells.len(),
                expected
            )));
        }
        if lines.next().is_some() {
            return Err(LatticeError::Parse("trailing lines".into()));
        }
        Ok(Configuration { x_min, cells })
    }
}

fn parse_int(tok: Option<&str>, what: &str) -> Result<i64, LatticeError> {
    tok.ok_or_else(|| LatticeError::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| LatticeError::Parse(format!("bad {what}")))
}

/// Densities of the two-sided shock initial data and the constants derived from them.
///
/// For left density `lambda` below right density `rho`, the shock front travels at
/// velocity `1 - lambda - rho` and the height above it grows at rate
/// `1 - lambda - rho + 2*lambda*rho`; `chi = density * (1 - density)` is the
/// compressibility entering every fluctuation scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShockParameters {
    pub lambda: f64,
    pub rho: f64,
}

impl ShockParameters {
    pub fn new(lambda: f64, rho: f64) -> Result<ShockParameters, LatticeError> {
        if !(lambda > 0.0 && lambda < rho && rho < 1.0) {
            return Err(LatticeError::BadShockPair(lambda, rho));
        }
        Ok(ShockParameters { lambda, rho })
    }

    /// Shock velocity.
    pub fn v_s(&self) -> f64 {
        1.0 - self.lambda - self.rho
    }

    /// Growth rate of the height function along the shock ray.
    pub fn mu_s(&self) -> f64 {
        1.0 - self.lambda - self.rho + 2.0 * self.lambda * self.rho
    }

    pub fn chi_minus(&self) -> f64 {
        self.lambda * (1.0 - self.lambda)
    }

    pub fn chi_plus(&self) -> f64 {
        self.rho * (1.0 - self.rho)
    }

    /// Half the density gap; the geodesic endpoints on either side of the shock
    /// separate linearly at this rate.
    pub fn delta(&self) -> f64 {
        (self.rho - self.lambda) / 2.0
    }
}

/// Initial data of a simulation window.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum InitialCondition {
    /// Particles fill every site strictly left of `front`.
    Step { front: i64 },
    /// Deterministic two-density profile: particles at `-floor(n / lambda)` for
    /// `n >= 1` on the left and at `-floor(n / rho)` for `n <= -1` on the right,
    /// with the origin left empty (its particle belongs to the upper member of the
    /// coupled pair).
    ShockDeterministic { lambda: f64, rho: f64 },
    /// Independent occupancies: density `lambda` strictly left of the origin,
    /// density `rho` strictly right, origin empty. Per-site draws are keyed by
    /// `(ic_seed, site)`, so enlarging the window keeps existing sites unchanged.
    BernoulliShock { lambda: f64, rho: f64, ic_seed: u64 },
    /// Explicit list of occupied sites; everything else is a hole.
    Explicit { occupied: Vec<i64> },
}

fn check_density(d: f64) -> Result<(), LatticeError> {
    if !(d > 0.0 && d < 1.0) {
        return Err(LatticeError::BadDensity(d));
    }
    Ok(())
}

/// Uniform variate in [0, 1) keyed by `(seed, site)`, for window-stable Bernoulli data.
fn site_uniform(seed: u64, site: i64) -> f64 {
    let mut rng = crate::clockwork::SiteClock::bernoulli_rng(seed, site);
    rng.gen::<f64>()
}

/// Builds the two-class configuration of `ic` on `window`.
pub fn build_initial(
    ic: &InitialCondition,
    window: (i64, i64),
) -> Result<Configuration, LatticeError> {
    let mut cfg = Configuration::empty(window)?;
    let (x_min, x_max) = window;
    match *ic {
        InitialCondition::Step { front } => {
            for x in x_min..=x_max {
                if x < front {
                    cfg.set(x, Cell::First)?;
                }
            }
        }
        InitialCondition::ShockDeterministic { lambda, rho } => {
            let params = ShockParameters::new(lambda, rho)?;
            if x_min > 0 || x_max < 0 {
                return Err(LatticeError::OriginNotCovered(x_min, x_max));
            }
            // Left family: positions -floor(n / lambda), n = 1, 2, ... down to x_min.
            let mut n = 1i64;
            loop {
                let pos = -((n as f64 / params.lambda).floor() as i64);
                if pos < x_min {
                    break;
                }
                cfg.set(pos, Cell::First)?;
                n += 1;
            }
            // Right family: positions -floor(n / rho), n = -1, -2, ... up to x_max.
            let mut n = -1i64;
            loop {
                let pos = -((n as f64 / params.rho).floor() as i64);
                if pos > x_max {
                    break;
                }
                cfg.set(pos, Cell::First)?;
                n -= 1;
            }
        }
        InitialCondition::BernoulliShock {
            lambda,
            rho,
            ic_seed,
        } => {
            check_density(lambda)?;
            check_density(rho)?;
            if lambda >= rho {
                return Err(LatticeError::BadShockPair(lambda, rho));
            }
            if x_min > 0 || x_max < 0 {
                return Err(LatticeError::OriginNotCovered(x_min, x_max));
            }
            for x in x_min..=x_max {
                if x == 0 {
                    continue;
                }
                let p = if x < 0 { lambda } else { rho };
                if site_uniform(ic_seed, x) < p {
                    cfg.set(x, Cell::First)?;
                }
            }
        }
        InitialCondition::Explicit { ref occupied } => {
            for &x in occupied {
                if !cfg.contains_site(x) {
                    return Err(LatticeError::SiteOutsideWindow(x, x_min, x_max));
                }
                if cfg.get(x)? != Cell::Hole {
                    return Err(LatticeError::DuplicateSite(x));
                }
                cfg.set(x, Cell::First)?;
            }
        }
    }
    Ok(cfg)
}

/// Height profile of a configuration: values of `h` on `x_min ..= x_max + 1`,
/// pinned to `anchor_value` at `anchor_site`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightFunction {
    x_min: i64,
    values: Vec<i64>,
}

impl HeightFunction {
    pub fn x_min(&self) -> i64 {
        self.x_min
    }

    /// Largest argument the profile covers (`x_max + 1` of the window).
    pub fn x_end(&self) -> i64 {
        self.x_min + self.values.len() as i64 - 1
    }

    pub fn at(&self, x: i64) -> Result<i64, LatticeError> {
        if x < self.x_min || x > self.x_end() {
            return Err(LatticeError::HeightOutsideWindow(x, self.x_min, self.x_end()));
        }
        Ok(self.values[(x - self.x_min) as usize])
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }
}

/// Builds the full height profile of `cfg`, treating second-class cells as particles
/// or holes according to `second_as_particle`.
pub fn height_profile(
    cfg: &Configuration,
    anchor_site: i64,
    anchor_value: i64,
    second_as_particle: bool,
) -> Result<HeightFunction, LatticeError> {
    let x_min = cfg.x_min();
    let x_end = cfg.x_max() + 1;
    if anchor_site < x_min || anchor_site > x_end {
        return Err(LatticeError::HeightOutsideWindow(anchor_site, x_min, x_end));
    }
    let n = cfg.len() + 1;
    let mut values = vec![0i64; n];
    // Build increments from the left edge, then shift so the anchor matches.
    let mut acc = 0i64;
    for (i, &code) in cfg.codes().iter().enumerate() {
        let cell = Cell::from_code(code).unwrap();
        acc += 1 - 2 * cell.eta(second_as_particle);
        values[i + 1] = acc;
    }
    let shift = anchor_value - values[(anchor_site - x_min) as usize];
    for v in &mut values {
        *v += shift;
    }
    Ok(HeightFunction { x_min, values })
}

/// Single-point height query; equivalent to `height_profile(..)?.at(x)`.
pub fn height_of(
    cfg: &Configuration,
    anchor_site: i64,
    anchor_value: i64,
    second_as_particle: bool,
    x: i64,
) -> Result<i64, LatticeError> {
    let x_min = cfg.x_min();
    let x_end = cfg.x_max() + 1;
    if x < x_min || x > x_end {
        return Err(LatticeError::HeightOutsideWindow(x, x_min, x_end));
    }
    if anchor_site < x_min || anchor_site > x_end {
        return Err(LatticeError::HeightOutsideWindow(anchor_site, x_min, x_end));
    }
    let (lo, hi, sign) = if anchor_site <= x {
        (anchor_site, x, 1)
    } else {
        (x, anchor_site, -1)
    };
    let mut acc = 0i64;
    for y in lo..hi {
        let cell = cfg.get(y)?;
        acc += 1 - 2 * cell.eta(second_as_particle);
    }
    Ok(anchor_value + sign * acc)
}

/// The three split configurations derived from two-sided data with an empty origin:
/// `minus` keeps only the particles strictly left of the origin, `plus` keeps the
/// right part and packs every site on the left, `plus_upper` additionally occupies
/// the origin (the upper member of the coupled pair, split the same way).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitConfigurations {
    pub minus: Configuration,
    pub plus: Configuration,
    pub plus_upper: Configuration,
}

/// Splits `cfg` (two-class, hole at the origin) into the three comparison
/// configurations used by the pathwise identity.
pub fn split_minus_plus(cfg: &Configuration) -> Result<SplitConfigurations, LatticeError> {
    if !cfg.contains_site(0) {
        return Err(LatticeError::OriginNotCovered(cfg.x_min(), cfg.x_max()));
    }
    if cfg.get(0)? != Cell::Hole {
        return Err(LatticeError::OriginOccupied);
    }
    let window = cfg.window();
    let mut minus = Configuration::empty(window)?;
    let mut plus = Configuration::empty(window)?;
    let mut plus_upper = Configuration::empty(window)?;
    for x in window.0..=window.1 {
        let occupied = cfg.get(x)? != Cell::Hole;
        if x < 0 {
            if occupied {
                minus.set(x, Cell::First)?;
            }
            plus.set(x, Cell::First)?;
            plus_upper.set(x, Cell::First)?;
        } else {
            if occupied {
                plus.set(x, Cell::First)?;
                plus_upper.set(x, Cell::First)?;
            }
            if x == 0 {
                plus_upper.set(x, Cell::First)?;
            }
        }
    }
    Ok(SplitConfigurations {
        minus,
        plus,
        plus_upper,
    })
}

impl crate::clockwork::SiteClock {
    /// RNG keyed by `(seed, site)` for initial-condition sampling. Kept separate from
    /// the clock stream derivation so initial data and dynamics never share randomness.
    pub fn bernoulli_rng(seed: u64, site: i64) -> SmallRng {
        let mut key = [0u8; 32];
        let mut s = seed
            .wrapping_mul(0xD605_1EE3_6917_13A7)
            .wrapping_add(0x5851_F42D_4C95_7F2D)
            ^ (site as u64).wrapping_mul(0x2545_F491_4F6C_DD1D);
        for chunk in key.chunks_exact_mut(8) {
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            chunk.copy_from_slice(&(z ^ (z >> 31)).to_le_bytes());
        }
        SmallRng::from_seed(key)
    }
}
