//! Per-site Poisson clocks for the graphical construction of the exclusion process.
//!
//! Every lattice site owns an independent rate-1 Poisson process. A site's event
//! sequence is a deterministic function of `(seed, site)` alone: the site index is
//! hashed into the state of a dedicated generator, so enlarging the window or changing
//! the horizon never perturbs the events of sites that were already present. This is
//! what makes pathwise comparisons meaningful: two configurations evolved against the
//! same seed see literally the same clocks.
//!
//! Inter-arrival times are unit-rate exponentials (ziggurat sampling on a per-site
//! xoshiro generator seeded through a SplitMix64 expansion, the scheme recommended by
//! the xoshiro authors). Event times are accumulated sums, so each site's list is
//! strictly increasing by construction.

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Exp1};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

/// Hard cap on the time horizon; beyond this the per-site event lists stop being
/// cheap to materialize and the accumulated f64 sums lose too much resolution.
pub const MAX_HORIZON: f64 = 1.0e7;

#[derive(Debug, Error)]
pub enum ClockError {
    #[error("window [{0}, {1}] is empty")]
    EmptyWindow(i64, i64),
    #[error("horizon {0} outside (0, {MAX_HORIZON}]")]
    BadHorizon(f64),
    #[error("site {0} outside window [{1}, {2}]")]
    SiteOutsideWindow(i64, i64, i64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt event stream dump: {0}")]
    Corrupt(String),
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The rate-1 Poisson clock of a single site, usable as a lazy stream of event times.
///
/// `EventStream::generate` materializes these; the evolution engine also drives them
/// directly when materializing the full window would be wasteful. Both paths share
/// this type, so they observe bit-identical event sequences.
pub struct SiteClock {
    rng: SmallRng,
    t: f64,
}

impl SiteClock {
    pub fn new(seed: u64, site: i64) -> Self {
        // Decorrelate (seed, site) pairs before expanding: a plain sum would make
        // (seed, site) and (seed+1, site-...) collide trivially.
        let mut s = seed ^ (site as u64).wrapping_mul(0xA24B_AED4_963E_E407);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        SiteClock {
            rng: SmallRng::from_seed(key),
            t: 0.0,
        }
    }

    /// Time of the next event, advancing the clock past it.
    pub fn next_event(&mut self) -> f64 {
        let dt: f64 = Exp1.sample(&mut self.rng);
        self.t += dt;
        self.t
    }

    /// Current position of the clock (time of the last event generated, 0 if none).
    pub fn time(&self) -> f64 {
        self.t
    }
}

/// Materialized Poisson events for every site of a window `[x_min, x_max]` up to a
/// fixed horizon. Site lists are strictly increasing; across sites nothing is merged
/// until asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub seed: u64,
    pub x_min: i64,
    pub x_max: i64,
    pub horizon: f64,
    events: Vec<Vec<f64>>,
}

/// Generates the event lists of every site in `window` up to `horizon`.
///
/// Events of a given site depend only on `(seed, site)`: regenerating with a wider
/// window or a longer horizon reproduces the old events exactly (the longer horizon
/// appends to each list without rewriting its head).
pub fn generate_events(
    seed: u64,
    window: (i64, i64),
    horizon: f64,
) -> Result<EventStream, ClockError> {
    let (x_min, x_max) = window;
    if x_min > x_max {
        return Err(ClockError::EmptyWindow(x_min, x_max));
    }
    if !(horizon > 0.0) || horizon > MAX_HORIZON {
        return Err(ClockError::BadHorizon(horizon));
    }
    let n_sites = (x_max - x_min + 1) as usize;
    let mut events = Vec::with_capacity(n_sites);
    for site in x_min..=x_max {
        let mut clock = SiteClock::new(seed, site);
        let mut list = Vec::new();
        loop {
            let t = clock.next_event();
            if t > horizon {
                break;
            }
            list.push(t);
        }
        events.push(list);
    }
    Ok(EventStream {
        seed,
        x_min,
        x_max,
        horizon,
        events,
    })
}

impl EventStream {
    pub fn window(&self) -> (i64, i64) {
        (self.x_min, self.x_max)
    }

    pub fn contains_site(&self, site: i64) -> bool {
        site >= self.x_min && site <= self.x_max
    }

    /// Event times of one site, strictly increasing.
    pub fn site(&self, site: i64) -> Result<&[f64], ClockError> {
        if !self.contains_site(site) {
            return Err(ClockError::SiteOutsideWindow(site, self.x_min, self.x_max));
        }
        Ok(&self.events[(site - self.x_min) as usize])
    }

    fn site_unchecked(&self, site: i64) -> &[f64] {
        &self.events[(site - self.x_min) as usize]
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    /// All events of the window in global time order as `(time, site)`.
    ///
    /// Simultaneous events (which have probability zero but can be injected by tests)
    /// are ordered by site index, ascending, so replay order is total and reproducible.
    pub fn merged_order(&self) -> Vec<(f64, i64)> {
        let mut all = Vec::with_capacity(self.total_events());
        for (i, list) in self.events.iter().enumerate() {
            let site = self.x_min + i as i64;
            all.extend(list.iter().map(|&t| (t, site)));
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all
    }

    /// Latest event at `site` strictly before time `t`, if any.
    pub fn last_event_before(&self, site: i64, t: f64) -> Result<Option<f64>, ClockError> {
        let list = self.site(site)?;
        let idx = list.partition_point(|&e| e < t);
        Ok(if idx == 0 { None } else { Some(list[idx - 1]) })
    }

    /// Index-based variant used by replayers that need the event's position in the
    /// site list (to line it up with per-event metadata recorded elsewhere).
    pub fn last_index_before(&self, site: i64, t: f64) -> Result<Option<usize>, ClockError> {
        let list = self.site(site)?;
        let idx = list.partition_point(|&e| e < t);
        Ok(idx.checked_sub(1))
    }

    const MAGIC: [u8; 4] = *b"TSEV";
    const VERSION: u32 = 1;

    /// Serializes the stream to a compact little-endian binary format.
    pub fn dump<W: Write>(&self, mut w: W) -> Result<(), ClockError> {
        w.write_all(&Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.x_min.to_le_bytes())?;
        w.write_all(&self.x_max.to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        for list in &self.events {
            w.write_all(&(list.len() as u64).to_le_bytes())?;
            for &t in list {
                w.write_all(&t.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn dump_to_path<P: AsRef<Path>>(&self, path: P) -> Result<(), ClockError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.dump(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Reads back a stream written by [`EventStream::dump`], validating the header and
    /// the monotonicity of every site list.
    pub fn load<R: Read>(mut r: R) -> Result<EventStream, ClockError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != Self::MAGIC {
            return Err(ClockError::Corrupt("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != Self::VERSION {
            return Err(ClockError::Corrupt(format!("unknown version {version}")));
        }
        let seed = read_u64(&mut r)?;
        let x_min = read_i64(&mut r)?;
        let x_max = read_i64(&mut r)?;
        let horizon = read_f64(&mut r)?;
        if x_min > x_max {
            return Err(ClockError::Corrupt("empty window".into()));
        }
        if !(horizon > 0.0) || horizon > MAX_HORIZON {
            return Err(ClockError::Corrupt("bad horizon".into()));
        }
        let n_sites = (x_max - x_min + 1) as usize;
        let mut events = Vec::with_capacity(n_sites);
        for _ in 0..n_sites {
            let n = read_u64(&mut r)? as usize;
            let mut list = Vec::with_capacity(n);
            let mut prev = 0.0f64;
            for _ in 0..n {
                let t = read_f64(&mut r)?;
                if !(t > prev) || t > horizon {
                    return Err(ClockError::Corrupt("non-increasing or out-of-range event".into()));
                }
                list.push(t);
                prev = t;
            }
            events.push(list);
        }
        Ok(EventStream {
            seed,
            x_min,
            x_max,
            horizon,
            events,
        })
    }

    pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<EventStream, ClockError> {
        Self::load(BufReader::new(File::open(path)?))
    }

    /// Builds a stream directly from per-site event lists. Intended for tests that
    /// need handcrafted clock realizations (simultaneous events, fixed patterns).
    pub fn from_lists(
        seed: u64,
        x_min: i64,
        horizon: f64,
        events: Vec<Vec<f64>>,
    ) -> Result<EventStream, ClockError> {
        if events.is_empty() {
            return Err(ClockError::EmptyWindow(x_min, x_min - 1));
        }
        if !(horizon > 0.0) || horizon > MAX_HORIZON {
            return Err(ClockError::BadHorizon(horizon));
        }
        for list in &events {
            for pair in list.windows(2) {
                if !(pair[1] >= pair[0]) {
                    return Err(ClockError::Corrupt("non-monotone handcrafted list".into()));
                }
            }
        }
        let x_max = x_min + events.len() as i64 - 1;
        Ok(EventStream {
            seed,
            x_min,
            x_max,
            horizon,
            events,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ClockError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, ClockError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_i64<R: Read>(r: &mut R) -> Result<i64, ClockError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(i64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, ClockError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
