//! Totally asymmetric simple exclusion process (TASEP) on a finite window of the
//! integer lattice, built around the graphical construction: every site carries an
//! independent rate-1 Poisson clock, and any number of particle configurations can be
//! evolved against the same realization of the clocks (the basic coupling).
//!
//! The crate has three layers:
//!
//! * stochastic dynamics: [`clockwork`] (Poisson clocks), [`lattice`] (configurations,
//!   height functions, shock initial data), [`engine`] (coupled evolution, multiclass
//!   dynamics, an exact finite-chain distribution), [`tracker`] (pathwise couplings of a
//!   second-class particle with height-function events), [`geodesics`] (backwards paths
//!   of the height function);
//! * exact numerics: [`limits`] (Airy functions, Fredholm determinants, Tracy-Widom
//!   tables, transition kernels of the determinantal description and their scaling
//!   limits, the shock fluctuation law);
//! * experiment orchestration: [`harness`] (configs, statistics, reports, CLI).

pub mod clockwork;
pub mod engine;
pub mod geodesics;
pub mod harness;
pub mod lattice;
pub mod limits;
pub mod tracker;
