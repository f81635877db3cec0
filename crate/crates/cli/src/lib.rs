//! Experiment harness and file formats on top of `stochwave-core`.
//!
//! `experiments` runs the Monte Carlo strong/weak convergence studies and the
//! log-log rate fits; the remaining modules carry the artifact plumbing:
//! plain-text configs, CSV reports, gnuplot script emission, raw path dumps,
//! and the runtime invariant suite behind the `selftest` command.

pub mod config;
pub mod csvio;
pub mod experiments;
pub mod pathdump;
pub mod plot;
pub mod selftest;
