//! Experiment driver for the cohsim stabilizer laboratory: declarative run
//! files, seeded parallel sweeps, and plot-ready CSV/JSON emitters.

pub mod config;
pub mod output;
