//! Experiment runner for coupling-parameter estimation in the two-level
//! Lorenz-96 system: dataset files and caching, CSV reports, run manifests,
//! a rayon executor and the `chaosid` command line.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod manifest;
pub mod report;

pub use error::{Error, Result};
