//! Coupling-parameter estimation for the two-level Lorenz-96 system.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical
//! piece of the pipeline:
//!
//! * [`dynsys`]: the two-level Lorenz-96 right-hand side and a fixed-step RK4 integrator.
//! * [`datagen`]: the eight-experiment grid, parameter sampling and regime-windowed snapshots.
//! * [`gp`]: exact Gaussian-process regression with a squared-exponential kernel.
//! * [`baselines`]: least-squares and fully-connected network regressors.
//! * [`metrics`]: MSE, MAE, R², Pearson correlation, histograms and Bhattacharyya distance.
//! * [`analysis`]: h-density comparison, error growth of re-simulated trajectories, 95% bounds.
//! * [`pipeline`]: one experiment end to end, from a dataset to metric rows and figure series.
//!
//! File formats, caching, threads and the command line live in the `chaosid` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod baselines;
pub mod datagen;
pub mod dynsys;
pub mod error;
pub mod exec;
pub mod gp;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::Matrix;
