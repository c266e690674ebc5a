//! Bayesian sparse group selection with spike-and-slab priors.
//!
//! The crate builds grouped and mixed-frequency (MIDAS) regression designs,
//! samples the bi-level spike-and-slab posterior by Gibbs/Metropolis steps,
//! optionally with stochastic volatility, tunes the Beta-prior constants by
//! DIC, simulates the Monte Carlo designs used to study the method, and scores
//! density forecasts. The [`cli`] module drives all of it from TOML configs.

pub mod error;
pub mod par;
pub mod rng;
pub mod special;

pub mod design;
pub mod dgp;
pub mod eval;
pub mod sampler;
pub mod tuning;
pub mod volatility;

pub mod cli;

pub use error::{Error, Result};
