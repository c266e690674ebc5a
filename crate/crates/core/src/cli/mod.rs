//! Command-line layer: configuration, data ingestion, study and nowcast
//! orchestration, and report emission. The `bsgs` binary is a thin wrapper
//! over [`run`].

pub mod config;
pub mod estimate;
pub mod nowcast;
pub mod panel;
pub mod plot;
pub mod report;
pub mod study;

use crate::design::GroupedDesign;
use crate::error::Result;
use crate::par::{map_indexed, map_indexed_seq};
use crate::sampler::{run_chain, ChainOutput, ForecastDensity, ModelOptions, PriorHyperparams};
pub use config::{Format, Mode, Overrides, RunConfig};
use config::McmcBlock;
use std::path::PathBuf;

/// Posterior from one or more chains on a (possibly standardized) design.
#[derive(Debug, Clone)]
pub struct Fit {
    pub chain: ChainOutput,
    pub chain_seeds: Vec<u64>,
    /// Column divisors applied before sampling.
    pub scale: Option<Vec<f64>>,
}

impl Fit {
    /// Apply the training scaling to a raw regressor row.
    pub fn scale_row(&self, row: &[f64]) -> Vec<f64> {
        match &self.scale {
            Some(s) => row.iter().zip(s).map(|(v, d)| v / d).collect(),
            None => row.to_vec(),
        }
    }

    /// Coefficient draws mapped back to the raw column units.
    pub fn theta_raw(&self, theta: &[f64]) -> Vec<f64> {
        match &self.scale {
            Some(s) => theta.iter().zip(s).map(|(v, d)| v / d).collect(),
            None => theta.to_vec(),
        }
    }
}

/// Run `mcmc.chains` chains for task `task` and stack them. Chains run in
/// parallel only when `parallel_chains` is set, so callers that already fan
/// out over tasks keep each task on one worker.
pub fn fit(
    design: &GroupedDesign,
    standardize: bool,
    prior: &PriorHyperparams,
    mcmc: &McmcBlock,
    run_seed: u64,
    task: u64,
    opts: &ModelOptions,
    parallel_chains: bool,
) -> Result<Fit> {
    let (work, scale) = if standardize {
        let s = design.scaled();
        let scale = s.column_scale.clone();
        (s, scale)
    } else {
        (design.clone(), None)
    };
    let cfgs: Vec<_> = (0..mcmc.chains).map(|i| mcmc.chain(run_seed, task, i)).collect();
    let one = |i: usize| run_chain(&work, prior, &cfgs[i], opts);
    let chains = if parallel_chains { map_indexed(cfgs.len(), one) } else { map_indexed_seq(cfgs.len(), one) };
    let chain = ChainOutput::concat(chains.into_iter().collect::<Result<Vec<_>>>()?)?;
    Ok(Fit { chain, chain_seeds: cfgs.iter().map(|c| c.seed).collect(), scale })
}

/// Keep at most `k` evenly spaced components so the O(k²) CRPS stays cheap.
pub fn thin_density(f: ForecastDensity, k: usize) -> Result<ForecastDensity> {
    let n = f.len();
    if n <= k {
        return Ok(f);
    }
    let idx: Vec<usize> = (0..k).map(|i| i * n / k).collect();
    ForecastDensity::new(
        idx.iter().map(|&i| f.means[i]).collect(),
        idx.iter().map(|&i| f.variances[i]).collect(),
        idx.iter().map(|&i| f.weights[i]).collect(),
    )
}

/// Run one verb end to end and return the files written.
pub fn run(mode: Mode, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate(mode)?;
    match mode {
        Mode::SimulateGrouped => study::run_grouped(cfg),
        Mode::SimulateMidas => study::run_midas(cfg),
        Mode::Estimate => estimate::run_estimate(cfg),
        Mode::Tune => estimate::run_tune(cfg),
        Mode::Nowcast => nowcast::run_nowcast(cfg),
    }
}
