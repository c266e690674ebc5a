//! Default hyperparameters, analytic lower bounds for (c₀, c₁) and DIC-based
//! selection over a random grid.

use crate::design::GroupedDesign;
use crate::error::{invalid, Error, Result};
use crate::par::map_indexed;
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::sampler::{run_chain, ChainOutput, McmcConfig, ModelOptions, PriorHyperparams};
use crate::special::norm_logpdf;
use crate::volatility::Volatility;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// λ₀ = 1/2, λ₁ⱼ = log(log(max(N, T))), d₀ = d₁ = 1, a₀ = 2.5, e₀ = 5,
/// e₁ = e₀/(a₀ - 1), group-specific π₁ and hierarchical a₁ switched on.
/// c₀ and c₁ are placeholders (1) to be set by the caller or [`select_c`].
pub fn default_hyperparams(n: usize, t: usize, _g: usize) -> Result<PriorHyperparams> {
    let m = n.max(t);
    if m < 3 {
        return invalid(format!("max(N, T) = {m} must be at least 3 for log(log(max(N, T))) > 0"));
    }
    let lambda1 = (m as f64).ln().ln();
    let a0 = 2.5;
    let e0 = 5.0;
    Ok(PriorHyperparams {
        c0: 1.0,
        d0: 1.0,
        c1: 1.0,
        d1: 1.0,
        a0,
        a1: 1.0,
        e0,
        e1: e0 / (a0 - 1.0),
        lambda0: 0.5,
        lambda1: vec![lambda1; n],
        group_specific_pi1: true,
        hierarchical_a1: true,
    })
}

/// Lower bounds c₀ ≥ 1 - N + N^{u₀+1}/k₀ and
/// c₁ ≥ 1 - Ng + (s₀ᵍʳ g)^{u₁} Ng / k₁.
pub fn c_lower_bounds(n: usize, g: usize, s0gr: usize, u0: f64, u1: f64, k0: f64, k1: f64) -> Result<(f64, f64)> {
    if n <= 1 {
        return invalid(format!("N = {n} must exceed 1"));
    }
    if g == 0 || s0gr == 0 {
        return invalid("g and the active-group guess must be positive");
    }
    if !(k0 > 0.0 && k1 > 0.0) {
        return invalid("k0 and k1 must be positive");
    }
    let nf = n as f64;
    let u0_min = 2f64.ln() / nf.ln();
    if u0 <= u0_min {
        return invalid(format!("u0 = {u0} violates u0 > log 2 / log N = {u0_min}"));
    }
    let sg = (s0gr * g) as f64;
    if sg > 1.0 {
        let u1_min = 2f64.ln() / sg.ln();
        if u1 <= u1_min {
            return invalid(format!("u1 = {u1} violates u1 > log 2 / log(s0gr g) = {u1_min}"));
        }
    } else if u1 <= 0.0 {
        return invalid(format!("u1 = {u1} must be positive"));
    }
    let ng = nf * g as f64;
    let c0 = 1.0 - nf + nf.powf(u0 + 1.0) / k0;
    let c1 = 1.0 - ng + sg.powf(u1) * ng / k1;
    Ok((c0, c1))
}

/// Default guess for the number of active groups when it is unknown.
pub fn default_s0gr_guess(n: usize) -> usize {
    (n / 10).max(1)
}

/// Gaussian log-likelihood of the design at (α, θ, σ²).
pub fn gaussian_loglik(design: &GroupedDesign, intercept: f64, theta: &[f64], sigma2: f64) -> f64 {
    let fit = &design.z * nalgebra::DVector::from_column_slice(theta);
    design
        .y
        .iter()
        .zip(fit.iter())
        .map(|(y, f)| norm_logpdf(*y, intercept + f, sigma2))
        .sum()
}

/// DIC = -4 mean_s log f(y | θ⁽ˢ⁾, σ²⁽ˢ⁾) + 2 log f(y | θ̂, σ̂²), with θ̂ the
/// elementwise posterior median and σ̂² the posterior mean. The intercept,
/// when sampled, enters through its posterior median.
pub fn dic(chain: &ChainOutput, design: &GroupedDesign) -> Result<f64> {
    let s = chain.n_draws();
    if s == 0 {
        return invalid("DIC of an empty chain");
    }
    let mean_ll = chain.loglik_draws.iter().sum::<f64>() / s as f64;
    let theta_hat = chain.theta_median();
    let sigma2_hat = chain.sigma2_draws.iter().sum::<f64>() / s as f64;
    let alpha_hat = crate::sampler::median(chain.intercept_draws.clone());
    let ll_hat = gaussian_loglik(design, alpha_hat, &theta_hat, sigma2_hat);
    Ok(-4.0 * mean_ll + 2.0 * ll_hat)
}

/// Random search region for (c₀, c₁).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c0_range: (f64, f64),
    pub c1_range: (f64, f64),
    pub points: usize,
    pub seed: u64,
}

impl GridSpec {
    /// Reject ranges whose lower ends fall below the analytic bounds.
    pub fn validate(&self, bounds: Option<(f64, f64)>) -> Result<()> {
        if self.points == 0 {
            return invalid("grid needs at least one point");
        }
        for (name, (lo, hi)) in [("c0", self.c0_range), ("c1", self.c1_range)] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return invalid(format!("{name} range ({lo}, {hi}) must satisfy 0 < lo <= hi < inf"));
            }
        }
        if let Some((b0, b1)) = bounds {
            if self.c0_range.0 < b0 {
                return invalid(format!("c0 range starts at {} below the lower bound {b0}", self.c0_range.0));
            }
            if self.c1_range.0 < b1 {
                return invalid(format!("c1 range starts at {} below the lower bound {b1}", self.c1_range.0));
            }
        }
        Ok(())
    }

    /// Grid points drawn log-uniformly inside the ranges; point k depends
    /// only on (seed, k).
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.points)
            .map(|k| {
                let mut rng = rng_from_seed(derive_seed(self.seed, stream::GRID, k as u64));
                let draw = |rng: &mut crate::rng::ChainRng, (lo, hi): (f64, f64)| {
                    if hi == lo {
                        lo
                    } else {
                        (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
                    }
                };
                let c0 = draw(&mut rng, self.c0_range);
                let c1 = draw(&mut rng, self.c1_range);
                (c0, c1)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DicRow {
    pub index: usize,
    pub c0: f64,
    pub c1: f64,
    pub chain_seed: u64,
    pub dic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub c0: f64,
    pub c1: f64,
    pub dic: f64,
    pub table: Vec<DicRow>,
}

/// Evaluate the DIC at explicit (c₀, c₁) points, one homoskedastic chain per
/// point with seed derived from `mcmc.seed` and the point index.
pub fn dic_table(
    design: &GroupedDesign,
    template: &PriorHyperparams,
    points: &[(f64, f64)],
    mcmc: &McmcConfig,
    opts: &ModelOptions,
) -> Vec<DicRow> {
    let opts = ModelOptions { volatility: Volatility::Homoskedastic, ..opts.clone() };
    map_indexed(points.len(), |k| {
        let (c0, c1) = points[k];
        let chain_seed = derive_seed(mcmc.seed, stream::TUNING, k as u64);
        let cfg = McmcConfig { seed: chain_seed, ..*mcmc };
        let prior = template.clone().with_c(c0, c1);
        let res = run_chain(design, &prior, &cfg, &opts).and_then(|ch| dic(&ch, design));
        let (dic, error) = match res {
            Ok(d) if d.is_finite() => (Some(d), None),
            Ok(d) => (None, Some(format!("non-finite DIC {d}"))),
            Err(e) => (None, Some(e.to_string())),
        };
        DicRow { index: k, c0, c1, chain_seed, dic, error }
    })
}

/// Pick (c₀, c₁) minimizing the DIC; exact ties go to the larger pair.
pub fn select_from_table(table: Vec<DicRow>) -> Result<Selection> {
    let mut best: Option<&DicRow> = None;
    for row in &table {
        let Some(d) = row.dic else { continue };
        best = match best {
            None => Some(row),
            Some(b) => {
                let bd = b.dic.unwrap();
                let larger = (row.c0, row.c1) > (b.c0, b.c1);
                if d < bd || (d == bd && larger) {
                    Some(row)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best = best.ok_or_else(|| Error::Degenerate("every tuning chain failed".into()))?;
    Ok(Selection { c0: best.c0, c1: best.c1, dic: best.dic.unwrap(), table: table.clone() })
}

/// Random-grid DIC search over (c₀, c₁).
pub fn select_c(
    design: &GroupedDesign,
    template: &PriorHyperparams,
    grid: &GridSpec,
    mcmc: &McmcConfig,
    opts: &ModelOptions,
) -> Result<Selection> {
    grid.validate(None)?;
    let points = grid.points();
    select_from_table(dic_table(design, template, &points, mcmc, opts))
}

/// Shortened chain length used for tuning when none is given.
pub fn default_tuning_mcmc(seed: u64) -> McmcConfig {
    McmcConfig { sweeps: 10_000, burn_in: 2_000, thin: 1, seed }
}
