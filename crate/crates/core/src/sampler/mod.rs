//! Gibbs/Metropolis sampler for the bi-level spike-and-slab regression.
//!
//! One sweep runs, in order: the error-variance block (σ² and a₁, or the
//! stochastic-volatility steps), the within-group scales v, the group
//! coefficients b, the Metropolis step for τ, the Beta updates for π₀ and π₁,
//! and finally the optional intercept. The running residual y - α - Zθ is
//! updated after every coordinate change.

mod conditionals;
mod density;

pub use conditionals::*;
pub use density::ForecastDensity;

use crate::design::GroupedDesign;
use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, ChainRng};
use crate::special::{norm_logpdf, sample_beta, sample_gamma_rate, sample_inv_gamma, sample_truncated_normal_pos};
use crate::volatility::{self, SvOptions, SvState, Volatility};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Prior constants. π₀ and π₁ are spike probabilities with Beta(c, d) priors,
/// τ_j ~ Gamma(λ₀, scale λ₁ⱼ), σ² ~ IG(a₀, a₁) and, when `hierarchical_a1`,
/// a₁ ~ Gamma(e₀, rate e₁).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorHyperparams {
    pub c0: f64,
    pub d0: f64,
    pub c1: f64,
    pub d1: f64,
    pub a0: f64,
    pub a1: f64,
    pub e0: f64,
    pub e1: f64,
    pub lambda0: f64,
    pub lambda1: Vec<f64>,
    pub group_specific_pi1: bool,
    pub hierarchical_a1: bool,
}

impl PriorHyperparams {
    pub fn validate(&self, n_groups: usize) -> Result<()> {
        if self.lambda1.len() != n_groups {
            return Err(Error::DimensionMismatch { what: "lambda1 per group", expected: n_groups, got: self.lambda1.len() });
        }
        let scalars = [
            ("c0", self.c0),
            ("d0", self.d0),
            ("c1", self.c1),
            ("d1", self.d1),
            ("a0", self.a0),
            ("a1", self.a1),
            ("e0", self.e0),
            ("e1", self.e1),
        ];
        for (name, v) in scalars {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self.lambda0 != 0.5 {
            return invalid(format!("lambda0 is fixed at 1/2, got {}", self.lambda0));
        }
        if let Some(l) = self.lambda1.iter().find(|l| !(**l > 0.0)) {
            return invalid(format!("lambda1 entries must be positive, got {l}"));
        }
        Ok(())
    }

    pub fn with_c(mut self, c0: f64, c1: f64) -> Self {
        self.c0 = c0;
        self.c1 = c1;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { sweeps: 60_000, burn_in: 10_000, thin: 5, seed: 1 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return invalid(format!("sweeps ({}) must exceed burn_in ({})", self.sweeps, self.burn_in));
        }
        if self.thin == 0 {
            return invalid("thin must be at least 1");
        }
        Ok(())
    }

    /// Number of retained draws, (sweeps - burn_in) / thin.
    pub fn retained(&self) -> usize {
        (self.sweeps - self.burn_in) / self.thin
    }
}

/// Model variant switches that are not prior constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ModelOptions {
    pub volatility: Volatility,
    pub sv: SvOptions,
    /// Sample an unpenalized intercept with a flat prior.
    pub intercept: bool,
}

/// Parameters of one Gibbs iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub tau: Vec<f64>,
    pub pi0: f64,
    /// One entry per group; all equal unless π₁ is group-specific.
    pub pi1: Vec<f64>,
    pub sigma2: f64,
    pub a1: f64,
    /// Group spike indicators (true: b_j = 0).
    pub gamma0: Vec<bool>,
    /// Within-group spike indicators (true: v_ji = 0).
    pub gamma1: Vec<bool>,
    pub intercept: f64,
    pub sv: Option<SvState>,
}

impl ChainState {
    /// b = 0, v = 0, τ = 1, π₀ = π₁ = 1/2, σ² = sample variance of y.
    pub fn initial(design: &GroupedDesign, prior: &PriorHyperparams, opts: &ModelOptions) -> Self {
        let p = design.width();
        let n = design.n_groups();
        let t = design.n_obs();
        let mean = design.y.iter().sum::<f64>() / t as f64;
        let var = design.y.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / t.max(2).saturating_sub(1) as f64;
        let sigma2 = if var > 0.0 && var.is_finite() { var } else { 1.0 };
        let sv = opts
            .volatility
            .is_sv()
            .then(|| SvState::initial(t, sigma2.ln(), opts.volatility, &opts.sv));
        Self {
            b: vec![0.0; p],
            v: vec![0.0; p],
            theta: vec![0.0; p],
            tau: vec![1.0; n],
            pi0: 0.5,
            pi1: vec![0.5; n],
            sigma2,
            a1: prior.a1,
            gamma0: vec![true; n],
            gamma1: vec![true; p],
            intercept: if opts.intercept { mean } else { 0.0 },
            sv,
        }
    }

    /// θ = v ⊙ b and the indicator/zero pattern hold.
    pub fn is_consistent(&self, design: &GroupedDesign) -> bool {
        let theta_ok = self.theta.iter().zip(self.v.iter().zip(&self.b)).all(|(t, (v, b))| *t == v * b);
        let v_ok = self.v.iter().zip(&self.gamma1).all(|(v, g)| *v >= 0.0 && (!g || *v == 0.0));
        let b_ok = (0..design.n_groups())
            .all(|j| !self.gamma0[j] || design.partition.range(j).all(|c| self.b[c] == 0.0));
        theta_ok && v_ok && b_ok
    }
}

/// Per-draw summaries of the volatility block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvDraws {
    /// Posterior mean of ζ_t.
    pub zeta_mean: Vec<f64>,
    /// Posterior frequency of ω_t > 1.
    pub outlier_prob: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu_zeta: Vec<f64>,
    pub phi_zeta: Vec<f64>,
    pub sigma2_zeta: Vec<f64>,
    pub p_omega: Vec<f64>,
    pub zeta_acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcMeta {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Metropolis acceptance rate of τ_j over all sweeps.
    pub tau_acceptance: Vec<f64>,
}

/// Thinned post-burn-in output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    /// S × (Σ g_j).
    pub theta_draws: DMatrix<f64>,
    pub sigma2_draws: Vec<f64>,
    pub intercept_draws: Vec<f64>,
    pub pi0_draws: Vec<f64>,
    /// Mean of π₁ⱼ over groups.
    pub pi1_draws: Vec<f64>,
    pub inclusion_group: Vec<f64>,
    pub inclusion_within: Vec<f64>,
    /// log f(y | θ, σ²) (or the SV likelihood) per retained draw.
    pub loglik_draws: Vec<f64>,
    /// One-step-ahead error variance per retained draw.
    pub pred_var_draws: Vec<f64>,
    pub sv_draws: Option<SvDraws>,
    pub mcmc_meta: McmcMeta,
    pub volatility: Volatility,
}

impl ChainOutput {
    pub fn n_draws(&self) -> usize {
        self.sigma2_draws.len()
    }

    /// Elementwise posterior median of θ.
    pub fn theta_median(&self) -> Vec<f64> {
        (0..self.theta_draws.ncols())
            .map(|c| median(self.theta_draws.column(c).iter().copied().collect()))
            .collect()
    }

    /// Stack the draws of independent chains run on the same design.
    pub fn concat(chains: Vec<ChainOutput>) -> Result<ChainOutput> {
        let mut it = chains.into_iter();
        let mut out = it.next().ok_or_else(|| Error::InvalidArgument("no chains to combine".into()))?;
        let mut weight = out.n_draws() as f64;
        for ch in it {
            if ch.theta_draws.ncols() != out.theta_draws.ncols() || ch.volatility != out.volatility {
                return invalid("chains differ in width or volatility model");
            }
            let (a, b) = (weight, ch.n_draws() as f64);
            let avg = |x: &mut Vec<f64>, y: &[f64]| {
                for (u, v) in x.iter_mut().zip(y) {
                    *u = (*u * a + v * b) / (a + b);
                }
            };
            avg(&mut out.inclusion_group, &ch.inclusion_group);
            avg(&mut out.inclusion_within, &ch.inclusion_within);
            avg(&mut out.mcmc_meta.tau_acceptance, &ch.mcmc_meta.tau_acceptance);
            if let (Some(o), Some(c)) = (out.sv_draws.as_mut(), ch.sv_draws.as_ref()) {
                avg(&mut o.zeta_mean, &c.zeta_mean);
                avg(&mut o.outlier_prob, &c.outlier_prob);
                o.zeta_acceptance = (o.zeta_acceptance * a + c.zeta_acceptance * b) / (a + b);
                o.nu.extend_from_slice(&c.nu);
                o.mu_zeta.extend_from_slice(&c.mu_zeta);
                o.phi_zeta.extend_from_slice(&c.phi_zeta);
                o.sigma2_zeta.extend_from_slice(&c.sigma2_zeta);
                o.p_omega.extend_from_slice(&c.p_omega);
            }
            let rows = out.theta_draws.nrows();
            let mut stacked = DMatrix::zeros(rows + ch.theta_draws.nrows(), out.theta_draws.ncols());
            stacked.rows_mut(0, rows).copy_from(&out.theta_draws);
            stacked.rows_mut(rows, ch.theta_draws.nrows()).copy_from(&ch.theta_draws);
            out.theta_draws = stacked;
            out.sigma2_draws.extend_from_slice(&ch.sigma2_draws);
            out.intercept_draws.extend_from_slice(&ch.intercept_draws);
            out.pi0_draws.extend_from_slice(&ch.pi0_draws);
            out.pi1_draws.extend_from_slice(&ch.pi1_draws);
            out.loglik_draws.extend_from_slice(&ch.loglik_draws);
            out.pred_var_draws.extend_from_slice(&ch.pred_var_draws);
            weight = a + b;
        }
        Ok(out)
    }

    pub fn theta_mean(&self) -> Vec<f64> {
        let s = self.n_draws() as f64;
        (0..self.theta_draws.ncols()).map(|c| self.theta_draws.column(c).sum() / s).collect()
    }
}

pub(crate) fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Drives the individual Gibbs steps over a fixed design.
pub struct Sampler<'a> {
    z: &'a DMatrix<f64>,
    design: &'a GroupedDesign,
    prior: &'a PriorHyperparams,
    opts: &'a ModelOptions,
    y: Vec<f64>,
    /// y - α - Zθ.
    resid: Vec<f64>,
    /// Σ_t z_tc² per column.
    col_sq: Vec<f64>,
    /// Z_j'Z_j per group.
    gram: Vec<DMatrix<f64>>,
    /// Per-observation precisions for the SV model.
    weights: Vec<f64>,
    tau_moves: Vec<(usize, usize)>,
    zeta_moves: (usize, usize),
}

impl<'a> Sampler<'a> {
    pub fn new(design: &'a GroupedDesign, prior: &'a PriorHyperparams, opts: &'a ModelOptions) -> Result<Self> {
        prior.validate(design.n_groups())?;
        let z = &design.z;
        let t = design.n_obs();
        let col_sq = (0..design.width())
            .map(|c| z.as_slice()[c * t..(c + 1) * t].iter().map(|x| x * x).sum())
            .collect();
        let gram = (0..design.n_groups())
            .map(|j| {
                let r = design.partition.range(j);
                let block = z.columns(r.start, r.len());
                block.transpose() * block
            })
            .collect();
        let mut s = Self {
            z,
            design,
            prior,
            opts,
            y: design.y.clone(),
            resid: vec![0.0; t],
            col_sq,
            gram,
            weights: vec![1.0; t],
            tau_moves: vec![(0, 0); design.n_groups()],
            zeta_moves: (0, 0),
        };
        s.resid = s.y.clone();
        Ok(s)
    }

    fn col(&self, c: usize) -> &[f64] {
        let t = self.y.len();
        &self.z.as_slice()[c * t..(c + 1) * t]
    }

    pub fn residual(&self) -> &[f64] {
        &self.resid
    }

    /// Replace the response (used by successive-conditional checks) and
    /// rebuild the residual for `state`.
    pub fn set_response(&mut self, y: Vec<f64>, state: &ChainState) {
        assert_eq!(y.len(), self.y.len());
        self.y = y;
        self.refresh_residual(state);
    }

    /// Recompute y - α - Zθ from scratch.
    pub fn refresh_residual(&mut self, state: &ChainState) {
        let t = self.y.len();
        let mut r: Vec<f64> = self.y.iter().map(|y| y - state.intercept).collect();
        for (c, &th) in state.theta.iter().enumerate() {
            if th != 0.0 {
                let col = &self.z.as_slice()[c * t..(c + 1) * t];
                for (ri, zi) in r.iter_mut().zip(col) {
                    *ri -= zi * th;
                }
            }
        }
        self.resid = r;
    }

    fn homoskedastic(&self) -> bool {
        !self.opts.volatility.is_sv()
    }

    fn refresh_weights(&mut self, state: &ChainState) {
        if let Some(sv) = &state.sv {
            for t in 0..self.weights.len() {
                self.weights[t] = 1.0 / sv.obs_variance(t);
            }
        }
    }

    /// Σ_t w_t z_tc² and Σ_t w_t z_tc r_t.
    fn weighted_col_stats(&self, c: usize, state: &ChainState) -> (f64, f64) {
        let col = self.col(c);
        if self.homoskedastic() {
            let zr: f64 = col.iter().zip(&self.resid).map(|(z, r)| z * r).sum();
            (self.col_sq[c] / state.sigma2, zr / state.sigma2)
        } else {
            let mut zz = 0.0;
            let mut zr = 0.0;
            for ((z, r), w) in col.iter().zip(&self.resid).zip(&self.weights) {
                zz += w * z * z;
                zr += w * z * r;
            }
            (zz, zr)
        }
    }

    fn shift_residual(&mut self, c: usize, delta_theta: f64) {
        if delta_theta == 0.0 {
            return;
        }
        let t = self.y.len();
        let col = &self.z.as_slice()[c * t..(c + 1) * t];
        for (r, z) in self.resid.iter_mut().zip(col) {
            *r -= z * delta_theta;
        }
    }

    /// Step (a): σ² ~ IG(T/2 + a₀, ‖r‖²/2 + a₁), then a₁ if hierarchical.
    /// Under stochastic volatility this runs the volatility block instead.
    pub fn step_sigma2<R: Rng + ?Sized>(&mut self, state: &mut ChainState, sweep: usize, rng: &mut R) -> Result<()> {
        if let Some(sv) = state.sv.as_mut() {
            let model = self.opts.volatility;
            let o = &self.opts.sv;
            if model.student_t() {
                volatility::step_mixture_scale(sv, &self.resid, rng);
            }
            if model.outliers() {
                volatility::step_outliers(sv, &self.resid, o, rng);
            }
            let (a, n) = volatility::step_log_volatility(sv, &self.resid, o, rng);
            self.zeta_moves.0 += a;
            self.zeta_moves.1 += n;
            volatility::step_sv_params(sv, model, o, rng);
            let mean_var = (0..sv.len()).map(|t| sv.obs_variance(t)).sum::<f64>() / sv.len() as f64;
            if !mean_var.is_finite() || mean_var <= 0.0 {
                return Err(Error::NonFinite { sweep, what: "stochastic volatility path".into() });
            }
            state.sigma2 = mean_var;
            self.refresh_weights(state);
            return Ok(());
        }
        let ss: f64 = self.resid.iter().map(|r| r * r).sum();
        if !ss.is_finite() {
            return Err(Error::NonFinite { sweep, what: "residual sum of squares".into() });
        }
        let a1 = if self.prior.hierarchical_a1 { state.a1 } else { self.prior.a1 };
        let (shape, scale) = sigma2_conditional(ss, self.y.len(), self.prior.a0, a1);
        state.sigma2 = sample_inv_gamma(rng, shape, scale);
        if self.prior.hierarchical_a1 {
            let (shape, rate) = a1_conditional(state.sigma2, self.prior.a0, self.prior.e0, self.prior.e1);
            state.a1 = sample_gamma_rate(rng, shape, rate);
        }
        Ok(())
    }

    /// Step (b): each v_ji from its spike / truncated-normal mixture.
    pub fn step_v<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) {
        let part = &self.design.partition;
        for j in 0..part.n_groups() {
            let tau = state.tau[j];
            let pi1 = state.pi1[j];
            for c in part.range(j) {
                let old = state.theta[c];
                let (zwz, zwr_full) = self.weighted_col_stats(c, state);
                // partial residual adds this coordinate's own contribution back
                let zwr = zwr_full + zwz * old;
                let (eta2, nu) = within_moments(state.b[c], zwz, zwr, tau);
                let p_spike = spike_prob_within(eta2, nu, tau, pi1);
                let spike = rng.random::<f64>() < p_spike;
                let v = if spike { 0.0 } else { sample_truncated_normal_pos(rng, nu, eta2.sqrt()) };
                state.v[c] = v;
                state.gamma1[c] = spike;
                let new = v * state.b[c];
                state.theta[c] = new;
                self.shift_residual(c, new - old);
            }
        }
    }

    /// Z_j'WZ_j and Z_j'W r̃ for group j, with r̃ excluding the group.
    fn group_stats(&self, j: usize, state: &ChainState) -> (DMatrix<f64>, DVector<f64>) {
        let r = self.design.partition.range(j);
        let g = r.len();
        let zwz = if self.homoskedastic() {
            &self.gram[j] / state.sigma2
        } else {
            let t = self.y.len();
            DMatrix::from_fn(g, g, |a, b| {
                let ca = &self.z.as_slice()[(r.start + a) * t..(r.start + a + 1) * t];
                let cb = &self.z.as_slice()[(r.start + b) * t..(r.start + b + 1) * t];
                ca.iter().zip(cb).zip(&self.weights).map(|((x, y), w)| w * x * y).sum()
            })
        };
        let mut zwr = DVector::from_fn(g, |a, _| self.weighted_col_stats(r.start + a, state).1);
        let theta_j = DVector::from_fn(g, |a, _| state.theta[r.start + a]);
        zwr += &zwz * theta_j;
        (zwz, zwr)
    }

    /// Step (c): each b_j from its point-mass / Gaussian mixture.
    pub fn step_b<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        for j in 0..self.design.n_groups() {
            let r = self.design.partition.range(j);
            let g = r.len();
            let v_j = &state.v[r.clone()];
            let all_zero = v_j.iter().all(|&v| v == 0.0);
            let (p_spike, cond) = if all_zero {
                (state.pi0.clamp(0.0, 1.0), None)
            } else {
                let (zwz, zwr) = self.group_stats(j, state);
                let cond = group_conditional(&zwz, &zwr, v_j)?;
                (spike_prob_group(&cond, state.pi0), Some(cond))
            };
            let spike = rng.random::<f64>() < p_spike;
            state.gamma0[j] = spike;
            let b_new: Vec<f64> = if spike {
                vec![0.0; g]
            } else {
                let eps = DVector::from_fn(g, |_, _| StandardNormal.sample(rng));
                match &cond {
                    None => eps.iter().copied().collect(),
                    Some(cond) => {
                        let dev = cond.l.tr_solve_lower_triangular(&eps).expect("positive diagonal");
                        (&cond.mean + dev).iter().copied().collect()
                    }
                }
            };
            for (a, c) in r.enumerate() {
                state.b[c] = b_new[a];
                let old = state.theta[c];
                let new = state.v[c] * b_new[a];
                state.theta[c] = new;
                self.shift_residual(c, new - old);
            }
        }
        Ok(())
    }

    /// Step (d): Metropolis–Hastings for τ_j with an exponential proposal
    /// centred at the current value.
    pub fn step_tau<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) {
        for j in 0..self.design.n_groups() {
            let r = self.design.partition.range(j);
            let xi = state.v[r.clone()].iter().filter(|&&v| v > 0.0).count();
            let s: f64 = state.v[r].iter().map(|v| v * v).sum();
            let old = state.tau[j];
            let e: f64 = Exp1.sample(rng);
            let new = old * e;
            self.tau_moves[j].1 += 1;
            if new <= 0.0 {
                continue;
            }
            let log_r = tau_log_ratio(old, new, xi, s, self.prior.lambda1[j]);
            if rng.random::<f64>().ln() < log_r {
                state.tau[j] = new;
                self.tau_moves[j].0 += 1;
            }
        }
    }

    /// Step (e): Beta updates of the spike probabilities.
    pub fn step_pi<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) {
        let p = self.prior;
        let n = state.gamma0.len();
        let spikes0 = state.gamma0.iter().filter(|&&s| s).count();
        let (a, b) = pi_conditional(p.c0, p.d0, spikes0, n - spikes0);
        state.pi0 = sample_beta(rng, a, b);
        let part = &self.design.partition;
        if p.group_specific_pi1 {
            for j in 0..n {
                let r = part.range(j);
                let spikes = state.gamma1[r.clone()].iter().filter(|&&s| s).count();
                let (a, b) = pi_conditional(p.c1, p.d1, spikes, r.len() - spikes);
                state.pi1[j] = sample_beta(rng, a, b);
            }
        } else {
            let spikes = state.gamma1.iter().filter(|&&s| s).count();
            let (a, b) = pi_conditional(p.c1, p.d1, spikes, state.gamma1.len() - spikes);
            let draw = sample_beta(rng, a, b);
            state.pi1.iter_mut().for_each(|x| *x = draw);
        }
    }

    /// Flat-prior intercept: α ~ N(Σ w (r + α) / Σ w, 1 / Σ w).
    pub fn step_intercept<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) {
        let old = state.intercept;
        let (sw, swr) = if self.homoskedastic() {
            let n = self.y.len() as f64;
            (n / state.sigma2, self.resid.iter().map(|r| r + old).sum::<f64>() / state.sigma2)
        } else {
            let sw: f64 = self.weights.iter().sum();
            (sw, self.resid.iter().zip(&self.weights).map(|(r, w)| w * (r + old)).sum())
        };
        let e: f64 = StandardNormal.sample(rng);
        let new = swr / sw + e / sw.sqrt();
        state.intercept = new;
        for r in &mut self.resid {
            *r += old - new;
        }
    }

    /// One full sweep, steps (a) to (e) then the intercept.
    pub fn sweep<R: Rng + ?Sized>(&mut self, state: &mut ChainState, sweep: usize, rng: &mut R) -> Result<()> {
        self.step_sigma2(state, sweep, rng)?;
        self.step_v(state, rng);
        self.step_b(state, rng)?;
        self.step_tau(state, rng);
        self.step_pi(state, rng);
        if self.opts.intercept {
            self.step_intercept(state, rng);
        }
        Ok(())
    }

    /// Gaussian log-likelihood of y at the current state.
    pub fn loglik(&self, state: &ChainState) -> f64 {
        match &state.sv {
            None => self.resid.iter().map(|r| norm_logpdf(*r, 0.0, state.sigma2)).sum(),
            Some(sv) => self
                .resid
                .iter()
                .enumerate()
                .map(|(t, r)| norm_logpdf(*r, 0.0, sv.obs_variance(t)))
                .sum(),
        }
    }

    pub fn tau_acceptance(&self) -> Vec<f64> {
        self.tau_moves
            .iter()
            .map(|&(a, n)| if n == 0 { 0.0 } else { a as f64 / n as f64 })
            .collect()
    }
}

/// Run one chain and collect thinned post-burn-in draws.
pub fn run_chain(
    design: &GroupedDesign,
    prior: &PriorHyperparams,
    mcmc: &McmcConfig,
    opts: &ModelOptions,
) -> Result<ChainOutput> {
    mcmc.validate()?;
    let mut sampler = Sampler::new(design, prior, opts)?;
    let mut state = ChainState::initial(design, prior, opts);
    sampler.refresh_residual(&state);
    sampler.refresh_weights(&state);
    let mut rng: ChainRng = rng_from_seed(mcmc.seed);

    let s_total = mcmc.retained();
    let p = design.width();
    let n = design.n_groups();
    let t_len = design.n_obs();
    let mut theta_draws = DMatrix::zeros(s_total, p);
    let mut out_scalars = vec![Vec::with_capacity(s_total); 6];
    let mut incl_group = vec![0usize; n];
    let mut incl_within = vec![0usize; p];
    let sv_on = opts.volatility.is_sv();
    let mut zeta_sum = vec![0.0; if sv_on { t_len } else { 0 }];
    let mut outlier_count = vec![0usize; zeta_sum.len()];
    let mut sv_scalars = vec![Vec::with_capacity(if sv_on { s_total } else { 0 }); 5];

    let mut kept = 0;
    for sweep in 0..mcmc.sweeps {
        sampler.sweep(&mut state, sweep, &mut rng)?;
        if sweep % 50 == 49 {
            sampler.refresh_residual(&state);
        }
        let after = sweep + 1;
        if after <= mcmc.burn_in || (after - mcmc.burn_in) % mcmc.thin != 0 || kept >= s_total {
            continue;
        }
        let ll = sampler.loglik(&state);
        if !ll.is_finite() {
            return Err(Error::NonFinite { sweep, what: "log-likelihood".into() });
        }
        for c in 0..p {
            theta_draws[(kept, c)] = state.theta[c];
            if state.theta[c] != 0.0 {
                incl_within[c] += 1;
            }
        }
        for (j, inc) in incl_group.iter_mut().enumerate() {
            if design.partition.range(j).any(|c| state.theta[c] != 0.0) {
                *inc += 1;
            }
        }
        let pred_var = match &state.sv {
            None => state.sigma2,
            Some(sv) => sv.predictive_variance(opts.volatility, &mut rng),
        };
        out_scalars[0].push(state.sigma2);
        out_scalars[1].push(state.intercept);
        out_scalars[2].push(state.pi0);
        out_scalars[3].push(state.pi1.iter().sum::<f64>() / n as f64);
        out_scalars[4].push(ll);
        out_scalars[5].push(pred_var);
        if let Some(sv) = &state.sv {
            for t in 0..t_len {
                zeta_sum[t] += sv.zeta[t];
                if sv.omega_t[t] > 1.0 {
                    outlier_count[t] += 1;
                }
            }
            sv_scalars[0].push(sv.nu);
            sv_scalars[1].push(sv.mu_zeta);
            sv_scalars[2].push(sv.phi_zeta);
            sv_scalars[3].push(sv.sigma2_zeta);
            sv_scalars[4].push(sv.p_omega);
        }
        kept += 1;
    }
    debug_assert_eq!(kept, s_total);
    let sd = s_total as f64;
    let mut sc = out_scalars.into_iter();
    let mut next = || sc.next().unwrap();
    let sv_draws = sv_on.then(|| {
        let mut it = sv_scalars.into_iter();
        SvDraws {
            zeta_mean: zeta_sum.iter().map(|z| z / sd).collect(),
            outlier_prob: outlier_count.iter().map(|&k| k as f64 / sd).collect(),
            nu: it.next().unwrap(),
            mu_zeta: it.next().unwrap(),
            phi_zeta: it.next().unwrap(),
            sigma2_zeta: it.next().unwrap(),
            p_omega: it.next().unwrap(),
            zeta_acceptance: if sampler.zeta_moves.1 == 0 {
                0.0
            } else {
                sampler.zeta_moves.0 as f64 / sampler.zeta_moves.1 as f64
            },
        }
    });
    Ok(ChainOutput {
        theta_draws,
        sigma2_draws: next(),
        intercept_draws: next(),
        pi0_draws: next(),
        pi1_draws: next(),
        loglik_draws: next(),
        pred_var_draws: next(),
        inclusion_group: incl_group.iter().map(|&k| k as f64 / sd).collect(),
        inclusion_within: incl_within.iter().map(|&k| k as f64 / sd).collect(),
        sv_draws,
        mcmc_meta: McmcMeta {
            sweeps: mcmc.sweeps,
            burn_in: mcmc.burn_in,
            thin: mcmc.thin,
            seed: mcmc.seed,
            tau_acceptance: sampler.tau_acceptance(),
        },
        volatility: opts.volatility,
    })
}

/// Posterior predictive at a new regressor row: one Gaussian component per
/// retained draw with mean α + z'θ and the draw's one-step error variance.
pub fn posterior_predictive(chain: &ChainOutput, z_new: &[f64]) -> Result<ForecastDensity> {
    if z_new.len() != chain.theta_draws.ncols() {
        return Err(Error::DimensionMismatch {
            what: "forecast row width",
            expected: chain.theta_draws.ncols(),
            got: z_new.len(),
        });
    }
    if chain.n_draws() == 0 {
        return invalid("chain has no retained draws");
    }
    let z = DVector::from_column_slice(z_new);
    let means: Vec<f64> = (0..chain.n_draws())
        .map(|s| chain.intercept_draws[s] + chain.theta_draws.row(s).transpose().dot(&z))
        .collect();
    ForecastDensity::uniform(means, chain.pred_var_draws.clone())
}
