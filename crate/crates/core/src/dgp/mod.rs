//! Monte Carlo data generating processes: a grouped-predictor regression with
//! block (or full) Toeplitz regressor correlation, and a mixed-frequency
//! regression whose true lag weights follow a three-parameter Beta shape.
//!
//! Supports and coefficient signs come from the SUPPORT sub-stream of the DGP
//! seed, so they are fixed across replications while the noise varies with the
//! replication index.

use crate::design::{assemble_midas_design, basis_for, BasisFamily, BasisMatrix, GroupedDesign, HfSeries, MidasLayout, Partition};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream, ChainRng};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// Convention used when calibrating the noise-to-signal ratio.
pub const NSR_CONVENTION: &str = "var(eps) / var(beta_y * y[t-1] + regressor signal), pilot path";

/// Raw Beta values below this are set to exactly zero before normalizing.
const BETA_CUTOFF: f64 = 1e-4;

/// Normalized lag weights ψ(0..=p_x) from the three-parameter Beta shape.
pub fn beta_lag_weights(a: f64, b: f64, c: f64, p_x: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > 0.0) {
        return invalid(format!("Beta weight parameters must be positive, got a = {a}, b = {b}"));
    }
    let norm = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)).exp();
    let n = (p_x + 1) as f64;
    let mut w: Vec<f64> = (0..=p_x)
        .map(|u| {
            let x = (u + 1) as f64 / n;
            let shape = x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0);
            if shape * norm + c < BETA_CUTOFF {
                0.0
            } else if c == 0.0 {
                // the Beta constant cancels in the normalization; leaving it
                // out keeps flat weights exact
                shape
            } else {
                shape * norm + c
            }
        })
        .collect();
    if w.iter().any(|v| !v.is_finite()) {
        return invalid(format!("Beta weights ({a}, {b}, {c}) are unbounded at the last lag; need b >= 1"));
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(format!("Beta weights ({a}, {b}, {c}) vanish on every lag")));
    }
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Toeplitz correlation ρ^{|i-i'|}: `n` diagonal blocks of size `g`, or one
/// global block when `full`.
pub fn toeplitz_corr(n: usize, g: usize, rho: f64, full: bool) -> DMatrix<f64> {
    let k = n * g;
    DMatrix::from_fn(k, k, |r, c| {
        if !full && r / g.max(1) != c / g.max(1) {
            0.0
        } else {
            rho.powi(r.abs_diff(c) as i32)
        }
    })
}

/// Innovation covariance σ_ε² R for `n` groups of `g` regressors.
pub fn toeplitz_block_cov(n: usize, g: usize, rho: f64, sigma_eps: f64, full: bool) -> Result<DMatrix<f64>> {
    if rho.abs() >= 1.0 {
        return invalid(format!("|rho_eps| must be below 1, got {rho}"));
    }
    if !(sigma_eps > 0.0) {
        return invalid(format!("sigma_eps must be positive, got {sigma_eps}"));
    }
    Ok(toeplitz_corr(n, g, rho, full) * (sigma_eps * sigma_eps))
}

/// Skew-normal law with mean zero and variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalSpec {
    pub alpha: f64,
    pub sigma2: f64,
    pub delta: f64,
    pub omega2: f64,
    pub xi: f64,
    pub skewness: f64,
}

pub fn skew_normal_params(alpha: f64, sigma2: f64) -> Result<SkewNormalSpec> {
    if !(sigma2 > 0.0) || !alpha.is_finite() {
        return invalid(format!("skew-normal needs finite shape and positive variance, got ({alpha}, {sigma2})"));
    }
    let delta = alpha / (1.0 + alpha * alpha).sqrt();
    let d2 = delta * delta;
    let omega2 = sigma2 * PI / (PI - 2.0 * d2);
    let xi = -delta * (2.0 * omega2 / PI).sqrt();
    let m = delta * (2.0 / PI).sqrt();
    let skewness = 0.5 * (4.0 - PI) * m.powi(3) / (1.0 - 2.0 * d2 / PI).powf(1.5);
    Ok(SkewNormalSpec { alpha, sigma2, delta, omega2, xi, skewness })
}

impl SkewNormalSpec {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u0: f64 = StandardNormal.sample(rng);
        let u1: f64 = StandardNormal.sample(rng);
        let z = self.delta * u0.abs() + (1.0 - self.delta * self.delta).sqrt() * u1;
        self.xi + self.omega2.sqrt() * z
    }
}

/// Law of the regression shock ε_t.
#[derive(Debug, Clone, Copy)]
enum Shock {
    Normal(f64),
    Skew(SkewNormalSpec),
}

impl Shock {
    fn new(sigma: f64, skew_alpha: Option<f64>) -> Result<Self> {
        match skew_alpha {
            Some(a) => Ok(Self::Skew(skew_normal_params(a, sigma * sigma)?)),
            None => Ok(Self::Normal(sigma)),
        }
    }

    fn draw(&self, rng: &mut ChainRng) -> f64 {
        match self {
            Self::Normal(s) => {
                let e: f64 = StandardNormal.sample(rng);
                s * e
            }
            Self::Skew(sn) => sn.sample(rng),
        }
    }
}

/// Pilot paths for noise calibration: the regressor signal at unit innovation
/// scale and the regression shocks, drawn once (common random numbers).
#[derive(Debug, Clone)]
pub struct SignalPilot {
    pub unit_signal: Vec<f64>,
    pub shocks: Vec<f64>,
    pub burn_in: usize,
}

impl SignalPilot {
    /// Realized noise-to-signal ratio when regressor innovations have scale `sigma_eps`.
    pub fn nsr(&self, beta_y: f64, sigma_eps: f64) -> f64 {
        let mut y_prev = 0.0;
        let mut noise = Moments::default();
        let mut signal = Moments::default();
        for (t, (&s, &e)) in self.unit_signal.iter().zip(&self.shocks).enumerate() {
            let mean = beta_y * y_prev + sigma_eps * s;
            if t >= self.burn_in {
                noise.push(e);
                signal.push(mean);
            }
            y_prev = mean + e;
        }
        noise.var() / signal.var()
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn var(&self) -> f64 {
        self.m2 / self.n
    }
}

/// Bisection on log σ_ε so that the pilot NSR hits `target` (relative 1e-6).
pub fn calibrate_noise(pilot: &SignalPilot, beta_y: f64, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return invalid(format!("target NSR must be positive, got {target}"));
    }
    let (mut lo, mut hi) = (1e-8f64.ln(), 1e8f64.ln());
    let f = |ls: f64| pilot.nsr(beta_y, ls.exp());
    let (f_lo, f_hi) = (f(lo), f(hi));
    // NSR falls as σ_ε grows
    if !(f_lo > target && f_hi < target) {
        return Err(Error::NonBracketing { lo: lo.exp(), hi: hi.exp(), f_lo, f_hi, target });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v / target - 1.0).abs() < 1e-6 {
            return Ok(mid.exp());
        }
        if v > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

fn cholesky(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m)
        .map(|c| c.l())
        .ok_or_else(|| Error::Degenerate("innovation covariance is not positive definite".into()))
}

fn normals(rng: &mut ChainRng, k: usize) -> DVector<f64> {
    DVector::from_fn(k, |_, _| StandardNormal.sample(rng))
}

fn draw_support(rng: &mut ChainRng, n: usize, k: usize) -> Vec<usize> {
    let mut s = sample(rng, n, k).into_vec();
    s.sort_unstable();
    s
}

fn select_sub(r: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| r[(idx[a], idx[b])])
}

// ---------------------------------------------------------------- grouped

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupedDgpSpec {
    pub n: usize,
    pub g: usize,
    pub s0gr: usize,
    /// Active coefficients inside each active group.
    pub s0j: usize,
    pub t: usize,
    pub t_oos: usize,
    pub rho_z: f64,
    pub rho_eps: f64,
    pub full_corr: bool,
    pub nsr: f64,
    pub alpha_const: f64,
    pub beta_y: f64,
    pub sigma: f64,
    pub theta_mag: f64,
    pub skew_alpha: Option<f64>,
    /// Fixes σ_ε and skips calibration.
    pub sigma_eps: Option<f64>,
    pub burn_in: usize,
    pub pilot_len: usize,
    pub seed: u64,
}

impl Default for GroupedDgpSpec {
    fn default() -> Self {
        Self {
            n: 10,
            g: 10,
            s0gr: 1,
            s0j: 1,
            t: 200,
            t_oos: 50,
            rho_z: 0.9,
            rho_eps: 0.5,
            full_corr: false,
            nsr: 0.2,
            alpha_const: 0.2,
            beta_y: 0.3,
            sigma: 0.5,
            theta_mag: 0.5,
            skew_alpha: None,
            sigma_eps: None,
            burn_in: 500,
            pilot_len: 50_000,
            seed: 1,
        }
    }
}

impl GroupedDgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.g == 0 {
            return invalid("grouped DGP needs N >= 1 and g >= 1");
        }
        if self.s0gr < 1 || self.s0gr > self.n {
            return invalid(format!("s0gr must lie in 1..={}, got {}", self.n, self.s0gr));
        }
        if self.s0j < 1 || self.s0j > self.g {
            return invalid(format!("s0j must lie in 1..={}, got {}", self.g, self.s0j));
        }
        if self.t < 2 || self.t_oos < 1 {
            return invalid("need T >= 2 and T_oos >= 1");
        }
        if self.rho_z.abs() >= 1.0 || self.beta_y.abs() >= 1.0 || self.rho_eps.abs() >= 1.0 {
            return invalid("rho_z, beta_y and rho_eps must have modulus below 1");
        }
        if !(self.sigma > 0.0) || !(self.nsr > 0.0) || !(self.theta_mag >= 0.0) {
            return invalid("sigma and nsr must be positive and theta_mag non-negative");
        }
        if let Some(s) = self.sigma_eps {
            if !(s > 0.0) {
                return invalid("sigma_eps must be positive");
            }
        }
        if self.sigma_eps.is_none() && self.pilot_len <= self.burn_in {
            return invalid("pilot_len must exceed burn_in");
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.n * self.g
    }
}

/// What the grouped DGP actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedTruth {
    /// Coefficients on the design columns; the last entry is β_y on y_{t-1}.
    pub theta0: Vec<f64>,
    /// Active exogenous groups (zero-based).
    pub active_groups: Vec<usize>,
    /// Active exogenous columns (zero-based).
    pub active_vars: Vec<usize>,
    /// Exogenous groups; the lag-of-y group follows them in the design.
    pub n_exog_groups: usize,
    pub alpha: f64,
    pub beta_y: f64,
    pub sigma_eps: f64,
    pub nsr_target: f64,
    /// NSR over the simulated sample (in- and out-of-sample).
    pub nsr_realized: f64,
    pub nsr_convention: String,
}

#[derive(Debug, Clone)]
pub struct GroupedSample {
    pub train: GroupedDesign,
    pub test: GroupedDesign,
    pub truth: GroupedTruth,
}

/// A grouped DGP with its support drawn and σ_ε calibrated; replications
/// only redraw the noise.
#[derive(Debug, Clone)]
pub struct GroupedDgp {
    pub spec: GroupedDgpSpec,
    pub theta: Vec<f64>,
    pub active_groups: Vec<usize>,
    pub active_vars: Vec<usize>,
    pub sigma_eps: f64,
    chol: DMatrix<f64>,
    shock: Shock,
}

impl GroupedDgp {
    pub fn new(spec: GroupedDgpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_from_seed(derive_seed(spec.seed, stream::SUPPORT, 0));
        let active_groups = draw_support(&mut rng, spec.n, spec.s0gr);
        let mut theta = vec![0.0; spec.width()];
        let mut active_vars = Vec::new();
        for &j in &active_groups {
            for i in draw_support(&mut rng, spec.g, spec.s0j) {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                theta[j * spec.g + i] = sign * spec.theta_mag;
                active_vars.push(j * spec.g + i);
            }
        }
        let shock = Shock::new(spec.sigma, spec.skew_alpha)?;
        let corr = toeplitz_corr(spec.n, spec.g, spec.rho_eps, spec.full_corr);
        let sigma_eps = match spec.sigma_eps {
            Some(s) => s,
            None => {
                let pilot = grouped_pilot(&spec, &theta, &corr, shock)?;
                calibrate_noise(&pilot, spec.beta_y, spec.nsr)?
            }
        };
        let chol = cholesky(corr)?;
        Ok(Self { spec, theta, active_groups, active_vars, sigma_eps, chol, shock })
    }

    /// Replication `rep`: fresh regressors and shocks, same support and σ_ε.
    pub fn simulate(&self, rep: u64) -> Result<GroupedSample> {
        let s = &self.spec;
        let k = s.width();
        let mut rng = rng_from_seed(derive_seed(s.seed, stream::NOISE, rep));
        let keep = 1 + s.t + s.t_oos;
        let total = s.burn_in + keep;
        let mut z = DVector::zeros(k);
        let mut y_prev = s.alpha_const / (1.0 - s.beta_y);
        let mut zs = DMatrix::zeros(keep, k);
        let mut ys = vec![0.0; keep];
        let mut noise = Moments::default();
        let mut signal = Moments::default();
        for step in 0..total {
            let e = normals(&mut rng, k);
            z = &z * s.rho_z + (&self.chol * e) * self.sigma_eps;
            let xb: f64 = self.active_vars.iter().map(|&c| z[c] * self.theta[c]).sum();
            let eps = self.shock.draw(&mut rng);
            let mean = s.beta_y * y_prev + xb;
            let y = s.alpha_const + mean + eps;
            if step >= s.burn_in {
                let r = step - s.burn_in;
                zs.row_mut(r).copy_from(&z.transpose());
                ys[r] = y;
                if r > 0 {
                    noise.push(eps);
                    signal.push(mean);
                }
            }
            y_prev = y;
        }
        let sizes: Vec<usize> = std::iter::repeat_n(s.g, s.n).chain([1]).collect();
        let mut labels: Vec<String> = (1..=s.n).map(|j| format!("g{j}")).collect();
        labels.push("y_lag".into());
        let build = |rows: std::ops::Range<usize>| -> Result<GroupedDesign> {
            let mut x = DMatrix::zeros(rows.len(), k + 1);
            for (r, t) in rows.clone().enumerate() {
                x.view_mut((r, 0), (1, k)).copy_from(&zs.row(t));
                x[(r, k)] = ys[t - 1];
            }
            let partition = Partition::new(sizes.clone())?;
            GroupedDesign::new(ys[rows].to_vec(), x, partition, 0.0)?.with_labels(labels.clone())
        };
        let train = build(1..1 + s.t)?;
        let test = build(1 + s.t..keep)?;
        let mut theta0 = self.theta.clone();
        theta0.push(s.beta_y);
        let truth = GroupedTruth {
            theta0,
            active_groups: self.active_groups.clone(),
            active_vars: self.active_vars.clone(),
            n_exog_groups: s.n,
            alpha: s.alpha_const,
            beta_y: s.beta_y,
            sigma_eps: self.sigma_eps,
            nsr_target: s.nsr,
            nsr_realized: noise.var() / signal.var(),
            nsr_convention: NSR_CONVENTION.into(),
        };
        Ok(GroupedSample { train, test, truth })
    }
}

/// Simulate replication 0 of the grouped DGP.
pub fn simulate_grouped(spec: &GroupedDgpSpec) -> Result<GroupedSample> {
    GroupedDgp::new(spec.clone())?.simulate(0)
}

/// Only the active columns feed the signal, and their innovations are jointly
/// N(0, R_SS), so the pilot simulates just those.
fn grouped_pilot(spec: &GroupedDgpSpec, theta: &[f64], corr: &DMatrix<f64>, shock: Shock) -> Result<SignalPilot> {
    let active: Vec<usize> = (0..theta.len()).filter(|&c| theta[c] != 0.0).collect();
    let coef: Vec<f64> = active.iter().map(|&c| theta[c]).collect();
    let mut rng = rng_from_seed(derive_seed(spec.seed, stream::PILOT, 0));
    let n = spec.pilot_len;
    let mut unit_signal = vec![0.0; n];
    let mut shocks = vec![0.0; n];
    if !active.is_empty() {
        let l = cholesky(select_sub(corr, &active))?;
        let mut z = DVector::zeros(active.len());
        for t in 0..n {
            z = &z * spec.rho_z + &l * normals(&mut rng, active.len());
            unit_signal[t] = z.iter().zip(&coef).map(|(a, b)| a * b).sum();
        }
    }
    for e in &mut shocks {
        *e = shock.draw(&mut rng);
    }
    Ok(SignalPilot { unit_signal, shocks, burn_in: spec.burn_in })
}

// ------------------------------------------------------------------ MIDAS

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MidasDgpSpec {
    pub n: usize,
    pub s0gr: usize,
    pub t: usize,
    pub t_oos: usize,
    pub m: usize,
    pub p_x: usize,
    pub weight_params: (f64, f64, f64),
    pub rho_x: f64,
    pub rho_eps: f64,
    pub alpha_const: f64,
    pub beta_y: f64,
    pub sigma: f64,
    pub nsr: f64,
    pub h: f64,
    /// Basis used to assemble the estimation design.
    pub basis: BasisFamily,
    pub degree: usize,
    pub p_y: usize,
    pub sigma_eps: Option<f64>,
    pub burn_in: usize,
    pub pilot_len: usize,
    pub seed: u64,
}

impl Default for MidasDgpSpec {
    fn default() -> Self {
        Self {
            n: 50,
            s0gr: 5,
            t: 200,
            t_oos: 50,
            m: 3,
            p_x: 11,
            weight_params: (5.0, 15.0, 0.0),
            rho_x: 0.9,
            rho_eps: 0.5,
            alpha_const: 0.5,
            beta_y: 0.3,
            sigma: 0.5,
            nsr: 0.2,
            h: 0.0,
            basis: BasisFamily::Legendre,
            degree: 3,
            p_y: 1,
            sigma_eps: None,
            burn_in: 500,
            pilot_len: 50_000,
            seed: 1,
        }
    }
}

impl MidasDgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return invalid("MIDAS DGP needs N >= 1 and m >= 1");
        }
        if self.s0gr < 1 || self.s0gr > self.n {
            return invalid(format!("s0gr must lie in 1..={}, got {}", self.n, self.s0gr));
        }
        if self.t < 2 || self.t_oos < 1 {
            return invalid("need T >= 2 and T_oos >= 1");
        }
        if self.rho_x.abs() >= 1.0 || self.beta_y.abs() >= 1.0 || self.rho_eps.abs() >= 1.0 {
            return invalid("rho_x, beta_y and rho_eps must have modulus below 1");
        }
        if !(self.sigma > 0.0) || !(self.nsr > 0.0) {
            return invalid("sigma and nsr must be positive");
        }
        let shift = self.h * self.m as f64;
        if self.h < 0.0 || (shift - shift.round()).abs() > 1e-9 {
            return invalid(format!("horizon {} is not a whole number of high-frequency steps", self.h));
        }
        if self.sigma_eps.is_none() && self.pilot_len <= self.burn_in {
            return invalid("pilot_len must exceed burn_in");
        }
        Ok(())
    }

    fn shift(&self) -> usize {
        (self.h * self.m as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidasTruth {
    /// Active series (zero-based).
    pub active_groups: Vec<usize>,
    /// True lag weights ψ(0..=p_x), shared by every active series.
    pub weights: Vec<f64>,
    /// Σ over active series of Σ_u ψ(u) x_{j,t-h-u/m}, one entry per kept period.
    pub signal: Vec<f64>,
    pub n_exog_groups: usize,
    pub alpha: f64,
    pub beta_y: f64,
    pub sigma_eps: f64,
    pub nsr_target: f64,
    pub nsr_realized: f64,
    pub nsr_convention: String,
}

#[derive(Debug, Clone)]
pub struct MidasSample {
    pub panel: Vec<HfSeries>,
    /// Low-frequency target on the panel calendar.
    pub y: Vec<f64>,
    pub train: GroupedDesign,
    pub test: GroupedDesign,
    pub layout_train: MidasLayout,
    pub layout_test: MidasLayout,
    pub truth: MidasTruth,
}

#[derive(Debug, Clone)]
pub struct MidasDgp {
    pub spec: MidasDgpSpec,
    pub weights: Vec<f64>,
    pub active_groups: Vec<usize>,
    pub sigma_eps: f64,
    pub basis: BasisMatrix,
    chol: DMatrix<f64>,
}

/// MIDAS term for one series at low-frequency period `t` of an HF path laid
/// out as in [`HfSeries`]; `None` if the lags precede the path.
pub fn midas_term(x: &[f64], m: usize, shift: usize, weights: &[f64], t: usize) -> Option<f64> {
    let end = (t * m + m - 1).checked_sub(shift)?;
    if end + 1 < weights.len() || end >= x.len() {
        return None;
    }
    Some(weights.iter().enumerate().map(|(u, w)| w * x[end - u]).sum())
}

impl MidasDgp {
    pub fn new(spec: MidasDgpSpec) -> Result<Self> {
        spec.validate()?;
        let (a, b, c) = spec.weight_params;
        let weights = beta_lag_weights(a, b, c, spec.p_x)?;
        let mut rng = rng_from_seed(derive_seed(spec.seed, stream::SUPPORT, 0));
        let active_groups = draw_support(&mut rng, spec.n, spec.s0gr);
        let corr = toeplitz_corr(1, spec.n, spec.rho_eps, true);
        let sigma_eps = match spec.sigma_eps {
            Some(s) => s,
            None => {
                let pilot = midas_pilot(&spec, &weights, &active_groups, &corr)?;
                calibrate_noise(&pilot, spec.beta_y, spec.nsr)?
            }
        };
        let basis = basis_for(spec.basis, spec.degree, spec.p_x)?;
        let chol = cholesky(corr)?;
        Ok(Self { spec, weights, active_groups, sigma_eps, basis, chol })
    }

    /// Pre-sample low-frequency periods needed before the first design row.
    pub fn presample(&self) -> usize {
        let s = &self.spec;
        let ff = (self.spec.shift() + s.p_x + 1).saturating_sub(s.m).div_ceil(s.m);
        let off = (s.h.ceil() as usize).max(1);
        ff.max(off + s.p_y.max(1) - 1)
    }

    pub fn simulate(&self, rep: u64) -> Result<MidasSample> {
        let s = &self.spec;
        let mut rng = rng_from_seed(derive_seed(s.seed, stream::NOISE, rep));
        let pre = self.presample();
        let keep = pre + s.t + s.t_oos;
        let total = s.burn_in + keep;
        let shift = s.shift();
        let mut x = vec![vec![0.0; total * s.m]; s.n];
        let mut state = DVector::zeros(s.n);
        for tau in 0..total * s.m {
            state = &state * s.rho_x + (&self.chol * normals(&mut rng, s.n)) * self.sigma_eps;
            for j in 0..s.n {
                x[j][tau] = state[j];
            }
        }
        let shock = Shock::Normal(s.sigma);
        let mut y = vec![0.0; total];
        let mut signal = vec![0.0; total];
        let mut y_prev = s.alpha_const / (1.0 - s.beta_y);
        let mut noise = Moments::default();
        let mut sig = Moments::default();
        for t in 0..total {
            let xb: f64 = self
                .active_groups
                .iter()
                .map(|&j| midas_term(&x[j], s.m, shift, &self.weights, t).unwrap_or(0.0))
                .sum();
            let eps = shock.draw(&mut rng);
            let mean = s.beta_y * y_prev + xb;
            y[t] = s.alpha_const + mean + eps;
            signal[t] = xb;
            if t >= s.burn_in + pre {
                noise.push(eps);
                sig.push(mean);
            }
            y_prev = y[t];
        }
        let lf0 = s.burn_in;
        let panel: Vec<HfSeries> = x
            .iter()
            .enumerate()
            .map(|(j, path)| HfSeries::new(format!("x{}", j + 1), s.m, path[lf0 * s.m..].to_vec()))
            .collect::<Result<_>>()?;
        let y_kept = y[lf0..].to_vec();
        let bases = vec![self.basis.clone(); s.n];
        let layout_train = MidasLayout { h: s.h, p_y: s.p_y, periods: pre..pre + s.t };
        let layout_test = MidasLayout { h: s.h, p_y: s.p_y, periods: pre + s.t..keep };
        let train = assemble_midas_design(&panel, &bases, &y_kept, &layout_train)?;
        let test = assemble_midas_design(&panel, &bases, &y_kept, &layout_test)?;
        let truth = MidasTruth {
            active_groups: self.active_groups.clone(),
            weights: self.weights.clone(),
            signal: signal[lf0..].to_vec(),
            n_exog_groups: s.n,
            alpha: s.alpha_const,
            beta_y: s.beta_y,
            sigma_eps: self.sigma_eps,
            nsr_target: s.nsr,
            nsr_realized: noise.var() / sig.var(),
            nsr_convention: NSR_CONVENTION.into(),
        };
        Ok(MidasSample { panel, y: y_kept, train, test, layout_train, layout_test, truth })
    }
}

/// Simulate replication 0 of the MIDAS DGP.
pub fn simulate_midas(spec: &MidasDgpSpec) -> Result<MidasSample> {
    MidasDgp::new(spec.clone())?.simulate(0)
}

fn midas_pilot(spec: &MidasDgpSpec, weights: &[f64], active: &[usize], corr: &DMatrix<f64>) -> Result<SignalPilot> {
    let mut rng = rng_from_seed(derive_seed(spec.seed, stream::PILOT, 0));
    let n = spec.pilot_len;
    let k = active.len();
    let l = cholesky(select_sub(corr, active))?;
    let mut x = vec![vec![0.0; n * spec.m]; k];
    let mut state = DVector::zeros(k);
    for tau in 0..n * spec.m {
        state = &state * spec.rho_x + &l * normals(&mut rng, k);
        for a in 0..k {
            x[a][tau] = state[a];
        }
    }
    let shift = spec.shift();
    let unit_signal = (0..n)
        .map(|t| x.iter().map(|p| midas_term(p, spec.m, shift, weights, t).unwrap_or(0.0)).sum())
        .collect();
    let shock = Shock::Normal(spec.sigma);
    let shocks = (0..n).map(|_| shock.draw(&mut rng)).collect();
    Ok(SignalPilot { unit_signal, shocks, burn_in: spec.burn_in })
}
