//! Stochastic volatility with Student-t scale mixing and occasional outliers.
//!
//! The regression error is u_t ~ N(0, τ_t ω_t exp(ζ_t)) with
//! τ_t ~ IG(ν/2, ν/2), ω_t equal to 1 or uniform on (2, ω̄), and ζ_t a
//! stationary AR(1). These steps replace the homoskedastic σ² draw inside the
//! Gibbs cycle; the sampler passes in the current residuals.

use crate::error::{invalid, Result};
use crate::special::{gauss_legendre, norm_logpdf, sample_beta, sample_inv_gamma, sample_log_categorical};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::fmt;
use std::str::FromStr;

/// Error-variance model menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Volatility {
    #[default]
    Homoskedastic,
    Sv,
    SvT,
    SvOutlier,
    SvTOutlier,
}

impl Volatility {
    pub const ALL: [Volatility; 5] = [Self::Homoskedastic, Self::Sv, Self::SvT, Self::SvOutlier, Self::SvTOutlier];

    pub fn is_sv(self) -> bool {
        self != Self::Homoskedastic
    }

    pub fn student_t(self) -> bool {
        matches!(self, Self::SvT | Self::SvTOutlier)
    }

    pub fn outliers(self) -> bool {
        matches!(self, Self::SvOutlier | Self::SvTOutlier)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Homoskedastic => "homoskedastic",
            Self::Sv => "sv",
            Self::SvT => "sv-t",
            Self::SvOutlier => "sv-outlier",
            Self::SvTOutlier => "sv-t-outlier",
        }
    }
}

impl fmt::Display for Volatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Volatility {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .map_or_else(|| invalid(format!("unknown volatility model `{s}`")), Ok)
    }
}

/// Priors and sampler settings for the volatility block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvOptions {
    pub omega_bar: f64,
    /// Random-walk step for single-site ζ_t updates.
    pub step_size: f64,
    /// Nodes for the outlier-branch integral and the ω_t draw.
    pub quad_nodes: usize,
    pub mu_prior_mean: f64,
    pub mu_prior_var: f64,
    /// Inverse-Gamma (shape, scale) prior on σ²_ζ.
    pub sigma2_zeta_prior: (f64, f64),
    /// Beta prior on p_ω.
    pub p_omega_prior: (f64, f64),
    /// Pin ν instead of sampling it on the grid.
    pub nu_fixed: Option<f64>,
    /// Pin σ²_ζ instead of sampling it.
    pub sigma2_zeta_fixed: Option<f64>,
}

impl Default for SvOptions {
    fn default() -> Self {
        Self {
            omega_bar: 10.0,
            step_size: 0.3,
            quad_nodes: 50,
            mu_prior_mean: 0.0,
            mu_prior_var: 100.0,
            sigma2_zeta_prior: (2.5, 0.075),
            p_omega_prior: (2.0, 30.0),
            nu_fixed: None,
            sigma2_zeta_fixed: None,
        }
    }
}

/// Grid of ν values for the griddy-Gibbs step: 2.5, 3, ..., 100.
pub fn nu_grid() -> Vec<f64> {
    (0..=195).map(|k| 2.5 + 0.5 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvState {
    pub zeta: Vec<f64>,
    pub tau_t: Vec<f64>,
    pub omega_t: Vec<f64>,
    /// Degrees of freedom; unused (kept at 0) when the t mixture is off.
    pub nu: f64,
    pub mu_zeta: f64,
    pub phi_zeta: f64,
    pub sigma2_zeta: f64,
    pub p_omega: f64,
    pub omega_bar: f64,
}

impl SvState {
    /// Flat log-volatility at `log_var`, no t-scaling, no outliers.
    pub fn initial(t: usize, log_var: f64, model: Volatility, opts: &SvOptions) -> Self {
        let (a, b) = opts.p_omega_prior;
        Self {
            zeta: vec![log_var; t],
            tau_t: vec![1.0; t],
            omega_t: vec![1.0; t],
            nu: if model.student_t() { opts.nu_fixed.unwrap_or(10.0) } else { 0.0 },
            mu_zeta: log_var,
            phi_zeta: 0.5,
            sigma2_zeta: opts.sigma2_zeta_fixed.unwrap_or(0.1),
            p_omega: if model.outliers() { a / (a + b) } else { 0.0 },
            omega_bar: opts.omega_bar,
        }
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    /// τ_t ω_t exp(ζ_t).
    pub fn obs_variance(&self, t: usize) -> f64 {
        self.tau_t[t] * self.omega_t[t] * self.zeta[t].exp()
    }

    /// Variance of a one-step-ahead error given this state: the log-volatility
    /// is pushed one AR(1) step, the t factor ν/(ν-2) applies when the t
    /// mixture is on, and the last outlier scale is carried forward.
    pub fn predictive_variance<R: Rng + ?Sized>(&self, model: Volatility, rng: &mut R) -> f64 {
        let last = self.len() - 1;
        let e: f64 = StandardNormal.sample(rng);
        let zeta_next = self.mu_zeta + self.phi_zeta * (self.zeta[last] - self.mu_zeta) + self.sigma2_zeta.sqrt() * e;
        let t_factor = if model.student_t() { self.nu / (self.nu - 2.0) } else { 1.0 };
        t_factor * self.omega_t[last] * zeta_next.exp()
    }

    fn stationary_var(&self) -> f64 {
        self.sigma2_zeta / (1.0 - self.phi_zeta * self.phi_zeta)
    }

    /// Log AR(1) prior density of ζ_t given its neighbours (terms involving ζ_t only).
    fn zeta_log_prior(&self, t: usize, z: f64) -> f64 {
        let (mu, phi, s2) = (self.mu_zeta, self.phi_zeta, self.sigma2_zeta);
        let mut lp = if t == 0 {
            norm_logpdf(z, mu, self.stationary_var())
        } else {
            norm_logpdf(z, mu + phi * (self.zeta[t - 1] - mu), s2)
        };
        if t + 1 < self.len() {
            lp += norm_logpdf(self.zeta[t + 1], mu + phi * (z - mu), s2);
        }
        lp
    }
}

/// τ_t ~ IG((ν+1)/2, (ν + u_t²/(ω_t e^{ζ_t}))/2).
pub fn step_mixture_scale<R: Rng + ?Sized>(sv: &mut SvState, residuals: &[f64], rng: &mut R) {
    let nu = sv.nu;
    for t in 0..sv.len() {
        let scaled = residuals[t] * residuals[t] / (sv.omega_t[t] * sv.zeta[t].exp());
        sv.tau_t[t] = sample_inv_gamma(rng, 0.5 * (nu + 1.0), 0.5 * (nu + scaled));
    }
}

/// Single-site random-walk Metropolis over ζ_1..ζ_T followed by a joint level
/// move. Returns (accepted, proposed) for the single-site moves.
pub fn step_log_volatility<R: Rng + ?Sized>(
    sv: &mut SvState,
    residuals: &[f64],
    opts: &SvOptions,
    rng: &mut R,
) -> (usize, usize) {
    let counts = step_zeta_single_site(sv, residuals, opts, rng);
    step_zeta_level(sv, residuals, opts, rng);
    counts
}

/// Log-likelihood of one residual as a function of ζ; a missing (NaN)
/// residual contributes nothing.
fn zeta_loglik(z: f64, u2: f64, s: f64) -> f64 {
    if u2.is_nan() {
        return 0.0;
    }
    -0.5 * z - 0.5 * u2 / (s * z.exp())
}

pub fn step_zeta_single_site<R: Rng + ?Sized>(
    sv: &mut SvState,
    residuals: &[f64],
    opts: &SvOptions,
    rng: &mut R,
) -> (usize, usize) {
    let n = sv.len();
    let mut accepted = 0;
    for t in 0..n {
        let u2 = residuals[t] * residuals[t];
        let s = sv.tau_t[t] * sv.omega_t[t];
        let old = sv.zeta[t];
        let e: f64 = StandardNormal.sample(rng);
        let new = old + opts.step_size * e;
        let log_r = zeta_loglik(new, u2, s) - zeta_loglik(old, u2, s) + sv.zeta_log_prior(t, new)
            - sv.zeta_log_prior(t, old);
        if rng.random::<f64>().ln() < log_r {
            sv.zeta[t] = new;
            accepted += 1;
        }
    }
    (accepted, n)
}

/// Shift the whole path and μ_ζ by a common amount. Deviations ζ_t - μ_ζ are
/// unchanged, so only the likelihood and the prior on μ_ζ enter the ratio.
/// Keeps the level mixing when σ²_ζ is small and single-site moves stall.
pub fn step_zeta_level<R: Rng + ?Sized>(sv: &mut SvState, residuals: &[f64], opts: &SvOptions, rng: &mut R) {
    let n = sv.len();
    let step = 2.4 * (2.0 / n as f64).sqrt();
    let e: f64 = StandardNormal.sample(rng);
    let delta = step * e;
    let mut log_r = norm_logpdf(sv.mu_zeta + delta, opts.mu_prior_mean, opts.mu_prior_var)
        - norm_logpdf(sv.mu_zeta, opts.mu_prior_mean, opts.mu_prior_var);
    for t in 0..n {
        let u2 = residuals[t] * residuals[t];
        let s = sv.tau_t[t] * sv.omega_t[t];
        log_r += zeta_loglik(sv.zeta[t] + delta, u2, s) - zeta_loglik(sv.zeta[t], u2, s);
    }
    if rng.random::<f64>().ln() < log_r {
        sv.mu_zeta += delta;
        for z in &mut sv.zeta {
            *z += delta;
        }
    }
}

/// Log of the outlier-branch weight relative to the regular branch:
/// ln[p ∫₂^ω̄ N(u; 0, ω s) dω/(ω̄-2)] - ln[(1-p) N(u; 0, s)].
pub fn outlier_log_odds(u: f64, base_var: f64, p_omega: f64, omega_bar: f64, nodes: usize) -> f64 {
    let (xs, ws) = gauss_legendre(nodes, 2.0, omega_bar);
    let logs: Vec<f64> = xs
        .iter()
        .zip(&ws)
        .map(|(&om, &w)| w.ln() + norm_logpdf(u, 0.0, om * base_var))
        .collect();
    let outlier = p_omega.ln() + crate::special::log_sum_exp(&logs) - (omega_bar - 2.0).ln();
    let regular = (1.0 - p_omega).ln() + norm_logpdf(u, 0.0, base_var);
    outlier - regular
}

/// Two-part draw of ω_t: regular (ω = 1) versus outlier (ω on the quadrature
/// nodes in (2, ω̄), weighted by node weight times likelihood).
pub fn step_outliers<R: Rng + ?Sized>(sv: &mut SvState, residuals: &[f64], opts: &SvOptions, rng: &mut R) {
    let (xs, ws) = gauss_legendre(opts.quad_nodes, 2.0, sv.omega_bar);
    let ln_range = (sv.omega_bar - 2.0).ln();
    let ln_p = sv.p_omega.ln();
    let ln_q = (1.0 - sv.p_omega).ln();
    let mut logs = vec![0.0; xs.len()];
    for t in 0..sv.len() {
        let base = sv.tau_t[t] * sv.zeta[t].exp();
        let u = residuals[t];
        for (k, (&om, &w)) in xs.iter().zip(&ws).enumerate() {
            logs[k] = ln_p + w.ln() - ln_range + norm_logpdf(u, 0.0, om * base);
        }
        let outlier = crate::special::log_sum_exp(&logs);
        let regular = ln_q + norm_logpdf(u, 0.0, base);
        let p_out = crate::special::prob_from_logs(outlier, regular);
        sv.omega_t[t] = if rng.random::<f64>() < p_out { xs[sample_log_categorical(rng, &logs)] } else { 1.0 };
    }
}

/// Updates (μ_ζ, φ_ζ, σ²_ζ), then ν on its grid and p_ω from the outlier
/// count when those components are active.
pub fn step_sv_params<R: Rng + ?Sized>(sv: &mut SvState, model: Volatility, opts: &SvOptions, rng: &mut R) {
    let n = sv.len();
    let z = &sv.zeta;

    // μ_ζ | φ, σ², ζ: normal, combining the stationary term for ζ_1 and the
    // AR(1) transitions.
    {
        let (phi, s2) = (sv.phi_zeta, sv.sigma2_zeta);
        let mut prec = 1.0 / opts.mu_prior_var + (1.0 - phi * phi) / s2;
        let mut lin = opts.mu_prior_mean / opts.mu_prior_var + (1.0 - phi * phi) * z[0] / s2;
        if n > 1 {
            prec += (n - 1) as f64 * (1.0 - phi) * (1.0 - phi) / s2;
            lin += (1.0 - phi) * (1..n).map(|t| z[t] - phi * z[t - 1]).sum::<f64>() / s2;
        }
        let e: f64 = StandardNormal.sample(rng);
        sv.mu_zeta = lin / prec + e / prec.sqrt();
    }

    // φ_ζ: regression proposal from the transitions, MH-corrected for the
    // stationary initial term; proposals outside (-1, 1) are rejected.
    if n > 1 {
        let mu = sv.mu_zeta;
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for t in 1..n {
            let x = z[t - 1] - mu;
            sxx += x * x;
            sxy += x * (z[t] - mu);
        }
        let prop = if sxx > 1e-300 {
            let e: f64 = StandardNormal.sample(rng);
            sxy / sxx + (sv.sigma2_zeta / sxx).sqrt() * e
        } else {
            rng.random_range(-1.0..1.0)
        };
        if prop.abs() < 1.0 {
            let d0 = z[0] - mu;
            let init = |phi: f64| 0.5 * (1.0 - phi * phi).ln() - 0.5 * (1.0 - phi * phi) * d0 * d0 / sv.sigma2_zeta;
            if rng.random::<f64>().ln() < init(prop) - init(sv.phi_zeta) {
                sv.phi_zeta = prop;
            }
        }
    }

    // σ²_ζ | μ, φ, ζ: inverse gamma.
    if let Some(fixed) = opts.sigma2_zeta_fixed {
        sv.sigma2_zeta = fixed;
    } else {
        let (mu, phi) = (sv.mu_zeta, sv.phi_zeta);
        let d0 = z[0] - mu;
        let mut ss = (1.0 - phi * phi) * d0 * d0;
        for t in 1..n {
            let e = z[t] - mu - phi * (z[t - 1] - mu);
            ss += e * e;
        }
        let (a, b) = opts.sigma2_zeta_prior;
        sv.sigma2_zeta = sample_inv_gamma(rng, a + 0.5 * n as f64, b + 0.5 * ss);
    }

    if model.student_t() {
        sv.nu = match opts.nu_fixed {
            Some(v) => v,
            None => {
                let grid = nu_grid();
                let sum_ln: f64 = sv.tau_t.iter().map(|t| t.ln()).sum();
                let sum_inv: f64 = sv.tau_t.iter().map(|t| 1.0 / t).sum();
                let nf = n as f64;
                let logs: Vec<f64> = grid
                    .iter()
                    .map(|&nu| {
                        let h = 0.5 * nu;
                        nf * (h * h.ln() - ln_gamma(h)) - (h + 1.0) * sum_ln - h * sum_inv
                    })
                    .collect();
                grid[sample_log_categorical(rng, &logs)]
            }
        };
    }

    if model.outliers() {
        let k = sv.omega_t.iter().filter(|&&w| w > 1.0).count() as f64;
        let (a, b) = opts.p_omega_prior;
        sv.p_omega = sample_beta(rng, a + k, b + n as f64 - k);
    }
}

/// One draw of u ~ t_ν(0, ω e^ζ) through the scale mixture.
pub fn simulate_error<R: Rng + ?Sized>(rng: &mut R, nu: f64, omega: f64, zeta: f64) -> f64 {
    let tau = sample_inv_gamma(rng, 0.5 * nu, 0.5 * nu);
    let e: f64 = StandardNormal.sample(rng);
    (tau * omega * zeta.exp()).sqrt() * e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn state(t: usize, model: Volatility) -> SvState {
        SvState::initial(t, 0.0, model, &SvOptions::default())
    }

    #[test]
    fn mixture_scale_moments() {
        let mut rng = rng_from_seed(11);
        // ν = 5, u²/(ω e^ζ) = 5 -> IG(3, 5), mean 2.5
        let mut sv = state(100_000, Volatility::SvT);
        sv.nu = 5.0;
        let u = vec![5f64.sqrt(); sv.len()];
        step_mixture_scale(&mut sv, &u, &mut rng);
        let m = sv.tau_t.iter().sum::<f64>() / sv.len() as f64;
        assert!((m / 2.5 - 1.0).abs() < 0.01, "{m}");
        // huge ν -> τ concentrates at 1
        sv.nu = 1e6;
        let zero = vec![0.0; sv.len()];
        step_mixture_scale(&mut sv, &zero, &mut rng);
        let m = sv.tau_t.iter().sum::<f64>() / sv.len() as f64;
        assert!((m - 1.0).abs() < 1e-3);
    }

    #[test]
    fn outlier_branch_extremes() {
        let mut rng = rng_from_seed(3);
        let opts = SvOptions::default();
        let mut sv = state(500, Volatility::SvOutlier);
        let u: Vec<f64> = (0..500).map(|t| (t as f64 * 0.37).sin() * 3.0).collect();
        sv.p_omega = 0.0;
        step_outliers(&mut sv, &u, &opts, &mut rng);
        assert!(sv.omega_t.iter().all(|&w| w == 1.0));
        sv.p_omega = 1.0;
        step_outliers(&mut sv, &u, &opts, &mut rng);
        assert!(sv.omega_t.iter().all(|&w| w > 2.0 && w < sv.omega_bar));
    }

    /// Adaptive Simpson on the outlier-branch integrand.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn outlier_odds_match_direct_quadrature() {
        let (p, obar) = (0.05, 10.0);
        for &(u, s) in &[(8.0, 1.0), (0.3, 2.0), (25.0, 1.5)] {
            let odds = outlier_log_odds(u, s, p, obar, 50);
            let f = |om: f64| (-0.5 * u * u / (om * s)).exp() / (2.0 * std::f64::consts::PI * om * s).sqrt();
            let integral = simpson(&f, 2.0, obar, 1e-14 * f(obar));
            let direct = (p * integral / (obar - 2.0)) / ((1.0 - p) * f(1.0));
            assert!((odds.exp() / direct - 1.0).abs() < 1e-6, "u={u}: {} vs {direct}", odds.exp());
        }
        assert!(outlier_log_odds(8.0, 1.0, 0.05, 10.0, 50) > 10.0);
    }

    #[test]
    fn pinned_sigma2_zeta_freezes_single_site_moves() {
        let mut rng = rng_from_seed(5);
        let opts = SvOptions { sigma2_zeta_fixed: Some(1e-12), ..SvOptions::default() };
        let mut sv = state(50, Volatility::Sv);
        sv.sigma2_zeta = 1e-12;
        let u = vec![1.0; 50];
        let (acc, tries) = step_log_volatility(&mut sv, &u, &opts, &mut rng);
        assert_eq!(tries, 50);
        assert_eq!(acc, 0);
        let spread = sv.zeta.iter().map(|z| (z - sv.mu_zeta).abs()).fold(0.0, f64::max);
        assert!(spread < 1e-9);
    }

    #[test]
    fn flat_likelihood_recovers_ar1_prior() {
        // Missing residuals leave a flat likelihood, so ζ is sampled from its
        // AR(1) prior; compare mean and variance of ζ_T to the stationary law.
        let mut rng = rng_from_seed(17);
        let opts = SvOptions { step_size: 0.8, ..SvOptions::default() };
        let mut sv = state(5, Volatility::Sv);
        sv.mu_zeta = 0.0;
        sv.phi_zeta = 0.6;
        sv.sigma2_zeta = 0.5;
        let u = vec![f64::NAN; 5];
        let target_var = 0.5 / (1.0 - 0.36);
        let mut draws = Vec::new();
        for it in 0..200_000 {
            step_zeta_single_site(&mut sv, &u, &opts, &mut rng);
            if it >= 1000 && it % 10 == 0 {
                draws.push(sv.zeta[4]);
            }
        }
        let n = draws.len() as f64;
        let m = draws.iter().sum::<f64>() / n;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / n;
        // batch-means standard error of the mean
        let b = 100;
        let per = draws.len() / b;
        let bm: Vec<f64> = (0..b).map(|k| draws[k * per..(k + 1) * per].iter().sum::<f64>() / per as f64).collect();
        let se = (bm.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64 / b as f64).sqrt();
        assert!(m.abs() < 3.0 * se + 1e-12, "mean {m} se {se}");
        assert!((v / target_var - 1.0).abs() < 0.05, "var {v} vs {target_var}");
    }

    #[test]
    fn zeta_path_tracks_truth() {
        // T = 50 synthetic SV data, all other blocks frozen at truth.
        let mut corr_sum = 0.0;
        for seed in 0..20u64 {
            let mut rng = rng_from_seed(100 + seed);
            let (mu, phi, s2): (f64, f64, f64) = (0.0, 0.97, 0.3);
            let mut truth = vec![0.0; 50];
            let e: f64 = StandardNormal.sample(&mut rng);
            truth[0] = mu + (s2 / (1.0 - phi * phi)).sqrt() * e;
            for t in 1..50 {
                let e: f64 = StandardNormal.sample(&mut rng);
                truth[t] = mu + phi * (truth[t - 1] - mu) + s2.sqrt() * e;
            }
            let u: Vec<f64> = truth
                .iter()
                .map(|z| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    (0.5 * z).exp() * e
                })
                .collect();
            let opts = SvOptions::default();
            let mut sv = state(50, Volatility::Sv);
            sv.mu_zeta = mu;
            sv.phi_zeta = phi;
            sv.sigma2_zeta = s2;
            let mut mean = vec![0.0; 50];
            let mut kept = 0.0;
            for it in 0..6000 {
                step_zeta_single_site(&mut sv, &u, &opts, &mut rng);
                if it >= 1000 {
                    for t in 0..50 {
                        mean[t] += sv.zeta[t];
                    }
                    kept += 1.0;
                }
            }
            mean.iter_mut().for_each(|m| *m /= kept);
            corr_sum += correlation(&mean, &truth);
        }
        assert!(corr_sum / 20.0 > 0.8, "mean correlation {}", corr_sum / 20.0);
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn ar1_parameters_recovered() {
        let mut err_mu = 0.0;
        let mut err_phi = 0.0;
        for seed in 0..20u64 {
            let mut rng = rng_from_seed(500 + seed);
            let (mu, phi, s2): (f64, f64, f64) = (-1.0, 0.8, 0.1);
            let n = 500;
            let mut z = vec![0.0; n];
            let e: f64 = StandardNormal.sample(&mut rng);
            z[0] = mu + (s2 / (1.0 - phi * phi)).sqrt() * e;
            for t in 1..n {
                let e: f64 = StandardNormal.sample(&mut rng);
                z[t] = mu + phi * (z[t - 1] - mu) + s2.sqrt() * e;
            }
            let mut sv = state(n, Volatility::Sv);
            sv.zeta = z;
            let opts = SvOptions::default();
            let (mut m_mu, mut m_phi) = (0.0, 0.0);
            let draws = 2000;
            for it in 0..draws + 200 {
                step_sv_params(&mut sv, Volatility::Sv, &opts, &mut rng);
                if it >= 200 {
                    m_mu += sv.mu_zeta;
                    m_phi += sv.phi_zeta;
                }
            }
            err_mu += (m_mu / draws as f64 - mu).abs();
            err_phi += (m_phi / draws as f64 - phi).abs();
            assert!(sv.phi_zeta.abs() < 1.0);
        }
        assert!(err_mu / 20.0 < 0.1, "{}", err_mu / 20.0);
        assert!(err_phi / 20.0 < 0.1, "{}", err_phi / 20.0);
    }

    #[test]
    fn constant_path_shrinks_sigma2_zeta_and_no_outliers_shrinks_p() {
        let mut rng = rng_from_seed(8);
        let opts = SvOptions::default();
        let mut sv = state(200, Volatility::SvOutlier);
        let (a, b) = opts.sigma2_zeta_prior;
        let prior_mean = b / (a - 1.0);
        let (pa, pb) = opts.p_omega_prior;
        let p_prior = pa / (pa + pb);
        let (mut s, mut p) = (0.0, 0.0);
        for _ in 0..2000 {
            sv.zeta = vec![0.0; 200];
            step_sv_params(&mut sv, Volatility::SvOutlier, &opts, &mut rng);
            s += sv.sigma2_zeta;
            p += sv.p_omega;
        }
        assert!(s / 2000.0 < prior_mean);
        assert!(p / 2000.0 < p_prior);
    }

    #[test]
    fn scale_mixture_variance() {
        let mut rng = rng_from_seed(21);
        let (nu, omega, zeta) = (6.0, 3.0, -0.4f64);
        let n = 1_000_000;
        let mut s2 = 0.0;
        for _ in 0..n {
            let u = simulate_error(&mut rng, nu, omega, zeta);
            s2 += u * u;
        }
        let target = nu / (nu - 2.0) * omega * zeta.exp();
        assert!((s2 / n as f64 / target - 1.0).abs() < 0.02);
    }

    #[test]
    fn parses_variant_names() {
        for v in Volatility::ALL {
            assert_eq!(v.name().parse::<Volatility>().unwrap(), v);
        }
        assert!("garch".parse::<Volatility>().is_err());
    }
}
