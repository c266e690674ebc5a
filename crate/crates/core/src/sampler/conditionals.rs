//! Closed-form pieces of the full conditionals, kept free of sampler state so
//! they can be checked against quadrature.

use crate::error::{Error, Result};
use crate::special::{norm_logcdf, prob_from_logs};
use nalgebra::{DMatrix, DVector};

/// P(v_ji = 0 | rest) =
/// π₁ / (π₁ + 2(1-π₁)(η/τ) exp(ν²/2η²) Φ(ν/η)), evaluated in log space.
pub fn spike_prob_within(eta2: f64, nu: f64, tau: f64, pi1: f64) -> f64 {
    if pi1 >= 1.0 {
        return 1.0;
    }
    if pi1 <= 0.0 {
        return 0.0;
    }
    let eta = eta2.sqrt();
    let ln_slab = (2.0 * (1.0 - pi1)).ln() + (eta / tau).ln() + 0.5 * nu * nu / eta2 + norm_logcdf(nu / eta);
    prob_from_logs(pi1.ln(), ln_slab)
}

/// (η², ν) for coordinate (j, i) given the weighted Gram diagonal
/// `zwz = Σ w_t z_t²` and the weighted cross product `zwr = Σ w_t z_t r̃_t`
/// against the partial residual that excludes this coordinate.
pub fn within_moments(b: f64, zwz: f64, zwr: f64, tau: f64) -> (f64, f64) {
    let eta2 = 1.0 / (b * b * zwz + 1.0 / (tau * tau));
    (eta2, eta2 * b * zwr)
}

/// Posted precision of b_j and its Cholesky-based summaries.
#[derive(Debug, Clone)]
pub struct GroupConditional {
    /// Lower Cholesky factor of P = V Z'WZ V + I.
    pub l: DMatrix<f64>,
    /// L⁻¹ V Z'W r̃.
    pub c: DVector<f64>,
    /// Posterior mean μ = P⁻¹ V Z'W r̃.
    pub mean: DVector<f64>,
    /// ln[ |Σ|^{1/2} exp(½ μ'Σ⁻¹μ) ] = -Σ ln L_ii + ½ c'c.
    pub log_slab_factor: f64,
}

/// Group-level conditional given Z_j'WZ_j, Z_j'W r̃ (partial residual without
/// group j) and the current scales v_j.
pub fn group_conditional(zwz: &DMatrix<f64>, zwr: &DVector<f64>, v: &[f64]) -> Result<GroupConditional> {
    let g = v.len();
    let mut p = DMatrix::identity(g, g);
    for a in 0..g {
        for b in 0..g {
            p[(a, b)] += v[a] * zwz[(a, b)] * v[b];
        }
    }
    let m = DVector::from_fn(g, |a, _| v[a] * zwr[a]);
    let chol = p
        .cholesky()
        .ok_or_else(|| Error::Degenerate("group precision is not positive definite".into()))?;
    let l = chol.l();
    let c = l.solve_lower_triangular(&m).expect("Cholesky factor has a positive diagonal");
    let mean = l.tr_solve_lower_triangular(&c).expect("Cholesky factor has a positive diagonal");
    let log_det_l: f64 = (0..g).map(|a| l[(a, a)].ln()).sum();
    let log_slab_factor = -log_det_l + 0.5 * c.dot(&c);
    Ok(GroupConditional { l, c, mean, log_slab_factor })
}

/// π̃₀ = π₀ / (π₀ + (1-π₀)|Σ|^{1/2} exp(½ μ'Σ⁻¹μ)).
pub fn spike_prob_group(cond: &GroupConditional, pi0: f64) -> f64 {
    if pi0 >= 1.0 {
        return 1.0;
    }
    if pi0 <= 0.0 {
        return 0.0;
    }
    prob_from_logs(pi0.ln(), (1.0 - pi0).ln() + cond.log_slab_factor)
}

/// Inverse-Gamma (shape, scale) of σ² | rest.
pub fn sigma2_conditional(resid_ss: f64, t: usize, a0: f64, a1: f64) -> (f64, f64) {
    (0.5 * t as f64 + a0, 0.5 * resid_ss + a1)
}

/// Gamma (shape, rate) of a₁ | σ² under the hierarchical variance prior.
pub fn a1_conditional(sigma2: f64, a0: f64, e0: f64, e1: f64) -> (f64, f64) {
    (e0 + a0, e1 + 1.0 / sigma2)
}

/// Log target of τ_j given v_j: Gamma(1/2, scale λ₁) prior times the
/// half-normal slab densities of the ξ positive scales, up to a constant.
pub fn tau_log_target(tau: f64, xi: usize, sum_v2: f64, lambda1: f64) -> f64 {
    -(xi as f64 + 0.5) * tau.ln() - tau / lambda1 - 0.5 * sum_v2 / (tau * tau)
}

/// Log Metropolis–Hastings ratio for an exponential proposal with mean τ_old.
pub fn tau_log_ratio(tau_old: f64, tau_new: f64, xi: usize, sum_v2: f64, lambda1: f64) -> f64 {
    (xi as f64 + 1.5) * (tau_old.ln() - tau_new.ln())
        - 0.5 * sum_v2 * (1.0 / (tau_new * tau_new) - 1.0 / (tau_old * tau_old))
        - (tau_new - tau_old) / lambda1
        - tau_old / tau_new
        + tau_new / tau_old
}

/// Beta parameters of a spike probability given prior (c, d) and the counts
/// of spike and slab indicators.
pub fn pi_conditional(c: f64, d: f64, spikes: usize, slabs: usize) -> (f64, f64) {
    (c + spikes as f64, d + slabs as f64)
}
