use crate::error::{invalid, Result};
use crate::special::{log_sum_exp, norm_cdf, norm_logpdf};
use serde::{Deserialize, Serialize};

/// Finite Gaussian mixture Σ_s w_s N(means_s, variances_s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDensity {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ForecastDensity {
    /// Equal-weight mixture, one component per draw.
    pub fn uniform(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let n = means.len();
        Self::new(means, variances, vec![1.0 / n as f64; n])
    }

    pub fn new(means: Vec<f64>, variances: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() || means.len() != variances.len() || means.len() != weights.len() {
            return invalid("mixture needs matching non-empty means, variances and weights");
        }
        if let Some(v) = variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return invalid(format!("component variance must be positive, got {v}"));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return invalid("component means must be finite");
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return invalid("mixture weights must be non-negative");
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return invalid("mixture weights sum to zero");
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { means, variances, weights })
    }

    /// Single Gaussian.
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![mean], vec![variance], vec![1.0])
    }

    /// Linear pool Σ_k w_k f_k, flattening components.
    pub fn pool(members: &[&ForecastDensity], weights: &[f64]) -> Result<Self> {
        if members.len() != weights.len() || members.is_empty() {
            return invalid("pool needs one weight per member");
        }
        let (mut m, mut v, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for (f, &wk) in members.iter().zip(weights) {
            if wk == 0.0 {
                continue;
            }
            m.extend_from_slice(&f.means);
            v.extend_from_slice(&f.variances);
            w.extend(f.weights.iter().map(|x| x * wk));
        }
        Self::new(m, v, w)
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.means.iter().zip(&self.weights).map(|(m, w)| m * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.means
            .iter()
            .zip(&self.variances)
            .zip(&self.weights)
            .map(|((m, v), w)| w * (v + (m - mu) * (m - mu)))
            .sum()
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        let terms: Vec<f64> = self
            .means
            .iter()
            .zip(&self.variances)
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|((m, v), w)| w.ln() + norm_logpdf(y, *m, *v))
            .collect();
        log_sum_exp(&terms)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.means
            .iter()
            .zip(&self.variances)
            .zip(&self.weights)
            .map(|((m, v), w)| w * norm_cdf((y - m) / v.sqrt()))
            .sum()
    }

    /// Quantile by bisection on the mixture CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let sd_max = self.variances.iter().cloned().fold(0.0, f64::max).sqrt();
        let lo_m = self.means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_m = self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut lo, mut hi) = (lo_m - 40.0 * sd_max, hi_m + 40.0 * sd_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}
