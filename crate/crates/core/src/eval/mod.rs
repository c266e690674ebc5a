//! Estimation, selection and forecast metrics, optimal prediction pools and
//! the bi-level sparse singular value diagnostic.

use crate::design::Partition;
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::sampler::ForecastDensity;
use crate::special::{norm_cdf, norm_pdf};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Median probability model threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationMetrics {
    pub mse: f64,
    pub var: f64,
    pub bias2: f64,
}

/// MSE, variance and squared bias of per-replication estimates (rows), all
/// normalized by the replication count R.
pub fn estimation_metrics(theta_hat: &DMatrix<f64>, theta0: &[f64]) -> Result<EstimationMetrics> {
    let r = theta_hat.nrows();
    if r == 0 {
        return invalid("need at least one replication");
    }
    if theta_hat.ncols() != theta0.len() {
        return Err(Error::DimensionMismatch { what: "estimate width", expected: theta0.len(), got: theta_hat.ncols() });
    }
    let rf = r as f64;
    let (mut mse, mut var, mut bias2) = (0.0, 0.0, 0.0);
    for (k, &t0) in theta0.iter().enumerate() {
        let col = theta_hat.column(k);
        let mean = col.sum() / rf;
        mse += col.iter().map(|v| (v - t0) * (v - t0)).sum::<f64>() / rf;
        var += col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rf;
        bias2 += (mean - t0) * (mean - t0);
    }
    Ok(EstimationMetrics { mse, var, bias2 })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_sets(declared: &[bool], truth: &[bool]) -> Self {
        let mut c = Self::default();
        for (&d, &t) in declared.iter().zip(truth) {
            match (d, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    /// 100·TP/(TP+FN), or `None` when the truth has no positives.
    pub fn tpr(&self) -> Option<f64> {
        let p = self.tp + self.fn_;
        (p > 0).then(|| 100.0 * self.tp as f64 / p as f64)
    }

    /// Matthews correlation; 0 when any marginal count is 0.
    pub fn mcc(&self) -> f64 {
        let (tp, fp, fn_, tn) = (self.tp as f64, self.fp as f64, self.fn_ as f64, self.tn as f64);
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        if den == 0.0 {
            0.0
        } else {
            (tp * tn - fp * fn_) / den.sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub tpr_group: Option<f64>,
    pub tpr_var: Option<f64>,
    pub mcc_group: f64,
    pub mcc_var: f64,
    pub group: Confusion,
    pub var: Confusion,
}

/// Declare groups and coefficients active when their inclusion frequency is
/// at least `threshold`, and score against the true supports (zero-based).
pub fn selection_metrics(
    group_inclusion: &[f64],
    var_inclusion: &[f64],
    threshold: f64,
    true_groups: &[usize],
    true_vars: &[usize],
) -> Result<SelectionReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return invalid(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    let mask = |n: usize, idx: &[usize]| -> Result<Vec<bool>> {
        let mut m = vec![false; n];
        for &i in idx {
            *m.get_mut(i).ok_or_else(|| Error::InvalidArgument(format!("true index {i} out of range 0..{n}")))? = true;
        }
        Ok(m)
    };
    let declared = |f: &[f64]| f.iter().map(|&p| p >= threshold).collect::<Vec<_>>();
    let group = Confusion::from_sets(&declared(group_inclusion), &mask(group_inclusion.len(), true_groups)?);
    let var = Confusion::from_sets(&declared(var_inclusion), &mask(var_inclusion.len(), true_vars)?);
    Ok(SelectionReport {
        tpr_group: group.tpr(),
        tpr_var: var.tpr(),
        mcc_group: group.mcc(),
        mcc_var: var.mcc(),
        group,
        var,
    })
}

/// E|X - c| for X ~ N(μ, σ²) shifted by c, written A(μ - c, σ²).
fn crps_kernel(mu: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return mu.abs();
    }
    let s = var.sqrt();
    let z = mu / s;
    2.0 * s * norm_pdf(z) + mu * (2.0 * norm_cdf(z) - 1.0)
}

/// E|X - y| for X from the mixture `f`.
pub fn expected_abs_dev(f: &ForecastDensity, y: f64) -> f64 {
    (0..f.len()).map(|i| f.weights[i] * crps_kernel(y - f.means[i], f.variances[i])).sum()
}

/// E|X - X'| for independent X ~ f and X' ~ g.
pub fn expected_abs_diff(f: &ForecastDensity, g: &ForecastDensity) -> f64 {
    par::sum_indexed(f.len(), |i| {
        let (mi, vi) = (f.means[i], f.variances[i]);
        let inner: f64 = (0..g.len()).map(|j| g.weights[j] * crps_kernel(mi - g.means[j], vi + g.variances[j])).sum();
        f.weights[i] * inner
    })
}

/// Closed-form CRPS of a Gaussian mixture at outcome `y`:
/// Σ w_i A(y - μ_i, σ_i²) - ½ Σ_ij w_i w_j A(μ_i - μ_j, σ_i² + σ_j²).
pub fn crps_mixture(f: &ForecastDensity, y: f64) -> f64 {
    let n = f.len();
    // off-diagonal pairs counted once and doubled
    let pairs = par::sum_indexed(n, |i| {
        let (mi, vi, wi) = (f.means[i], f.variances[i], f.weights[i]);
        let mut acc = 0.5 * wi * wi * crps_kernel(0.0, 2.0 * vi);
        for j in i + 1..n {
            acc += wi * f.weights[j] * crps_kernel(mi - f.means[j], vi + f.variances[j]);
        }
        acc
    });
    expected_abs_dev(f, y) - pairs
}

/// Gaussian CRPS at outcome `y`.
pub fn crps_normal(mean: f64, var: f64, y: f64) -> f64 {
    crps_kernel(y - mean, var) - 0.5 * crps_kernel(0.0, 2.0 * var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n: usize,
    pub rmsfe: f64,
    /// Average log predictive density (higher is better).
    pub avg_logs: f64,
    pub avg_crps: f64,
    /// Model over benchmark RMSFE.
    pub rel_rmsfe: Option<f64>,
    /// Model minus benchmark average log score.
    pub rel_logs: Option<f64>,
    /// Model over benchmark CRPS.
    pub rel_crps: Option<f64>,
    pub errors: Vec<f64>,
    pub logs: Vec<f64>,
    pub crps: Vec<f64>,
}

struct PeriodScores {
    errors: Vec<f64>,
    logs: Vec<f64>,
    crps: Vec<f64>,
}

fn period_scores(densities: &[ForecastDensity], outcomes: &[f64]) -> Result<PeriodScores> {
    if densities.len() != outcomes.len() {
        return Err(Error::DimensionMismatch { what: "densities vs outcomes", expected: outcomes.len(), got: densities.len() });
    }
    if densities.is_empty() {
        return invalid("no forecast periods to score");
    }
    let mut s = PeriodScores { errors: vec![], logs: vec![], crps: vec![] };
    for (t, (f, &y)) in densities.iter().zip(outcomes).enumerate() {
        let lp = f.log_pdf(y);
        if !lp.is_finite() {
            return Err(Error::ZeroDensity { period: t, outcome: y });
        }
        s.errors.push(y - f.mean());
        s.logs.push(lp);
        s.crps.push(crps_mixture(f, y));
    }
    Ok(s)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|e| e * e).sum::<f64>() / xs.len() as f64).sqrt()
}

/// RMSFE of the mixture mean, average LogS and average CRPS; relative to the
/// benchmark when one is given.
pub fn forecast_scores(
    densities: &[ForecastDensity],
    outcomes: &[f64],
    benchmark: Option<&[ForecastDensity]>,
) -> Result<ScoreReport> {
    let m = period_scores(densities, outcomes)?;
    let rmsfe = rms(&m.errors);
    let avg_logs = mean(&m.logs);
    let avg_crps = mean(&m.crps);
    let (rel_rmsfe, rel_logs, rel_crps) = match benchmark {
        Some(b) => {
            let bs = period_scores(b, outcomes)?;
            (Some(rmsfe / rms(&bs.errors)), Some(avg_logs - mean(&bs.logs)), Some(avg_crps / mean(&bs.crps)))
        }
        None => (None, None, None),
    };
    Ok(ScoreReport {
        n: outcomes.len(),
        rmsfe,
        avg_logs,
        avg_crps,
        rel_rmsfe,
        rel_logs,
        rel_crps,
        errors: m.errors,
        logs: m.logs,
        crps: m.crps,
    })
}

/// Least-squares AR(1) with intercept and plug-in Gaussian predictive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Fit {
    pub intercept: f64,
    pub slope: f64,
    /// Residual variance, SSR / (T - 3) with T - 1 usable pairs.
    pub sigma2: f64,
    pub last: f64,
}

impl Ar1Fit {
    pub fn fit(y: &[f64]) -> Result<Self> {
        let t = y.len();
        if t < 10 {
            return invalid(format!("AR(1) benchmark needs T >= 10, got {t}"));
        }
        let x = &y[..t - 1];
        let z = &y[1..];
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let mz = z.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        if !(sxx > 1e-12 * (1.0 + mx * mx) * n) {
            return Err(Error::Degenerate("AR(1) benchmark: y is constant".into()));
        }
        let sxz: f64 = x.iter().zip(z).map(|(a, b)| (a - mx) * (b - mz)).sum();
        let slope = sxz / sxx;
        let intercept = mz - slope * mx;
        let ssr: f64 = x.iter().zip(z).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let sigma2 = ssr / (n - 2.0);
        if !(sigma2 > 0.0) {
            return Err(Error::Degenerate("AR(1) benchmark: zero residual variance".into()));
        }
        Ok(Self { intercept, slope, sigma2, last: y[t - 1] })
    }

    /// One-step predictive given the previous observation.
    pub fn one_step(&self, y_prev: f64) -> ForecastDensity {
        ForecastDensity::normal(self.intercept + self.slope * y_prev, self.sigma2).expect("positive variance")
    }

    /// Iterated predictive `h` steps beyond the end of the training sample.
    pub fn iterate(&self, h: usize) -> ForecastDensity {
        let (mut mean, mut var, mut pow) = (self.last, 0.0, 1.0);
        for _ in 0..h.max(1) {
            mean = self.intercept + self.slope * mean;
            var += self.sigma2 * pow;
            pow *= self.slope * self.slope;
        }
        ForecastDensity::normal(mean, var).expect("positive variance")
    }
}

/// AR(1) predictive densities for horizons 1..=max_h beyond the training sample.
pub fn ar1_benchmark(y_train: &[f64], max_h: usize) -> Result<Vec<ForecastDensity>> {
    let fit = Ar1Fit::fit(y_train)?;
    Ok((1..=max_h.max(1)).map(|h| fit.iterate(h)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolWeights {
    pub weights: Vec<f64>,
    /// Σ_t log Σ_k w_k f_{k,t} at the returned weights.
    pub objective: f64,
    pub iterations: usize,
    /// Norm of the projected-gradient step of the mean log score.
    pub gradient_norm: f64,
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let (mut css, mut theta) = (0.0, 0.0);
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

const POOL_TOL: f64 = 1e-8;
const POOL_GRADIENT_ITER: usize = 2_000;

/// Weights on the simplex maximizing Σ_t log Σ_k w_k f_{t,k}, where
/// `density[(t, k)]` is model k's predictive density at period t's outcome.
/// Projected-gradient ascent from the uniform point with backtracking.
pub fn optimal_pool(density: &DMatrix<f64>) -> Result<PoolWeights> {
    let (t, k) = density.shape();
    if t == 0 || k == 0 {
        return invalid("pool needs at least one model and one period");
    }
    if density.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid("pool densities must be finite and non-negative");
    }
    let pool = PoolProblem { density, t: t as f64 };
    let mut w = vec![1.0 / k as f64; k];
    if !pool.objective(&w).is_finite() {
        let period = (0..t).find(|&s| density.row(s).sum() == 0.0).unwrap_or(0);
        return Err(Error::ZeroDensity { period, outcome: f64::NAN });
    }
    let mut step = 1.0;
    let mut it = 0;
    while it < POOL_GRADIENT_ITER {
        let g = pool.gradient(&w);
        let gnorm = pool.mapping_norm(&w, &g);
        if gnorm < POOL_TOL {
            return Ok(pool.finish(w, it, gnorm));
        }
        // backtracking on the exact gain of the projected step
        loop {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let cand = project_simplex(&trial);
            let d: Vec<f64> = cand.iter().zip(&w).map(|(a, b)| a - b).collect();
            let lin: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            let sq: f64 = d.iter().map(|x| x * x).sum();
            let gain = pool.gain(&w, &d);
            if gain.is_finite() && gain >= 0.0 && gain >= lin - sq / (2.0 * step) {
                w = cand;
                step *= 2.0;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        it += 1;
        if step < 1e-14 {
            break;
        }
    }
    // gains are at rounding level or progress is slow; finish with Newton steps
    pool.polish(w, it)
}

struct PoolProblem<'a> {
    density: &'a DMatrix<f64>,
    t: f64,
}

impl PoolProblem<'_> {
    fn mix(&self, w: &[f64], s: usize) -> f64 {
        w.iter().enumerate().map(|(j, wj)| wj * self.density[(s, j)]).sum()
    }

    /// Mean log pooled density.
    fn objective(&self, w: &[f64]) -> f64 {
        (0..self.density.nrows()).map(|s| self.mix(w, s).ln()).sum::<f64>() / self.t
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        for s in 0..self.density.nrows() {
            let p = self.mix(w, s);
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += self.density[(s, j)] / p / self.t;
            }
        }
        g
    }

    /// Objective change for the move w -> w + d, computed from d directly.
    fn gain(&self, w: &[f64], d: &[f64]) -> f64 {
        (0..self.density.nrows()).map(|s| (self.mix(d, s) / self.mix(w, s)).ln_1p()).sum::<f64>() / self.t
    }

    /// ‖P(w + ∇) - w‖, zero exactly at the optimum.
    fn mapping_norm(&self, w: &[f64], g: &[f64]) -> f64 {
        let unit: Vec<f64> = w.iter().zip(g).map(|(a, b)| a + b).collect();
        dist(&project_simplex(&unit), w)
    }

    /// Newton steps on the face spanned by the positive weights.
    fn polish(&self, mut w: Vec<f64>, mut it: usize) -> Result<PoolWeights> {
        let k = w.len();
        let mut g = self.gradient(&w);
        let mut gnorm = self.mapping_norm(&w, &g);
        for _ in 0..100 {
            if gnorm < POOL_TOL {
                return Ok(self.finish(w, it, gnorm));
            }
            let free: Vec<usize> = (0..k).filter(|&j| w[j] > 0.0).collect();
            let nf = free.len();
            let mut kkt = DMatrix::zeros(nf + 1, nf + 1);
            let mut rhs = nalgebra::DVector::zeros(nf + 1);
            for s in 0..self.density.nrows() {
                let p2 = self.mix(&w, s).powi(2);
                for (a, &ja) in free.iter().enumerate() {
                    for (b, &jb) in free.iter().enumerate() {
                        kkt[(a, b)] -= self.density[(s, ja)] * self.density[(s, jb)] / p2 / self.t;
                    }
                }
            }
            for (a, &ja) in free.iter().enumerate() {
                kkt[(a, nf)] = 1.0;
                kkt[(nf, a)] = 1.0;
                rhs[a] = -g[ja];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else { break };
            // largest step keeping every weight non-negative
            let mut alpha: f64 = 1.0;
            for (a, &ja) in free.iter().enumerate() {
                if sol[a] < 0.0 {
                    alpha = alpha.min(-w[ja] / sol[a]);
                }
            }
            let mut cand = w.clone();
            for (a, &ja) in free.iter().enumerate() {
                cand[ja] = (w[ja] + alpha * sol[a]).max(0.0);
                if alpha < 1.0 && cand[ja] < 1e-300 {
                    cand[ja] = 0.0;
                }
            }
            let total: f64 = cand.iter().sum();
            cand.iter_mut().for_each(|v| *v /= total);
            let gc = self.gradient(&cand);
            let nc = self.mapping_norm(&cand, &gc);
            it += 1;
            if !(nc < gnorm) {
                break;
            }
            (w, g, gnorm) = (cand, gc, nc);
        }
        if gnorm < POOL_TOL {
            Ok(self.finish(w, it, gnorm))
        } else {
            Err(Error::NoConvergence { iterations: it, gradient_norm: gnorm })
        }
    }

    fn finish(&self, mut w: Vec<f64>, iterations: usize, gradient_norm: f64) -> PoolWeights {
        let s: f64 = w.iter().sum();
        for v in &mut w {
            *v /= s;
        }
        let objective = self.objective(&w) * self.t;
        PoolWeights { weights: w, objective, iterations, gradient_norm }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest instance handled by exact enumeration.
pub const MAX_ENUM_GROUPS: usize = 12;
pub const MAX_ENUM_COLUMNS: usize = 24;

/// min over supports with at most `s` active groups and `r` active columns of
/// λ_min(Z_S'Z_S) / ‖Z‖_o², with ‖Z‖_o the largest group-block spectral norm.
pub fn bilevel_sparse_singular_value(z: &DMatrix<f64>, partition: &Partition, s: usize, r: usize) -> Result<f64> {
    if z.ncols() != partition.width() {
        return Err(Error::DimensionMismatch { what: "columns vs partition", expected: partition.width(), got: z.ncols() });
    }
    if s == 0 || r == 0 {
        return invalid("s and r must be positive");
    }
    if partition.n_groups() > MAX_ENUM_GROUPS || partition.width() > MAX_ENUM_COLUMNS {
        return Err(Error::TooLarge(format!(
            "{} groups and {} columns (limits {MAX_ENUM_GROUPS} and {MAX_ENUM_COLUMNS})",
            partition.n_groups(),
            partition.width()
        )));
    }
    let mut norm_o2: f64 = 0.0;
    for j in 0..partition.n_groups() {
        let rg = partition.range(j);
        let block = z.columns(rg.start, rg.len());
        let gram = block.transpose() * block;
        let top = SymmetricEigen::new(gram).eigenvalues.max();
        norm_o2 = norm_o2.max(top);
    }
    if !(norm_o2 > 0.0) {
        return Err(Error::Degenerate("Z is identically zero".into()));
    }
    let p = partition.width();
    let group_of: Vec<usize> = (0..p).map(|c| partition.group_of(c).expect("column in range")).collect();
    let mut best = f64::INFINITY;
    let mut cols = Vec::with_capacity(r);
    let mut counts = vec![0usize; partition.n_groups()];
    enumerate(0, p, r, s, &group_of, &mut cols, &mut counts, 0, &mut |sub: &[usize]| {
        let zs = DMatrix::from_fn(z.nrows(), sub.len(), |i, c| z[(i, sub[c])]);
        let lam = SymmetricEigen::new(zs.transpose() * &zs).eigenvalues.min().max(0.0);
        best = best.min(lam);
    });
    Ok(best / norm_o2)
}

/// Visit maximal supports: no column can be added without breaking a limit.
/// By eigenvalue interlacing the minimum is attained on such supports.
#[allow(clippy::too_many_arguments)]
fn enumerate(
    start: usize,
    p: usize,
    r: usize,
    s: usize,
    group_of: &[usize],
    cols: &mut Vec<usize>,
    counts: &mut [usize],
    active: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    let addable = |c: usize, counts: &[usize], active: usize| counts[group_of[c]] > 0 || active < s;
    let mut extended = false;
    if cols.len() < r {
        for c in start..p {
            if !addable(c, counts, active) {
                continue;
            }
            extended = true;
            let g = group_of[c];
            let opened = counts[g] == 0;
            counts[g] += 1;
            cols.push(c);
            enumerate(c + 1, p, r, s, group_of, cols, counts, active + usize::from(opened), visit);
            cols.pop();
            counts[g] -= 1;
        }
    }
    if !extended && !cols.is_empty() {
        // skip sets that could still take an earlier column
        let maximal = cols.len() == r || (0..p).all(|c| cols.contains(&c) || !addable(c, counts, active));
        if maximal {
            visit(cols);
        }
    }
}

#[cfg(test)]
mod tests;
