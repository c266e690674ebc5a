//! Scalar special functions and samplers shared by the Gibbs steps.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{PI, SQRT_2};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `1 - Φ(x)`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `ln Φ(x)`, switching to the asymptotic series below `x = -30` where the
/// complementary error function underflows.
pub fn norm_logcdf(x: f64) -> f64 {
    if x > -30.0 {
        let c = norm_cdf(x);
        if x > 0.0 {
            // ln(1 - sf) keeps precision when sf is tiny
            (-norm_sf(x)).ln_1p()
        } else {
            c.ln()
        }
    } else {
        let z2 = 1.0 / (x * x);
        // 1 - 1/x² + 3/x⁴ - 15/x⁶ + 105/x⁸
        let series = 1.0 - z2 * (1.0 - z2 * (3.0 - z2 * (15.0 - 105.0 * z2)));
        -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Standard normal quantile.
pub fn norm_ppf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Normal log density with mean `mean` and variance `var`.
#[inline]
pub fn norm_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var) - 0.5 * var.ln() - LN_SQRT_2PI
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `a / (a + b)` given `ln a` and `ln b`.
#[inline]
pub fn prob_from_logs(ln_a: f64, ln_b: f64) -> f64 {
    if ln_a == f64::NEG_INFINITY && ln_b == f64::NEG_INFINITY {
        return f64::NAN;
    }
    if ln_b == f64::NEG_INFINITY {
        return 1.0;
    }
    if ln_a == f64::NEG_INFINITY {
        return 0.0;
    }
    let d = ln_b - ln_a;
    if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

/// Draw from `N(mean, sd²)` truncated to `[0, ∞)`.
///
/// Inverse-CDF on the standardized bound when it lies in `[-6, 6]`, plain
/// rejection below, exponential-proposal rejection above.
pub fn sample_truncated_normal_pos<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    debug_assert!(sd > 0.0);
    let a = -mean / sd;
    let z = if a < -6.0 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z >= a {
                break z;
            }
        }
    } else if a > 6.0 {
        let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = Exp1.sample(rng);
            let z = a + e / alpha;
            let u: f64 = rng.random();
            if u.ln() <= -0.5 * (z - alpha) * (z - alpha) {
                break z;
            }
        }
    } else {
        let q = norm_sf(a);
        let u: f64 = loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        };
        (-norm_ppf(u * q)).max(a)
    };
    (mean + sd * z).max(0.0)
}

/// Inverse-Gamma with shape/scale parameterization: `1 / Gamma(shape, rate = scale)`.
pub fn sample_inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    let g = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    scale / g
}

/// Gamma with shape/rate parameterization.
pub fn sample_gamma_rate<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0).expect("positive shape").sample(rng) / rate
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    rand_distr::Beta::new(a, b).expect("positive beta parameters").sample(rng)
}

/// Index drawn from unnormalized log-weights.
pub fn sample_log_categorical<R: Rng + ?Sized>(rng: &mut R, log_w: &[f64]) -> usize {
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, wk) in w.iter().enumerate() {
        if u < *wk {
            return k;
        }
        u -= wk;
    }
    w.len() - 1
}

/// Gauss–Legendre nodes and weights mapped to `[lo, hi]`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}
