use crate::error::{invalid, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Lag-polynomial families for the high-frequency weighting function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisFamily {
    Umidas,
    Almon,
    RestrictedAlmon,
    Legendre,
    Bernstein,
    ChebyshevT,
}

impl BasisFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Umidas => "umidas",
            Self::Almon => "almon",
            Self::RestrictedAlmon => "restricted-almon",
            Self::Legendre => "legendre",
            Self::Bernstein => "bernstein",
            Self::ChebyshevT => "chebyshev-t",
        }
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisFamily {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "umidas" | "u-midas" | "unrestricted" => Self::Umidas,
            "almon" => Self::Almon,
            "restricted-almon" | "ralmon" => Self::RestrictedAlmon,
            "legendre" => Self::Legendre,
            "bernstein" => Self::Bernstein,
            "chebyshev-t" | "chebyshev" => Self::ChebyshevT,
            other => return invalid(format!("unknown basis family `{other}`")),
        })
    }
}

/// `g` basis functions evaluated at lag positions `0..=p_x`; row `i` is Φ_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisMatrix {
    pub family: BasisFamily,
    pub g: usize,
    pub p_x: usize,
    pub values: DMatrix<f64>,
}

impl BasisMatrix {
    fn new(family: BasisFamily, values: DMatrix<f64>) -> Self {
        Self { family, g: values.nrows(), p_x: values.ncols() - 1, values }
    }

    /// Weighting function ψ(u) = Σ_i coef_i Φ_i(u) on the lag grid.
    pub fn weight_function(&self, coefs: &[f64]) -> Vec<f64> {
        assert_eq!(coefs.len(), self.g);
        (0..=self.p_x)
            .map(|u| (0..self.g).map(|i| coefs[i] * self.values[(i, u)]).sum())
            .collect()
    }

    /// A single known weight row, e.g. true DGP weights used as a basis.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return invalid("weight row must be non-empty");
        }
        Ok(Self::new(BasisFamily::Umidas, DMatrix::from_row_slice(1, weights.len(), weights)))
    }
}

/// Dispatch on family. `g` is ignored for U-MIDAS.
pub fn basis_for(family: BasisFamily, g: usize, p_x: usize) -> Result<BasisMatrix> {
    match family {
        BasisFamily::Almon => almon_basis(g, p_x, false),
        BasisFamily::RestrictedAlmon => almon_basis(g, p_x, true),
        _ => orthogonal_basis(family, g, p_x),
    }
}

/// Almon (power) polynomial basis on the raw lag index u = 0..p_x.
///
/// The restricted form forces the weight function to die out at the last lag:
/// rows are (u - p_x)² (u - p_x + 1) · u^i for i = 0..g-1, so every member
/// has ψ(p_x) = 0, ψ'(p_x) = 0 and ψ(p_x) - ψ(p_x - 1) = 0.
pub fn almon_basis(g: usize, p_x: usize, restricted: bool) -> Result<BasisMatrix> {
    if g < 1 {
        return invalid("Almon basis needs g >= 1");
    }
    if restricted && g < 3 {
        return invalid("restricted Almon basis needs g >= 3");
    }
    let cols = p_x + 1;
    let px = p_x as f64;
    let values = DMatrix::from_fn(g, cols, |i, u| {
        let u = u as f64;
        let mono = u.powi(i as i32);
        if restricted {
            (u - px) * (u - px) * (u - px + 1.0) * mono
        } else {
            mono
        }
    });
    let family = if restricted { BasisFamily::RestrictedAlmon } else { BasisFamily::Almon };
    Ok(BasisMatrix::new(family, values))
}

/// Orthogonal-polynomial families evaluated at x = u / p_x on [0, 1].
///
/// Legendre and Bernstein rows are orthonormalized under the discrete inner
/// product over the lag grid; Chebyshev rows are only scaled to unit norm.
pub fn orthogonal_basis(family: BasisFamily, g: usize, p_x: usize) -> Result<BasisMatrix> {
    let cols = p_x + 1;
    if family == BasisFamily::Umidas {
        return Ok(BasisMatrix::new(family, DMatrix::identity(cols, cols)));
    }
    if g < 1 {
        return invalid("basis needs g >= 1");
    }
    if p_x == 0 && g > 1 {
        return invalid("p_x = 0 admits a single basis function");
    }
    if g > cols {
        return invalid(format!("g = {g} exceeds the {cols} lag positions"));
    }
    let xs: Vec<f64> = (0..cols).map(|u| if p_x == 0 { 0.0 } else { u as f64 / p_x as f64 }).collect();
    let mut values = match family {
        BasisFamily::Legendre => DMatrix::from_fn(g, cols, |i, u| legendre(i, 2.0 * xs[u] - 1.0)),
        BasisFamily::ChebyshevT => DMatrix::from_fn(g, cols, |i, u| chebyshev_t(i, 2.0 * xs[u] - 1.0)),
        BasisFamily::Bernstein => DMatrix::from_fn(g, cols, |i, u| bernstein(i, g - 1, xs[u])),
        BasisFamily::Almon | BasisFamily::RestrictedAlmon => {
            return invalid(format!("{family} is not an orthogonal family"))
        }
        BasisFamily::Umidas => unreachable!(),
    };
    match family {
        BasisFamily::ChebyshevT => {
            for mut row in values.row_iter_mut() {
                let n = row.norm();
                row /= n;
            }
        }
        _ => orthonormalize_rows(&mut values)?,
    }
    Ok(BasisMatrix::new(family, values))
}

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn chebyshev_t(n: usize, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    if n == 0 {
        return t0;
    }
    for _ in 2..=n {
        let t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

fn bernstein(k: usize, n: usize, x: f64) -> f64 {
    let mut binom = 1.0;
    for j in 0..k {
        binom *= (n - j) as f64 / (j + 1) as f64;
    }
    binom * x.powi(k as i32) * (1.0 - x).powi((n - k) as i32)
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
fn orthonormalize_rows(m: &mut DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        for _pass in 0..2 {
            for k in 0..i {
                let proj = m.row(i).dot(&m.row(k));
                let rk = m.row(k).into_owned();
                let mut ri = m.row_mut(i);
                ri -= proj * rk;
            }
        }
        let n = m.row(i).norm();
        if n < 1e-10 {
            return invalid("basis rows are linearly dependent on the lag grid");
        }
        let mut ri = m.row_mut(i);
        ri /= n;
    }
    Ok(())
}
