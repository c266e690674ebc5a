//! Regression designs with an explicit group partition.
//!
//! A [`GroupedDesign`] stores the response, the regressor matrix and the
//! contiguous column blocks that make up the groups. Designs are produced
//! either from raw blocks ([`assemble_grouped_design`]) or from high-frequency
//! panels projected on a lag-polynomial basis ([`assemble_midas_design`]).

mod assemble;
mod basis;

pub use assemble::{assemble_grouped_design, assemble_midas_design, midas_row, HfSeries, MidasLayout};
pub use basis::{almon_basis, basis_for, orthogonal_basis, BasisFamily, BasisMatrix};

use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Sizes of the contiguous column blocks, in column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl Partition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return invalid("partition needs at least one group");
        }
        if sizes.contains(&0) {
            return invalid("group sizes must be positive");
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(Self { sizes, offsets })
    }

    /// `n` groups of equal size `g`.
    pub fn uniform(n: usize, g: usize) -> Result<Self> {
        Self::new(vec![g; n])
    }

    pub fn n_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn width(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, j: usize) -> usize {
        self.sizes[j]
    }

    /// Column range of group `j`.
    pub fn range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Group owning column `col` (both zero-based).
    pub fn group_of(&self, col: usize) -> Option<usize> {
        if col >= self.width() {
            return None;
        }
        // offsets is sorted; partition_point finds the first offset > col
        Some(self.offsets.partition_point(|&o| o <= col) - 1)
    }

    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

/// Response, regressors and group structure for one estimation window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupedDesign {
    pub y: Vec<f64>,
    pub z: DMatrix<f64>,
    pub partition: Partition,
    pub group_labels: Vec<String>,
    /// Forecast horizon in low-frequency units.
    pub horizon: f64,
    pub basis_meta: Vec<Option<BasisMatrix>>,
    /// Per-column divisors applied by [`GroupedDesign::scaled`], if any.
    pub column_scale: Option<Vec<f64>>,
}

impl GroupedDesign {
    pub fn new(y: Vec<f64>, z: DMatrix<f64>, partition: Partition, horizon: f64) -> Result<Self> {
        if y.is_empty() {
            return invalid("design needs at least one observation");
        }
        if z.nrows() != y.len() {
            return Err(Error::DimensionMismatch { what: "design rows", expected: y.len(), got: z.nrows() });
        }
        if z.ncols() != partition.width() {
            return Err(Error::DimensionMismatch {
                what: "design columns vs partition width",
                expected: partition.width(),
                got: z.ncols(),
            });
        }
        if let Some(t) = y.iter().position(|v| !v.is_finite()) {
            return invalid(format!("missing or non-finite response at row {t}"));
        }
        if let Some(k) = z.iter().position(|v| !v.is_finite()) {
            return invalid(format!(
                "missing or non-finite regressor at row {}, column {}",
                k % z.nrows(),
                k / z.nrows()
            ));
        }
        let n = partition.n_groups();
        Ok(Self {
            y,
            z,
            group_labels: (1..=n).map(|j| format!("g{j}")).collect(),
            partition,
            horizon,
            basis_meta: vec![None; n],
            column_scale: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.partition.n_groups() {
            return Err(Error::DimensionMismatch {
                what: "group labels",
                expected: self.partition.n_groups(),
                got: labels.len(),
            });
        }
        self.group_labels = labels;
        Ok(self)
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn width(&self) -> usize {
        self.z.ncols()
    }

    pub fn n_groups(&self) -> usize {
        self.partition.n_groups()
    }

    pub fn row(&self, t: usize) -> Vec<f64> {
        self.z.row(t).iter().copied().collect()
    }

    /// Sub-design over a contiguous row range.
    pub fn rows(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.n_obs() || range.is_empty() {
            return invalid(format!("row range {range:?} outside 0..{}", self.n_obs()));
        }
        let z = self.z.rows(range.start, range.len()).into_owned();
        Ok(Self {
            y: self.y[range].to_vec(),
            z,
            partition: self.partition.clone(),
            group_labels: self.group_labels.clone(),
            horizon: self.horizon,
            basis_meta: self.basis_meta.clone(),
            column_scale: self.column_scale.clone(),
        })
    }

    /// Copy with every column divided by its sample standard deviation.
    /// Constant columns are left unscaled. The divisors are recorded in
    /// `column_scale` so coefficients can be mapped back.
    pub fn scaled(&self) -> Self {
        let t = self.n_obs() as f64;
        let mut z = self.z.clone();
        let mut scale = Vec::with_capacity(z.ncols());
        for mut col in z.column_iter_mut() {
            let mean = col.sum() / t;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            col /= sd;
            scale.push(sd);
        }
        Self { z, column_scale: Some(scale), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn group_of_column_37_in_ten_by_ten_is_group_4() {
        let p = Partition::uniform(10, 10).unwrap();
        // one-based column 37 -> one-based group 4
        assert_eq!(p.group_of(36).map(|j| j + 1), Some(4));
        assert_eq!(p.group_of(100), None);
    }

    #[test]
    fn rejects_mismatched_rows_and_missing_values() {
        let p = Partition::new(vec![2]).unwrap();
        let z = DMatrix::from_element(3, 2, 1.0);
        assert!(GroupedDesign::new(vec![1.0, 2.0], z.clone(), p.clone(), 0.0).is_err());
        assert!(GroupedDesign::new(vec![1.0, f64::NAN, 2.0], z, p, 0.0).is_err());
    }

    #[test]
    fn scaled_columns_have_unit_sd() {
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0]);
        let d = GroupedDesign::new(vec![0.0; 4], z, Partition::new(vec![2]).unwrap(), 0.0).unwrap();
        let s = d.scaled();
        let c0: Vec<f64> = s.z.column(0).iter().copied().collect();
        let m = c0.iter().sum::<f64>() / 4.0;
        let v = c0.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(s.column_scale.as_ref().unwrap()[1], 1.0);
    }

    proptest! {
        #[test]
        fn every_column_belongs_to_exactly_one_block(sizes in proptest::collection::vec(1usize..6, 1..8)) {
            let p = Partition::new(sizes).unwrap();
            for c in 0..p.width() {
                let owners: Vec<usize> = (0..p.n_groups()).filter(|&j| p.range(j).contains(&c)).collect();
                prop_assert_eq!(owners.len(), 1);
                prop_assert_eq!(p.group_of(c), Some(owners[0]));
            }
        }
    }
}
