use super::{BasisMatrix, GroupedDesign, Partition};
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// One high-frequency regressor on the low-frequency calendar.
///
/// Low-frequency period `t` (zero-based) covers entries `t*m .. t*m + m`, the
/// last of which is the end-of-period observation x_t. With `m = 1` the series
/// is itself low-frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HfSeries {
    pub name: String,
    pub m: usize,
    pub values: Vec<f64>,
}

impl HfSeries {
    pub fn new(name: impl Into<String>, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return invalid("frequency ratio m must be positive");
        }
        Ok(Self { name: name.into(), m, values })
    }

    /// Index into `values` of x_{t - h - u/m}, or `None` if it precedes the sample.
    fn lag_index(&self, t: usize, shift: usize, u: usize) -> Option<usize> {
        (t * self.m + self.m - 1).checked_sub(shift + u)
    }

    fn shift(&self, h: f64) -> Result<usize> {
        let s = h * self.m as f64;
        let r = s.round();
        if h < 0.0 || (s - r).abs() > 1e-9 {
            return invalid(format!(
                "horizon {h} is not a whole number of high-frequency steps for `{}` (m = {})",
                self.name, self.m
            ));
        }
        Ok(r as usize)
    }

    fn first_feasible(&self, shift: usize, p_x: usize) -> usize {
        // smallest t with t*m + m - 1 >= shift + p_x
        (shift + p_x + 1).saturating_sub(self.m).div_ceil(self.m)
    }
}

/// Which low-frequency periods become design rows and how y enters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidasLayout {
    /// Horizon in low-frequency units; h·m must be integral for every series.
    pub h: f64,
    /// Number of autoregressive lags of y appended as the last group.
    pub p_y: usize,
    /// Low-frequency periods used as rows; y is indexed on the same calendar.
    pub periods: Range<usize>,
}

impl MidasLayout {
    /// First lag of y that is observed when forecasting at horizon h.
    pub fn y_lag_offset(&self) -> usize {
        (self.h.ceil() as usize).max(1)
    }
}

/// Regressor row for period `t`: per series Φ_i' x_{t-h}, then lags of y.
/// y_t itself is never read, so the row can be built for a forecast target.
pub fn midas_row(panel: &[HfSeries], bases: &[BasisMatrix], y: &[f64], layout: &MidasLayout, t: usize) -> Result<Vec<f64>> {
    if panel.len() != bases.len() {
        return Err(Error::DimensionMismatch { what: "bases per series", expected: panel.len(), got: bases.len() });
    }
    let width: usize = bases.iter().map(|b| b.g).sum::<usize>() + layout.p_y;
    let mut row = Vec::with_capacity(width);
    for (s, b) in panel.iter().zip(bases) {
        let shift = s.shift(layout.h)?;
        let first = s.first_feasible(shift, b.p_x);
        if t < first {
            return Err(Error::CalendarAlignment { series: s.name.clone(), first_feasible: first });
        }
        let end = s.lag_index(t, shift, 0).expect("feasibility checked");
        if end >= s.values.len() {
            return Err(Error::Panel(format!(
                "series `{}` ends before low-frequency period {t} at horizon {}",
                s.name, layout.h
            )));
        }
        for i in 0..b.g {
            let mut acc = 0.0;
            for u in 0..=b.p_x {
                acc += b.values[(i, u)] * s.values[end - u];
            }
            row.push(acc);
        }
    }
    let off = layout.y_lag_offset();
    for k in 0..layout.p_y {
        let lag = off + k;
        let idx = t.checked_sub(lag).ok_or_else(|| Error::CalendarAlignment {
            series: "y".into(),
            first_feasible: off + layout.p_y - 1,
        })?;
        let v = *y.get(idx).ok_or_else(|| Error::Panel(format!("y has no observation for period {idx}")))?;
        row.push(v);
    }
    Ok(row)
}

/// Build the MIDAS design: one group per high-frequency series projected on
/// its basis, then a final group holding `p_y` lags of y (label `y_lags`).
pub fn assemble_midas_design(
    panel: &[HfSeries],
    bases: &[BasisMatrix],
    y: &[f64],
    layout: &MidasLayout,
) -> Result<GroupedDesign> {
    if layout.periods.is_empty() {
        return invalid("empty estimation window");
    }
    if layout.periods.end > y.len() {
        return Err(Error::Panel(format!(
            "estimation window ends at period {} but y has {} observations",
            layout.periods.end,
            y.len()
        )));
    }
    let mut sizes: Vec<usize> = bases.iter().map(|b| b.g).collect();
    let mut labels: Vec<String> = panel.iter().map(|s| s.name.clone()).collect();
    if layout.p_y > 0 {
        sizes.push(layout.p_y);
        labels.push("y_lags".into());
    }
    let partition = Partition::new(sizes)?;
    let n_rows = layout.periods.len();
    let mut z = DMatrix::zeros(n_rows, partition.width());
    for (r, t) in layout.periods.clone().enumerate() {
        let row = midas_row(panel, bases, y, layout, t)?;
        for (c, v) in row.into_iter().enumerate() {
            z[(r, c)] = v;
        }
    }
    let target = y[layout.periods.clone()].to_vec();
    let mut design = GroupedDesign::new(target, z, partition, layout.h)?.with_labels(labels)?;
    for (j, b) in bases.iter().enumerate() {
        design.basis_meta[j] = Some(b.clone());
    }
    Ok(design)
}

/// Concatenate T×g_j blocks horizontally; the partition is the block widths.
pub fn assemble_grouped_design(blocks: &[DMatrix<f64>], y: Vec<f64>, h: f64) -> Result<GroupedDesign> {
    if blocks.is_empty() {
        return invalid("need at least one block");
    }
    if h < 0.0 {
        return invalid("horizon must be non-negative");
    }
    let t = y.len();
    for b in blocks {
        if b.nrows() != t {
            return Err(Error::DimensionMismatch { what: "block rows", expected: t, got: b.nrows() });
        }
    }
    let partition = Partition::new(blocks.iter().map(|b| b.ncols()).collect())?;
    let mut z = DMatrix::zeros(t, partition.width());
    for (j, b) in blocks.iter().enumerate() {
        let r = partition.range(j);
        z.columns_mut(r.start, r.len()).copy_from(b);
    }
    GroupedDesign::new(y, z, partition, h)
}
