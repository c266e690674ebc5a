//! CSV ingestion: dated mixed-frequency panels and ready-made designs.

use super::config::{DataBlock, Frequency, SeriesSpec, Transform};
use crate::design::{midas_row, BasisMatrix, GroupedDesign, HfSeries, MidasLayout, Partition};
use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Calendar quarter, ordered by time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    pub q: u32,
}

impl Quarter {
    fn index(self) -> i64 {
        self.year as i64 * 4 + (self.q as i64 - 1)
    }

    fn from_index(i: i64) -> Self {
        Self { year: i.div_euclid(4) as i32, q: (i.rem_euclid(4) + 1) as u32 }
    }

    pub fn offset(self, k: i64) -> Self {
        Self::from_index(self.index() + k)
    }

    /// Quarters from `self` to `other`.
    pub fn until(self, other: Quarter) -> i64 {
        other.index() - self.index()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.q)
    }
}

impl FromStr for Quarter {
    type Err = Error;
    /// Accepts "2010Q1" or an ISO date inside the quarter.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some((y, q)) = t.split_once(['Q', 'q']) {
            let year = y.parse().map_err(|_| Error::Config(format!("bad quarter `{s}`")))?;
            let q: u32 = q.parse().map_err(|_| Error::Config(format!("bad quarter `{s}`")))?;
            if !(1..=4).contains(&q) {
                return Err(Error::Config(format!("bad quarter `{s}`")));
            }
            return Ok(Self { year, q });
        }
        let d = parse_date(t).map_err(|_| Error::Config(format!("bad quarter `{s}` (use 2010Q1 or an ISO date)")))?;
        Ok(Self { year: d.year(), q: d.month0() / 3 + 1 })
    }
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, chrono::ParseError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
}

fn month_index(d: NaiveDate) -> i64 {
    d.year() as i64 * 12 + d.month0() as i64
}

fn month_label(i: i64) -> String {
    format!("{:04}-{:02}", i.div_euclid(12), i.rem_euclid(12) + 1)
}

/// One transformed series on the quarterly calendar of the panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSeries {
    pub name: String,
    pub frequency: Frequency,
    /// Three values per quarter (monthly) or one (quarterly); NaN when absent.
    pub values: Vec<f64>,
}

impl PanelSeries {
    fn per_quarter(&self) -> usize {
        match self.frequency {
            Frequency::Monthly => 3,
            Frequency::Quarterly => 1,
        }
    }

    pub fn to_hf(&self) -> Result<HfSeries> {
        HfSeries::new(self.name.clone(), self.per_quarter(), self.values.clone())
    }
}

/// Mixed-frequency panel aligned to quarters with m = 3 months per quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub first_quarter: Quarter,
    pub n_quarters: usize,
    pub series: Vec<PanelSeries>,
}

impl Panel {
    pub fn quarter(&self, t: usize) -> Quarter {
        self.first_quarter.offset(t as i64)
    }

    /// Zero-based period of quarter `q`, which may fall outside the panel.
    pub fn period_of(&self, q: Quarter) -> i64 {
        self.first_quarter.until(q)
    }

    pub fn get(&self, name: &str) -> Option<&PanelSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.series.iter().map(|s| s.name.as_str()).collect()
    }

    /// Quarter or month label of observation `i` of a series.
    pub fn label(&self, s: &PanelSeries, i: usize) -> String {
        match s.frequency {
            Frequency::Quarterly => self.quarter(i).to_string(),
            Frequency::Monthly => month_label(self.first_quarter.index() * 3 + i as i64),
        }
    }
}

/// Read just the header row.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

fn parse_cell(raw: &str, series: &str, row: usize) -> Result<f64> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Panel(format!("row {row}, column `{series}`: cannot parse `{t}` as a number")))
}

/// Load a dated panel. Rows are months (any day within the month); quarterly
/// series carry one value anywhere inside each quarter.
pub fn load_panel(path: &Path, date_column: &str, specs: &BTreeMap<String, SeriesSpec>) -> Result<Panel> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let date_idx = header
        .iter()
        .position(|h| h == date_column)
        .ok_or_else(|| Error::Panel(format!("no date column `{date_column}` in {}", path.display())))?;
    for name in specs.keys() {
        if !header.contains(name) {
            return Err(Error::Config(format!("data.series names `{name}`, which is not in the header")));
        }
    }
    let names: Vec<String> = header.iter().enumerate().filter(|(i, _)| *i != date_idx).map(|(_, h)| h.clone()).collect();
    let mut months = Vec::new();
    let mut raw: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 2; // one-based, after the header
        if rec.len() != header.len() {
            return Err(Error::Panel(format!("row {row} has {} fields, header has {}", rec.len(), header.len())));
        }
        let d = parse_date(&rec[date_idx])
            .map_err(|_| Error::Panel(format!("row {row}: unparseable date `{}` (expected YYYY-MM-DD)", &rec[date_idx])))?;
        let m = month_index(d);
        if let Some(&prev) = months.last() {
            if m != prev + 1 {
                return Err(Error::Panel(format!(
                    "row {row}: date {d} does not follow {} by one month",
                    month_label(prev)
                )));
            }
        }
        months.push(m);
        let mut k = 0;
        for (i, cell) in rec.iter().enumerate() {
            if i == date_idx {
                continue;
            }
            raw[k].push(parse_cell(cell, &names[k], row)?);
            k += 1;
        }
    }
    if months.is_empty() {
        return Err(Error::Panel(format!("{} has no data rows", path.display())));
    }
    let first_month = months[0].div_euclid(3) * 3;
    let lead = (months[0] - first_month) as usize;
    let n_months = lead + months.len();
    let n_quarters = n_months.div_ceil(3);
    let first_quarter = Quarter::from_index(first_month / 3);

    let mut series = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        let spec = specs.get(name).cloned().unwrap_or_default();
        let mut monthly = vec![f64::NAN; n_quarters * 3];
        monthly[lead..lead + raw[k].len()].copy_from_slice(&raw[k]);
        let values = match spec.frequency {
            Frequency::Monthly => monthly,
            Frequency::Quarterly => {
                let mut q = vec![f64::NAN; n_quarters];
                for (t, slot) in q.iter_mut().enumerate() {
                    let obs: Vec<f64> = monthly[3 * t..3 * t + 3].iter().copied().filter(|v| !v.is_nan()).collect();
                    if obs.len() > 1 {
                        return Err(Error::Panel(format!(
                            "quarterly series `{name}` has {} values in {}",
                            obs.len(),
                            first_quarter.offset(t as i64)
                        )));
                    }
                    *slot = obs.first().copied().unwrap_or(f64::NAN);
                }
                q
            }
        };
        let mut s = PanelSeries { name: name.clone(), frequency: spec.frequency, values };
        let panel_view = Panel { first_quarter, n_quarters, series: vec![] };
        check_gaps(&panel_view, &s)?;
        s.values = apply_transform(&panel_view, &s, spec.transform)?;
        series.push(s);
    }
    Ok(Panel { first_quarter, n_quarters, series })
}

/// Missing values are allowed only before the first and after the last observation.
fn check_gaps(panel: &Panel, s: &PanelSeries) -> Result<()> {
    let first = s.values.iter().position(|v| !v.is_nan());
    let last = s.values.iter().rposition(|v| !v.is_nan());
    if let (Some(a), Some(b)) = (first, last) {
        if let Some(i) = (a..=b).find(|&i| s.values[i].is_nan()) {
            return Err(Error::Panel(format!("series `{}` has a gap at {}", s.name, panel.label(s, i))));
        }
    }
    Ok(())
}

fn apply_transform(panel: &Panel, s: &PanelSeries, tr: Transform) -> Result<Vec<f64>> {
    let v = &s.values;
    let log = |i: usize| -> Result<f64> {
        if v[i].is_nan() {
            Ok(f64::NAN)
        } else if v[i] > 0.0 {
            Ok(v[i].ln())
        } else {
            Err(Error::Panel(format!(
                "series `{}` at {}: log transform of non-positive value {}",
                s.name,
                panel.label(s, i),
                v[i]
            )))
        }
    };
    let annual = match s.frequency {
        Frequency::Quarterly => 400.0,
        Frequency::Monthly => 1200.0,
    };
    let mut out = vec![f64::NAN; v.len()];
    for i in 0..v.len() {
        out[i] = match tr {
            Transform::Level => v[i],
            Transform::Log => log(i)?,
            Transform::Diff if i > 0 => v[i] - v[i - 1],
            Transform::LogDiff if i > 0 => log(i)? - log(i - 1)?,
            Transform::Growth if i > 0 => annual * (log(i)? - log(i - 1)?),
            _ => f64::NAN,
        };
    }
    Ok(out)
}

/// MIDAS regressor row for period `t`, rejecting missing inputs with the
/// series name and quarter.
pub fn checked_row(panel: &Panel, hf: &[HfSeries], bases: &[BasisMatrix], y: &[f64], layout: &MidasLayout, t: usize) -> Result<Vec<f64>> {
    let row = midas_row(hf, bases, y, layout, t).map_err(|e| match e {
        Error::CalendarAlignment { series, first_feasible } => Error::Panel(format!(
            "series `{series}` lacks history for {}: first feasible quarter is {}",
            panel.quarter(t),
            panel.quarter(first_feasible)
        )),
        other => other,
    })?;
    let mut c = 0;
    for (s, b) in hf.iter().zip(bases) {
        if row[c..c + b.g].iter().any(|v| !v.is_finite()) {
            return Err(Error::Panel(format!(
                "series `{}` has missing values in the lags needed for {}",
                s.name,
                panel.quarter(t)
            )));
        }
        c += b.g;
    }
    if row[c..].iter().any(|v| !v.is_finite()) {
        return Err(Error::Panel(format!("target has missing lags for {}", panel.quarter(t))));
    }
    Ok(row)
}

/// MIDAS design over `layout.periods` with every input checked for gaps.
pub fn checked_design(panel: &Panel, hf: &[HfSeries], bases: &[BasisMatrix], y: &[f64], layout: &MidasLayout) -> Result<GroupedDesign> {
    for t in layout.periods.clone() {
        checked_row(panel, hf, bases, y, layout, t)?;
        if !y.get(t).is_some_and(|v| v.is_finite()) {
            return Err(Error::Panel(format!("target is missing for {}", panel.quarter(t))));
        }
    }
    crate::design::assemble_midas_design(hf, bases, y, layout)
}

/// A design read from CSV plus the names of its columns.
#[derive(Debug, Clone)]
pub struct DesignData {
    pub design: GroupedDesign,
    pub columns: Vec<String>,
}

/// Load a design CSV with a `y` column. Columns are grouped by the prefix
/// before the first '.', or by `groups` when given; groups keep the order of
/// first appearance (or map order).
pub fn load_design(path: &Path, target: &str, groups: &BTreeMap<String, Vec<String>>) -> Result<DesignData> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let y_idx = header
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::Panel(format!("no target column `{target}` in {}", path.display())))?;
    let regressors: Vec<usize> = (0..header.len()).filter(|&i| i != y_idx).collect();
    let mut order: Vec<(String, Vec<usize>)> = Vec::new();
    if groups.is_empty() {
        for &i in &regressors {
            let g = header[i].split_once('.').map(|(a, _)| a).unwrap_or(&header[i]).to_string();
            match order.iter_mut().find(|(n, _)| *n == g) {
                Some((_, cols)) => cols.push(i),
                None => order.push((g, vec![i])),
            }
        }
    } else {
        let mut used = vec![false; header.len()];
        for (g, members) in groups {
            let mut cols = Vec::new();
            for m in members {
                let i = header
                    .iter()
                    .position(|h| h == m)
                    .ok_or_else(|| Error::Config(format!("group `{g}` names unknown column `{m}`")))?;
                if i == y_idx || used[i] {
                    return Err(Error::Config(format!("column `{m}` is the target or in two groups")));
                }
                used[i] = true;
                cols.push(i);
            }
            if cols.is_empty() {
                return Err(Error::Config(format!("group `{g}` is empty")));
            }
            order.push((g.clone(), cols));
        }
        if let Some(&i) = regressors.iter().find(|&&i| !used[i]) {
            return Err(Error::Config(format!("column `{}` is in no group", header[i])));
        }
    }
    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 2;
        if rec.len() != header.len() {
            return Err(Error::Panel(format!("row {row} has {} fields, header has {}", rec.len(), header.len())));
        }
        let mut vals = Vec::with_capacity(header.len());
        for (i, cell) in rec.iter().enumerate() {
            let v = parse_cell(cell, &header[i], row)?;
            if v.is_nan() {
                return Err(Error::Panel(format!("row {row}, column `{}`: missing value", header[i])));
            }
            vals.push(v);
        }
        y.push(vals[y_idx]);
        rows.push(vals);
    }
    let cols: Vec<usize> = order.iter().flat_map(|(_, c)| c.iter().copied()).collect();
    let z = DMatrix::from_fn(rows.len(), cols.len(), |r, c| rows[r][cols[c]]);
    let partition = Partition::new(order.iter().map(|(_, c)| c.len()).collect())?;
    let labels = order.iter().map(|(g, _)| g.clone()).collect();
    let design = GroupedDesign::new(y, z, partition, 0.0)?.with_labels(labels)?;
    Ok(DesignData { design, columns: cols.iter().map(|&i| header[i].clone()).collect() })
}

/// Reject group maps, includes and targets that name columns missing from
/// the data header. Runs before any estimation.
pub fn validate_data_refs(data: &DataBlock) -> Result<()> {
    let header = read_header(&data.path)?;
    let has = |n: &str| header.iter().any(|h| h == n);
    if !has(&data.target) {
        return Err(Error::Config(format!("target `{}` is not in the data header", data.target)));
    }
    for n in &data.include {
        if !has(n) {
            return Err(Error::Config(format!("data.include names unknown series `{n}`")));
        }
    }
    for (g, members) in &data.groups {
        for m in members {
            if !has(m) {
                return Err(Error::Config(format!("group `{g}` names unknown series `{m}`")));
            }
        }
    }
    Ok(())
}
