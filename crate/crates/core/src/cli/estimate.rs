//! `estimate` and `tune` on user data.

use super::config::{parse_horizon, DataKind, Frequency, RunConfig};
use super::panel::{checked_design, checked_row, load_design, load_panel, validate_data_refs, Panel};
use super::plot::{line_chart, Line};
use super::report::{num, opt, Emitter, Manifest, Table};
use super::study::design_table;
use super::fit;
use crate::design::{basis_for, BasisMatrix, GroupedDesign, HfSeries, MidasLayout};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::sampler::{median, PriorHyperparams};
use crate::tuning::{dic, dic_table, select_from_table, DicRow};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Estimation data with naming and calendar metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub design: GroupedDesign,
    /// One name per design column.
    pub columns: Vec<String>,
    /// Quarter label per row (panel data only).
    pub row_labels: Option<Vec<String>>,
    /// Groups subject to selection; a trailing `y_lags` group is not counted.
    pub n_penalized: usize,
    pub group_size: usize,
}

/// Regressor series and their bases for a MIDAS model on a panel.
pub struct MidasInputs {
    pub hf: Vec<HfSeries>,
    pub bases: Vec<BasisMatrix>,
    pub y: Vec<f64>,
}

pub fn midas_inputs(panel: &Panel, target: &str, regressors: &[String], cfg: &RunConfig) -> Result<MidasInputs> {
    let t = panel
        .get(target)
        .ok_or_else(|| Error::Config(format!("target `{target}` is not in the panel")))?;
    if t.frequency != Frequency::Quarterly {
        return Err(Error::Config(format!("target `{target}` must be quarterly (set data.series.{target}.frequency)")));
    }
    let m = &cfg.model;
    let mut hf = Vec::with_capacity(regressors.len());
    let mut bases = Vec::with_capacity(regressors.len());
    for name in regressors {
        let s = panel.get(name).ok_or_else(|| Error::Config(format!("unknown series `{name}`")))?;
        hf.push(s.to_hf()?);
        bases.push(basis_for(m.basis, m.degree, m.p_x)?);
    }
    Ok(MidasInputs { hf, bases, y: t.values.clone() })
}

/// Default regressors: `data.include`, or every series except the target.
pub fn regressor_names(cfg: &RunConfig, panel: &Panel) -> Vec<String> {
    let data = cfg.data.as_ref().unwrap();
    if data.include.is_empty() {
        panel.names().into_iter().filter(|n| *n != data.target).map(String::from).collect()
    } else {
        data.include.clone()
    }
}

fn midas_columns(design: &GroupedDesign) -> Vec<String> {
    let mut cols = Vec::new();
    for j in 0..design.n_groups() {
        let label = &design.group_labels[j];
        cols.extend((1..=design.partition.size(j)).map(|i| format!("{label}.{i}")));
    }
    cols
}

fn penalized(design: &GroupedDesign) -> (usize, usize) {
    let n = design.n_groups();
    let k = if n > 1 && design.group_labels[n - 1] == "y_lags" { n - 1 } else { n };
    let g = (0..k).map(|j| design.partition.size(j)).max().unwrap_or(1);
    (k, g)
}

/// Build the estimation dataset described by `[data]` and `[model]`.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let data = cfg.data.as_ref().ok_or_else(|| Error::Config("missing [data] block".into()))?;
    validate_data_refs(data)?;
    match data.kind {
        DataKind::Design => {
            let d = load_design(&data.path, &data.target, &data.groups)?;
            let (n_penalized, group_size) = penalized(&d.design);
            Ok(Dataset { design: d.design, columns: d.columns, row_labels: None, n_penalized, group_size })
        }
        DataKind::Panel => {
            let panel = load_panel(&data.path, &data.date_column, &data.series)?;
            let names = regressor_names(cfg, &panel);
            let inp = midas_inputs(&panel, &data.target, &names, cfg)?;
            let h = parse_horizon(&cfg.model.h)?;
            let probe = MidasLayout { h, p_y: cfg.model.p_y, periods: 0..0 };
            let usable = |t: usize| {
                inp.y[t].is_finite() && checked_row(&panel, &inp.hf, &inp.bases, &inp.y, &probe, t).is_ok()
            };
            let pick = |q: &Option<String>, fallback: Option<usize>| -> Result<Option<usize>> {
                match q {
                    Some(s) => {
                        let p = panel.period_of(s.parse()?);
                        if p < 0 || p as usize >= panel.n_quarters {
                            return Err(Error::Config(format!("{s} lies outside the panel")));
                        }
                        Ok(Some(p as usize))
                    }
                    None => Ok(fallback),
                }
            };
            let all: Vec<usize> = (0..panel.n_quarters).filter(|&t| usable(t)).collect();
            let start = pick(&data.start, all.first().copied())?;
            let end = pick(&data.end, all.last().copied())?;
            let (Some(start), Some(end)) = (start, end) else {
                return Err(Error::Panel("no quarter has complete data for the model".into()));
            };
            if end < start {
                return Err(Error::Config("data.end precedes data.start".into()));
            }
            let layout = MidasLayout { h, p_y: cfg.model.p_y, periods: start..end + 1 };
            let design = checked_design(&panel, &inp.hf, &inp.bases, &inp.y, &layout)?;
            let row_labels = Some(layout.periods.clone().map(|t| panel.quarter(t).to_string()).collect());
            let (n_penalized, group_size) = penalized(&design);
            Ok(Dataset { columns: midas_columns(&design), design, row_labels, n_penalized, group_size })
        }
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summary(xs: &[f64]) -> (f64, f64, f64, f64) {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (quantile(&s, 0.5), mean, quantile(&s, 0.05), quantile(&s, 0.95))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefRow {
    pub group: String,
    pub column: String,
    pub median: f64,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
    pub inclusion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub size: usize,
    pub inclusion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagWeightRow {
    pub series: String,
    pub lag: usize,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub n_obs: usize,
    pub first_row: Option<String>,
    pub last_row: Option<String>,
    pub volatility: String,
    pub c0: f64,
    pub c1: f64,
    pub draws: usize,
    pub chain_seeds: Vec<u64>,
    pub dic: f64,
    pub sigma2_median: f64,
    pub intercept_median: f64,
    pub mean_tau_acceptance: f64,
    pub zeta_acceptance: Option<f64>,
    pub coefficients: Vec<CoefRow>,
    pub groups: Vec<GroupRow>,
    pub lag_weights: Vec<LagWeightRow>,
}

fn build_prior(cfg: &RunConfig, ds: &Dataset) -> Result<PriorHyperparams> {
    cfg.prior.build(ds.design.n_groups(), ds.n_penalized, ds.group_size, ds.design.n_obs())
}

/// Fit the configured model on the dataset; chains run in parallel.
pub fn estimate(cfg: &RunConfig, ds: &Dataset) -> Result<EstimateReport> {
    let d = &ds.design;
    let prior = build_prior(cfg, ds)?;
    let opts = cfg.model.options(cfg.model.volatility);
    let f = fit(d, cfg.model.standardize, &prior, &cfg.mcmc, cfg.seed, 0, &opts, true)?;
    let work = if cfg.model.standardize { d.scaled() } else { d.clone() };
    let dic_value = dic(&f.chain, &work)?;
    let ch = &f.chain;
    let s = ch.n_draws();
    let raw: Vec<Vec<f64>> = (0..s).map(|i| f.theta_raw(&ch.theta_draws.row(i).iter().copied().collect::<Vec<_>>())).collect();

    let mut coefficients = Vec::with_capacity(d.width());
    for c in 0..d.width() {
        let col: Vec<f64> = raw.iter().map(|r| r[c]).collect();
        let (med, mean, q05, q95) = summary(&col);
        let j = d.partition.group_of(c).unwrap();
        coefficients.push(CoefRow {
            group: d.group_labels[j].clone(),
            column: ds.columns[c].clone(),
            median: med,
            mean,
            q05,
            q95,
            inclusion: ch.inclusion_within[c],
        });
    }
    let groups = (0..d.n_groups())
        .map(|j| GroupRow { group: d.group_labels[j].clone(), size: d.partition.size(j), inclusion: ch.inclusion_group[j] })
        .collect();
    let mut lag_weights = Vec::new();
    for (j, b) in d.basis_meta.iter().enumerate() {
        let Some(b) = b else { continue };
        let range = d.partition.range(j);
        let draws: Vec<Vec<f64>> = raw.iter().map(|r| b.weight_function(&r[range.clone()])).collect();
        for u in 0..=b.p_x {
            let col: Vec<f64> = draws.iter().map(|w| w[u]).collect();
            let (med, _, q05, q95) = summary(&col);
            lag_weights.push(LagWeightRow { series: d.group_labels[j].clone(), lag: u, median: med, q05, q95 });
        }
    }
    let acc = &ch.mcmc_meta.tau_acceptance;
    Ok(EstimateReport {
        n_obs: d.n_obs(),
        first_row: ds.row_labels.as_ref().and_then(|l| l.first().cloned()),
        last_row: ds.row_labels.as_ref().and_then(|l| l.last().cloned()),
        volatility: ch.volatility.name().into(),
        c0: prior.c0,
        c1: prior.c1,
        draws: s,
        chain_seeds: f.chain_seeds.clone(),
        dic: dic_value,
        sigma2_median: median(ch.sigma2_draws.clone()),
        intercept_median: median(ch.intercept_draws.clone()),
        mean_tau_acceptance: if acc.is_empty() { 0.0 } else { acc.iter().sum::<f64>() / acc.len() as f64 },
        zeta_acceptance: ch.sv_draws.as_ref().map(|s| s.zeta_acceptance),
        coefficients,
        groups,
        lag_weights,
    })
}

pub fn run_estimate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let rep = estimate(cfg, &ds)?;
    let mut em = Emitter::new(&cfg.output.dir, &cfg.output.formats)?;
    let mut manifest = Manifest::default();
    let src = "estimate";

    let mut t = Table::new(&["group", "column", "median", "mean", "q05", "q95", "inclusion"]);
    for (i, c) in rep.coefficients.iter().enumerate() {
        t.push(vec![c.group.clone(), c.column.clone(), num(c.median), num(c.mean), num(c.q05), num(c.q95), num(c.inclusion)]);
        manifest.record("estimate_coefficients.csv", i, src, &rep.chain_seeds);
    }
    em.csv("estimate_coefficients.csv", &t)?;

    let mut t = Table::new(&["group", "size", "inclusion"]);
    for (i, g) in rep.groups.iter().enumerate() {
        t.push(vec![g.group.clone(), g.size.to_string(), num(g.inclusion)]);
        manifest.record("estimate_groups.csv", i, src, &rep.chain_seeds);
    }
    em.csv("estimate_groups.csv", &t)?;

    if !rep.lag_weights.is_empty() {
        let mut t = Table::new(&["series", "lag", "median", "q05", "q95"]);
        for (i, w) in rep.lag_weights.iter().enumerate() {
            t.push(vec![w.series.clone(), w.lag.to_string(), num(w.median), num(w.q05), num(w.q95)]);
            manifest.record("estimate_lag_weights.csv", i, src, &rep.chain_seeds);
        }
        em.csv("estimate_lag_weights.csv", &t)?;
    }

    let mut t = Table::new(&["quantity", "value"]);
    let rows: Vec<(&str, String)> = vec![
        ("n_obs", rep.n_obs.to_string()),
        ("first_row", rep.first_row.clone().unwrap_or_default()),
        ("last_row", rep.last_row.clone().unwrap_or_default()),
        ("volatility", rep.volatility.clone()),
        ("c0", num(rep.c0)),
        ("c1", num(rep.c1)),
        ("draws", rep.draws.to_string()),
        ("dic", num(rep.dic)),
        ("sigma2_median", num(rep.sigma2_median)),
        ("intercept_median", num(rep.intercept_median)),
        ("mean_tau_acceptance", num(rep.mean_tau_acceptance)),
        ("zeta_acceptance", opt(rep.zeta_acceptance)),
    ];
    for (i, (k, v)) in rows.into_iter().enumerate() {
        t.push(vec![k.into(), v]);
        manifest.record("estimate_summary.csv", i, src, &rep.chain_seeds);
    }
    em.csv("estimate_summary.csv", &t)?;
    em.json("estimate.json", &rep)?;
    if cfg.data.as_ref().is_some_and(|d| d.kind == DataKind::Panel) {
        em.csv("estimate_design.csv", &design_table(&ds.design))?;
    }
    em.svg("estimate_lag_weights.svg", || {
        let mut lines = Vec::new();
        let mut series: Vec<&str> = rep.lag_weights.iter().map(|w| w.series.as_str()).collect();
        series.dedup();
        for s in series {
            let y = rep.lag_weights.iter().filter(|w| w.series == s).map(|w| w.median).collect();
            lines.push(Line { label: s.into(), y, dashed: false });
        }
        if lines.is_empty() {
            let y = rep.groups.iter().map(|g| g.inclusion).collect();
            return line_chart("Posterior group inclusion", "group", &[Line { label: "inclusion".into(), y, dashed: false }]);
        }
        line_chart("Posterior median lag weights", "high-frequency lag", &lines)
    })?;
    em.manifest(&manifest)?;
    Ok(em.written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub lower_bounds: (f64, f64),
    pub c0: f64,
    pub c1: f64,
    pub dic: f64,
    pub table: Vec<DicRow>,
}

pub fn tune(cfg: &RunConfig, ds: &Dataset) -> Result<TuneReport> {
    let template = build_prior(cfg, ds)?;
    let bounds = cfg.prior.bounds(ds.n_penalized, ds.group_size)?;
    let grid = cfg.tune.grid(bounds, cfg.seed)?;
    let mcmc = cfg.tune.mcmc(derive_seed(cfg.mcmc.seed.unwrap_or(cfg.seed), stream::TUNING, 0));
    let opts = cfg.model.options(cfg.model.volatility);
    let work = if cfg.model.standardize { ds.design.scaled() } else { ds.design.clone() };
    let sel = select_from_table(dic_table(&work, &template, &grid.points(), &mcmc, &opts))?;
    Ok(TuneReport { lower_bounds: bounds, c0: sel.c0, c1: sel.c1, dic: sel.dic, table: sel.table })
}

pub fn run_tune(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let ds = load_dataset(cfg)?;
    let rep = tune(cfg, &ds)?;
    let mut em = Emitter::new(&cfg.output.dir, &cfg.output.formats)?;
    let mut manifest = Manifest::default();
    let mut t = Table::new(&["index", "c0", "c1", "chain_seed", "dic", "error"]);
    for (i, r) in rep.table.iter().enumerate() {
        t.push(vec![r.index.to_string(), num(r.c0), num(r.c1), r.chain_seed.to_string(), opt(r.dic), r.error.clone().unwrap_or_default()]);
        manifest.record("tune_dic.csv", i, &format!("grid point {}", r.index), &[r.chain_seed]);
    }
    em.csv("tune_dic.csv", &t)?;
    let mut t = Table::new(&["c0", "c1", "dic", "c0_lower_bound", "c1_lower_bound"]);
    t.push(vec![num(rep.c0), num(rep.c1), num(rep.dic), num(rep.lower_bounds.0), num(rep.lower_bounds.1)]);
    let seeds: Vec<u64> = rep.table.iter().map(|r| r.chain_seed).collect();
    manifest.record("tune_selection.csv", 0, "grid", &seeds);
    em.csv("tune_selection.csv", &t)?;
    em.json("tune.json", &rep)?;
    em.svg("tune_dic.svg", || {
        let y = rep.table.iter().map(|r| r.dic.unwrap_or(f64::NAN)).collect();
        line_chart("DIC by grid point", "grid point", &[Line { label: "DIC".into(), y, dashed: false }])
    })?;
    em.manifest(&manifest)?;
    Ok(em.written)
}
