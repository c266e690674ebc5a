//! Rolling-window nowcasts with optimal prediction pools.
//!
//! Every (basis, volatility, partition) model is re-estimated on the trailing
//! window before each target quarter and produces a direct-forecast density
//! per horizon. Pools are convex combinations of those densities; a pool of
//! pools is flattened to one weight vector over the base models, so all
//! scores come from per-period model quantities: log densities, E|X_k − y|
//! and E|X_k − X_l|.

use super::config::{parse_horizon, NowcastBlock, RunConfig};
use super::estimate::midas_inputs;
use super::panel::{checked_design, checked_row, load_panel, validate_data_refs, Quarter};
use super::plot::fan_chart;
use super::report::{num, opt, Emitter, Manifest, Table};
use super::{fit, thin_density};
use crate::design::{BasisFamily, MidasLayout};
use crate::error::{Error, Result};
use crate::eval::{expected_abs_dev, expected_abs_diff, optimal_pool, Ar1Fit};
use crate::par::map_indexed;
use crate::sampler::{posterior_predictive, ForecastDensity};
use crate::special::log_sum_exp;
use crate::volatility::Volatility;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub basis: BasisFamily,
    pub volatility: Volatility,
    /// "whole" or the category name.
    pub partition: String,
    pub series: Vec<String>,
}

/// Pool member: a base model or an earlier pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Member {
    Model(usize),
    Pool(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolDef {
    pub name: String,
    pub members: Vec<Member>,
}

pub fn model_specs(nc: &NowcastBlock, all_series: &[String], categories: &[(String, Vec<String>)]) -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for &basis in &nc.bases {
        for &vol in &nc.volatilities {
            if nc.whole {
                out.push(ModelSpec {
                    name: format!("{}/{}/whole", basis.name(), vol.name()),
                    basis,
                    volatility: vol,
                    partition: "whole".into(),
                    series: all_series.to_vec(),
                });
            }
            if nc.categories {
                for (cat, members) in categories {
                    out.push(ModelSpec {
                        name: format!("{}/{}/{cat}", basis.name(), vol.name()),
                        basis,
                        volatility: vol,
                        partition: cat.clone(),
                        series: members.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Pool hierarchy: per (basis, volatility) pools over categories, their pools
/// per basis and overall, and per-basis and overall pools of whole-dataset
/// models. With 2 bases and 5 volatility variants this gives 16 pools.
pub fn pool_defs(models: &[ModelSpec], bases: &[BasisFamily], vols: &[Volatility]) -> Vec<PoolDef> {
    let mut defs: Vec<PoolDef> = Vec::new();
    let pick = |f: &dyn Fn(&ModelSpec) -> bool| -> Vec<Member> {
        models.iter().enumerate().filter(|(_, m)| f(m)).map(|(k, _)| Member::Model(k)).collect()
    };
    let mut level1: Vec<(BasisFamily, usize)> = Vec::new();
    for &b in bases {
        for &v in vols {
            let members = pick(&|m| m.basis == b && m.volatility == v && m.partition != "whole");
            if !members.is_empty() {
                level1.push((b, defs.len()));
                defs.push(PoolDef { name: format!("groups[{},{}]", b.name(), v.name()), members });
            }
        }
    }
    if !level1.is_empty() {
        for &b in bases {
            let members: Vec<Member> = level1.iter().filter(|(bb, _)| *bb == b).map(|&(_, i)| Member::Pool(i)).collect();
            if !members.is_empty() {
                defs.push(PoolDef { name: format!("groups[{}]", b.name()), members });
            }
        }
        let all = level1.iter().map(|&(_, i)| Member::Pool(i)).collect();
        defs.push(PoolDef { name: "groups[all]".into(), members: all });
    }
    let mut any_whole = false;
    for &b in bases {
        let members = pick(&|m| m.basis == b && m.partition == "whole");
        if !members.is_empty() {
            any_whole = true;
            defs.push(PoolDef { name: format!("whole[{}]", b.name()), members });
        }
    }
    if any_whole {
        defs.push(PoolDef { name: "whole[all]".into(), members: pick(&|m| m.partition == "whole") });
    }
    defs
}

/// Per-period model quantities needed to score any pool.
#[derive(Debug, Clone)]
pub struct PeriodStats {
    pub outcome: f64,
    pub scored: bool,
    pub log_pdf: Vec<f64>,
    pub mean: Vec<f64>,
    /// E|X_k − y|.
    pub abs_dev: Vec<f64>,
    /// E|X_k − X_l|, symmetric.
    pub abs_diff: DMatrix<f64>,
}

impl PeriodStats {
    pub fn new(densities: &[&ForecastDensity], outcome: f64, scored: bool) -> Self {
        let k = densities.len();
        let mut abs_diff = DMatrix::zeros(k, k);
        if outcome.is_finite() {
            for a in 0..k {
                for b in a..k {
                    let v = expected_abs_diff(densities[a], densities[b]);
                    abs_diff[(a, b)] = v;
                    abs_diff[(b, a)] = v;
                }
            }
        }
        let y = if outcome.is_finite() { outcome } else { 0.0 };
        Self {
            outcome,
            scored,
            log_pdf: densities.iter().map(|f| f.log_pdf(y)).collect(),
            mean: densities.iter().map(|f| f.mean()).collect(),
            abs_dev: densities.iter().map(|f| expected_abs_dev(f, y)).collect(),
            abs_diff,
        }
    }

    /// log Σ_k w_k f_k(y).
    pub fn log_score(&self, w: &[f64]) -> f64 {
        let terms: Vec<f64> = w.iter().zip(&self.log_pdf).filter(|(w, _)| **w > 0.0).map(|(w, l)| w.ln() + l).collect();
        log_sum_exp(&terms)
    }

    /// CRPS of the pool: Σ w_k E|X_k − y| − ½ Σ w_k w_l E|X_k − X_l|.
    pub fn crps(&self, w: &[f64]) -> f64 {
        let k = w.len();
        let mut spread = 0.0;
        for a in 0..k {
            for b in 0..k {
                spread += w[a] * w[b] * self.abs_diff[(a, b)];
            }
        }
        w.iter().zip(&self.abs_dev).map(|(a, b)| a * b).sum::<f64>() - 0.5 * spread
    }

    pub fn mean(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.mean).map(|(a, b)| a * b).sum()
    }
}

/// Flattened weights over base models for every pool at every period, with
/// each pool's member weights trained on the scored periods before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolPath {
    /// member_weights[p][i]: weights on pool p's members at period i.
    pub member_weights: Vec<Vec<Vec<f64>>>,
    /// model_weights[p][i]: the same pool flattened over base models.
    pub model_weights: Vec<Vec<Vec<f64>>>,
}

/// Optimal weights from a history of member log densities (rows = periods).
/// Each row is rescaled by its maximum, which leaves the optimum unchanged.
pub fn train_weights(history: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Ok(vec![1.0 / k as f64; k]);
    }
    let d = DMatrix::from_fn(history.len(), k, |t, j| {
        let row = &history[t];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (row[j] - m).exp()
    });
    Ok(optimal_pool(&d)?.weights)
}

pub fn pool_path(defs: &[PoolDef], periods: &[PeriodStats], n_models: usize) -> Result<PoolPath> {
    let n_per = periods.len();
    let mut member_weights = vec![Vec::with_capacity(n_per); defs.len()];
    let mut model_weights: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n_per); defs.len()];
    let unit = |k: usize| {
        let mut e = vec![0.0; n_models];
        e[k] = 1.0;
        e
    };
    for i in 0..n_per {
        for (p, def) in defs.iter().enumerate() {
            let flat_at = |m: Member, j: usize, model_weights: &Vec<Vec<Vec<f64>>>| -> Vec<f64> {
                match m {
                    Member::Model(k) => unit(k),
                    Member::Pool(q) => model_weights[q][j].clone(),
                }
            };
            let history: Vec<Vec<f64>> = (0..i)
                .filter(|&j| periods[j].scored)
                .map(|j| def.members.iter().map(|&m| periods[j].log_score(&flat_at(m, j, &model_weights))).collect())
                .collect();
            let w = train_weights(&history, def.members.len())?;
            let mut flat = vec![0.0; n_models];
            for (&m, &wm) in def.members.iter().zip(&w) {
                for (f, v) in flat.iter_mut().zip(flat_at(m, i, &model_weights)) {
                    *f += wm * v;
                }
            }
            member_weights[p].push(w);
            model_weights[p].push(flat);
        }
    }
    Ok(PoolPath { member_weights, model_weights })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub horizon: String,
    pub name: String,
    pub kind: String,
    pub n: usize,
    pub rmsfe: f64,
    pub logs: f64,
    pub crps: f64,
    pub rel_rmsfe: Option<f64>,
    pub rel_logs: Option<f64>,
    pub rel_crps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub horizon: String,
    pub target: String,
    pub name: String,
    pub kind: String,
    pub mean: f64,
    pub variance: f64,
    pub q05: f64,
    pub q16: f64,
    pub q50: f64,
    pub q84: f64,
    pub q95: f64,
    pub outcome: Option<f64>,
    pub logs: Option<f64>,
    pub crps: Option<f64>,
    pub scored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub horizon: String,
    pub target: String,
    pub pool: String,
    pub member: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NowcastReport {
    pub window: usize,
    pub horizons: Vec<String>,
    pub targets: Vec<String>,
    pub models: Vec<ModelSpec>,
    pub pools: Vec<PoolDef>,
    pub scores: Vec<ScoreRow>,
    pub forecasts: Vec<ForecastRow>,
    pub weights: Vec<WeightRow>,
    /// chain_seeds[h][i][k]: seeds of model k at target i, horizon h.
    pub chain_seeds: Vec<Vec<Vec<Vec<u64>>>>,
}

struct Entity<'a> {
    name: String,
    kind: &'static str,
    weights: Box<dyn Fn(usize) -> Vec<f64> + 'a>,
}

fn score_row(horizon: &str, name: &str, kind: &str, periods: &[PeriodStats], w: &dyn Fn(usize) -> Vec<f64>, bench: Option<(f64, f64, f64)>) -> ScoreRow {
    let (mut se, mut ls, mut cr, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (i, p) in periods.iter().enumerate().filter(|(_, p)| p.scored) {
        let wi = w(i);
        let e = p.outcome - p.mean(&wi);
        se += e * e;
        ls += p.log_score(&wi);
        cr += p.crps(&wi);
        n += 1;
    }
    let nf = n as f64;
    let (rmsfe, logs, crps) = ((se / nf).sqrt(), ls / nf, cr / nf);
    ScoreRow {
        horizon: horizon.into(),
        name: name.into(),
        kind: kind.into(),
        n,
        rmsfe,
        logs,
        crps,
        rel_rmsfe: bench.map(|b| rmsfe / b.0),
        rel_logs: bench.map(|b| logs - b.1),
        rel_crps: bench.map(|b| crps / b.2),
    }
}

struct Task {
    h: usize,
    i: usize,
    k: usize,
}

pub fn nowcast(cfg: &RunConfig) -> Result<NowcastReport> {
    let data = cfg.data.as_ref().ok_or_else(|| Error::Config("missing [data] block".into()))?;
    let nc = cfg.nowcast.as_ref().ok_or_else(|| Error::Config("missing [nowcast] block".into()))?;
    validate_data_refs(data)?;
    let panel = load_panel(&data.path, &data.date_column, &data.series)?;
    let all_series = super::estimate::regressor_names(cfg, &panel);
    let categories: Vec<(String, Vec<String>)> = data.groups.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    for (cat, members) in &categories {
        if members.iter().any(|m| *m == data.target) {
            return Err(Error::Config(format!("category `{cat}` contains the target")));
        }
    }
    let models = model_specs(nc, &all_series, &categories);
    let defs = if nc.pools { pool_defs(&models, &nc.bases, &nc.volatilities) } else { Vec::new() };
    let horizons: Vec<f64> = nc.horizons.iter().map(|h| parse_horizon(h)).collect::<Result<_>>()?;

    let y = &panel
        .get(&data.target)
        .ok_or_else(|| Error::Config(format!("unknown target `{}`", data.target)))?
        .values;
    let first: Quarter = nc.first_target.parse()?;
    let first_t = panel.period_of(first);
    if first_t < nc.window as i64 {
        return Err(Error::Panel(format!(
            "insufficient window at first origin: target {first} needs {} quarters before it, the panel has {}",
            nc.window,
            first_t.max(0)
        )));
    }
    let first_t = first_t as usize;
    let last_t = match &nc.last_target {
        Some(q) => panel.period_of(q.parse()?),
        None => y.iter().rposition(|v| v.is_finite()).map(|t| t as i64).unwrap_or(-1),
    };
    if last_t < first_t as i64 || last_t as usize >= panel.n_quarters {
        return Err(Error::Config("last target must lie in the panel and not precede the first".into()));
    }
    let targets: Vec<usize> = (first_t..=last_t as usize).collect();
    let excluded: Vec<Quarter> = nc.exclude.iter().map(|q| q.parse()).collect::<Result<_>>()?;

    let inputs: Vec<_> = models
        .iter()
        .map(|m| {
            let mut c = cfg.clone();
            c.model.basis = m.basis;
            midas_inputs(&panel, &data.target, &m.series, &c)
        })
        .collect::<Result<_>>()?;

    let (n_targets, n_models) = (targets.len(), models.len());
    let tasks: Vec<Task> = (0..horizons.len())
        .flat_map(|h| (0..n_targets).flat_map(move |i| (0..n_models).map(move |k| Task { h, i, k })))
        .collect();
    let run = |ti: usize| -> Result<(ForecastDensity, Vec<u64>)> {
        let Task { h, i, k } = tasks[ti];
        let t = targets[i];
        let inp = &inputs[k];
        let layout = MidasLayout { h: horizons[h], p_y: cfg.model.p_y, periods: t - nc.window..t };
        let design = checked_design(&panel, &inp.hf, &inp.bases, &inp.y, &layout)?;
        let row = checked_row(&panel, &inp.hf, &inp.bases, &inp.y, &layout, t)?;
        let n = design.n_groups();
        let n_pen = if cfg.model.p_y > 0 { n - 1 } else { n };
        let g = inp.bases.iter().map(|b| b.g).max().unwrap_or(1);
        let prior = cfg.prior.build(n, n_pen.max(1), g, design.n_obs())?;
        let opts = cfg.model.options(models[k].volatility);
        let f = fit(&design, cfg.model.standardize, &prior, &cfg.mcmc, cfg.seed, ti as u64, &opts, false)?;
        let dens = thin_density(posterior_predictive(&f.chain, &f.scale_row(&row))?, nc.max_components)?;
        Ok((dens, f.chain_seeds))
    };
    let results = map_indexed(tasks.len(), run).into_iter().collect::<Result<Vec<_>>>()?;
    let at = |h: usize, i: usize, k: usize| &results[(h * targets.len() + i) * models.len() + k];

    let mut report = NowcastReport {
        window: nc.window,
        horizons: nc.horizons.clone(),
        targets: targets.iter().map(|&t| panel.quarter(t).to_string()).collect(),
        models: models.clone(),
        pools: defs.clone(),
        scores: Vec::new(),
        forecasts: Vec::new(),
        weights: Vec::new(),
        chain_seeds: Vec::new(),
    };
    for (hi, &h) in horizons.iter().enumerate() {
        let label = &nc.horizons[hi];
        let scored: Vec<bool> =
            targets.iter().map(|&t| y[t].is_finite() && !excluded.contains(&panel.quarter(t))).collect();
        let periods: Vec<PeriodStats> = map_indexed(targets.len(), |i| {
            let dens: Vec<&ForecastDensity> = (0..models.len()).map(|k| &at(hi, i, k).0).collect();
            PeriodStats::new(&dens, y[targets[i]], scored[i])
        });
        for (i, p) in periods.iter().enumerate() {
            if p.scored && p.log_pdf.iter().all(|l| !l.is_finite()) {
                return Err(Error::ZeroDensity { period: i, outcome: p.outcome });
            }
        }
        let path = pool_path(&defs, &periods, models.len())?;

        // AR(1) on the same window, iterated from the last observed quarter
        let off = (h.ceil() as usize).max(1);
        let bench: Vec<ForecastDensity> = targets
            .iter()
            .map(|&t| {
                let span = &y[t - nc.window..=t - off];
                if span.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Panel(format!("target missing inside the window before {}", panel.quarter(t))));
                }
                Ok(Ar1Fit::fit(span)?.iterate(off))
            })
            .collect::<Result<_>>()?;
        let bench_stats: Vec<PeriodStats> =
            bench.iter().zip(&targets).zip(&scored).map(|((b, &t), &s)| PeriodStats::new(&[b], y[t], s)).collect();
        let one = |_: usize| vec![1.0];
        let b = score_row(label, "AR(1)", "benchmark", &bench_stats, &one, None);
        let bref = Some((b.rmsfe, b.logs, b.crps));

        let mut entities: Vec<Entity> = Vec::new();
        for (k, m) in models.iter().enumerate() {
            let n = models.len();
            entities.push(Entity {
                name: m.name.clone(),
                kind: "model",
                weights: Box::new(move |_| {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    e
                }),
            });
        }
        for (p, d) in defs.iter().enumerate() {
            let mw = &path.model_weights[p];
            entities.push(Entity { name: d.name.clone(), kind: "pool", weights: Box::new(move |i| mw[i].clone()) });
        }
        if scored.iter().any(|&s| s) {
            report.scores.push(b);
            for e in &entities {
                report.scores.push(score_row(label, &e.name, e.kind, &periods, &*e.weights, bref));
            }
        }
        for (i, &t) in targets.iter().enumerate() {
            let p = &periods[i];
            let target = panel.quarter(t).to_string();
            let outcome = y[t].is_finite().then_some(y[t]);
            let mut push = |name: &str, kind: &str, dens: ForecastDensity, logs: Option<f64>, crps: Option<f64>| {
                report.forecasts.push(ForecastRow {
                    horizon: label.clone(),
                    target: target.clone(),
                    name: name.into(),
                    kind: kind.into(),
                    mean: dens.mean(),
                    variance: dens.variance(),
                    q05: dens.quantile(0.05),
                    q16: dens.quantile(0.16),
                    q50: dens.quantile(0.5),
                    q84: dens.quantile(0.84),
                    q95: dens.quantile(0.95),
                    outcome,
                    logs,
                    crps,
                    scored: p.scored,
                });
            };
            let bl = outcome.map(|_| bench_stats[i].log_score(&[1.0]));
            let bc = outcome.map(|_| bench_stats[i].crps(&[1.0]));
            push("AR(1)", "benchmark", bench[i].clone(), bl, bc);
            for e in &entities {
                let w = (e.weights)(i);
                let members: Vec<&ForecastDensity> = (0..models.len()).map(|k| &at(hi, i, k).0).collect();
                let dens = ForecastDensity::pool(&members, &w)?;
                let logs = outcome.map(|_| p.log_score(&w));
                let crps = outcome.map(|_| p.crps(&w));
                push(&e.name, e.kind, dens, logs, crps);
            }
            for (pi, d) in defs.iter().enumerate() {
                for (m, &w) in d.members.iter().zip(&path.member_weights[pi][i]) {
                    let member = match *m {
                        Member::Model(k) => models[k].name.clone(),
                        Member::Pool(q) => defs[q].name.clone(),
                    };
                    report.weights.push(WeightRow {
                        horizon: label.clone(),
                        target: target.clone(),
                        pool: d.name.clone(),
                        member,
                        weight: w,
                    });
                }
            }
        }
        report.chain_seeds.push(
            (0..targets.len()).map(|i| (0..models.len()).map(|k| at(hi, i, k).1.clone()).collect()).collect(),
        );
    }
    Ok(report)
}

pub fn run_nowcast(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let rep = nowcast(cfg)?;
    let mut em = Emitter::new(&cfg.output.dir, &cfg.output.formats)?;
    let mut manifest = Manifest::default();
    let model_idx = |name: &str| rep.models.iter().position(|m| m.name == name);
    let pool_models = |name: &str| -> Vec<usize> {
        // every base model a pool can put weight on
        fn walk(defs: &[PoolDef], p: usize, out: &mut Vec<usize>) {
            for m in &defs[p].members {
                match *m {
                    Member::Model(k) => out.push(k),
                    Member::Pool(q) => walk(defs, q, out),
                }
            }
        }
        let mut out = Vec::new();
        if let Some(p) = rep.pools.iter().position(|d| d.name == name) {
            walk(&rep.pools, p, &mut out);
        }
        out.sort_unstable();
        out.dedup();
        out
    };
    let seeds_for = |h: usize, targets: &[usize], name: &str| -> Vec<u64> {
        let ks = match model_idx(name) {
            Some(k) => vec![k],
            None => pool_models(name),
        };
        let mut s = Vec::new();
        for &i in targets {
            for &k in &ks {
                s.extend_from_slice(&rep.chain_seeds[h][i][k]);
            }
        }
        s
    };
    let h_index = |label: &str| rep.horizons.iter().position(|h| h == label).unwrap();
    let all_targets: Vec<usize> = (0..rep.targets.len()).collect();

    let mut t = Table::new(&["horizon", "name", "kind", "n", "rmsfe", "logs", "crps", "rel_rmsfe", "rel_logs", "rel_crps"]);
    for (r, s) in rep.scores.iter().enumerate() {
        t.push(vec![
            s.horizon.clone(),
            s.name.clone(),
            s.kind.clone(),
            s.n.to_string(),
            num(s.rmsfe),
            num(s.logs),
            num(s.crps),
            opt(s.rel_rmsfe),
            opt(s.rel_logs),
            opt(s.rel_crps),
        ]);
        let seeds = seeds_for(h_index(&s.horizon), &all_targets, &s.name);
        manifest.record("nowcast_scores.csv", r, &format!("horizon {}, all targets", s.horizon), &seeds);
    }
    em.csv("nowcast_scores.csv", &t)?;

    // one row per model or pool, one (RMSFE, LogS, CRPS) panel per horizon
    let mut header = vec!["name".to_string(), "kind".to_string()];
    for h in &rep.horizons {
        for m in ["rel_rmsfe", "rel_logs", "rel_crps"] {
            header.push(format!("{m}@{h}"));
        }
    }
    let mut wide = Table { header, rows: Vec::new() };
    let mut names: Vec<(String, String)> = Vec::new();
    for s in &rep.scores {
        if s.kind != "benchmark" && !names.iter().any(|(n, _)| *n == s.name) {
            names.push((s.name.clone(), s.kind.clone()));
        }
    }
    for (r, (name, kind)) in names.iter().enumerate() {
        let mut row = vec![name.clone(), kind.clone()];
        let mut seeds = Vec::new();
        for (hi, h) in rep.horizons.iter().enumerate() {
            let s = rep.scores.iter().find(|s| s.horizon == *h && s.name == *name);
            row.push(opt(s.and_then(|s| s.rel_rmsfe)));
            row.push(opt(s.and_then(|s| s.rel_logs)));
            row.push(opt(s.and_then(|s| s.rel_crps)));
            seeds.extend(seeds_for(hi, &all_targets, name));
        }
        wide.push(row);
        manifest.record("nowcast_table.csv", r, "all horizons, all targets", &seeds);
    }
    em.csv("nowcast_table.csv", &wide)?;

    let mut t = Table::new(&[
        "horizon", "target", "name", "kind", "mean", "variance", "q05", "q16", "q50", "q84", "q95", "outcome", "logs",
        "crps", "scored",
    ]);
    for (r, f) in rep.forecasts.iter().enumerate() {
        t.push(vec![
            f.horizon.clone(),
            f.target.clone(),
            f.name.clone(),
            f.kind.clone(),
            num(f.mean),
            num(f.variance),
            num(f.q05),
            num(f.q16),
            num(f.q50),
            num(f.q84),
            num(f.q95),
            opt(f.outcome),
            opt(f.logs),
            opt(f.crps),
            f.scored.to_string(),
        ]);
        let i = rep.targets.iter().position(|x| *x == f.target).unwrap();
        let seeds = seeds_for(h_index(&f.horizon), &[i], &f.name);
        manifest.record("nowcast_forecasts.csv", r, &format!("horizon {}, target {}", f.horizon, f.target), &seeds);
    }
    em.csv("nowcast_forecasts.csv", &t)?;

    if !rep.weights.is_empty() {
        let mut t = Table::new(&["horizon", "target", "pool", "member", "weight"]);
        for w in &rep.weights {
            t.push(vec![w.horizon.clone(), w.target.clone(), w.pool.clone(), w.member.clone(), num(w.weight)]);
        }
        em.csv("nowcast_weights.csv", &t)?;
    }
    em.json("nowcast.json", &rep)?;

    // fan chart of the last pool (or the first model) per horizon
    let headline = rep.pools.last().map(|p| p.name.clone()).unwrap_or_else(|| rep.models[0].name.clone());
    for (hi, h) in rep.horizons.iter().enumerate() {
        let rows: Vec<&ForecastRow> = rep.forecasts.iter().filter(|f| f.horizon == *h && f.name == headline).collect();
        em.svg(&format!("nowcast_fan_h{hi}.svg"), || {
            let labels: Vec<String> = rows.iter().map(|f| f.target.clone()).collect();
            let col = |g: fn(&ForecastRow) -> f64| rows.iter().map(|f| g(f)).collect::<Vec<f64>>();
            let bands = vec![(col(|f| f.q05), col(|f| f.q95)), (col(|f| f.q16), col(|f| f.q84))];
            let outcome = rows.iter().map(|f| f.outcome.unwrap_or(f64::NAN)).collect::<Vec<_>>();
            fan_chart(&format!("{headline}, horizon {h}"), &labels, &bands, &col(|f| f.q50), &outcome)
        })?;
    }
    em.manifest(&manifest)?;
    Ok(em.written)
}
