//! Monte Carlo studies over the grouped and MIDAS generators.

use super::config::{Format, RunConfig};
use super::plot::{line_chart, Line};
use super::report::{num, opt, Emitter, Manifest, Table};
use super::{fit, thin_density};
use crate::design::{BasisMatrix, GroupedDesign};
use crate::dgp::{GroupedDgp, MidasDgp};
use crate::error::{Error, Result};
use crate::eval::{estimation_metrics, forecast_scores, selection_metrics, Ar1Fit};
use crate::par::map_indexed;
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::sampler::posterior_predictive;
use crate::tuning::select_c;
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Outcome of one replication. Failed replications keep only `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub replication: usize,
    pub noise_seed: u64,
    pub chain_seeds: Vec<u64>,
    pub error: Option<String>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    /// Σ_k (θ̂_k − θ⁰_k)² of the posterior median over the scored coefficients.
    pub squared_error: Option<f64>,
    pub tpr_group: Option<f64>,
    pub tpr_var: Option<f64>,
    pub mcc_group: Option<f64>,
    pub mcc_var: Option<f64>,
    pub rmsfe: Option<f64>,
    pub avg_logs: Option<f64>,
    pub avg_crps: Option<f64>,
    pub rel_rmsfe: Option<f64>,
    pub rel_logs: Option<f64>,
    pub rel_crps: Option<f64>,
    pub nsr_realized: Option<f64>,
    pub mean_tau_acceptance: Option<f64>,
    /// Posterior-median coefficients that enter MSE/VAR/BIAS².
    pub estimate: Vec<f64>,
    pub group_inclusion: Vec<f64>,
}

impl RepRecord {
    fn failed(replication: usize, noise_seed: u64, chain_seeds: Vec<u64>, e: &Error) -> Self {
        Self {
            replication,
            noise_seed,
            chain_seeds,
            error: Some(e.to_string()),
            c0: None,
            c1: None,
            squared_error: None,
            tpr_group: None,
            tpr_var: None,
            mcc_group: None,
            mcc_var: None,
            rmsfe: None,
            avg_logs: None,
            avg_crps: None,
            rel_rmsfe: None,
            rel_logs: None,
            rel_crps: None,
            nsr_realized: None,
            mean_tau_acceptance: None,
            estimate: vec![],
            group_inclusion: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub value: Option<f64>,
    /// Bootstrap standard error over replications; absent with fewer than two.
    pub se: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub dgp: String,
    pub seed: u64,
    pub replications: usize,
    pub failed: usize,
    pub sigma_eps: f64,
    pub nsr_convention: String,
    pub truth: Vec<f64>,
    pub true_groups: Vec<usize>,
    pub summary: Vec<SummaryRow>,
    pub records: Vec<RepRecord>,
    /// MIDAS only: true lag weights and the average estimated shape.
    pub true_weights: Option<Vec<f64>>,
    pub mean_weights: Option<Vec<f64>>,
}

/// How raw coefficients map to the scored vector.
#[derive(Clone)]
enum Scored {
    /// The first `k` columns (exogenous regressors).
    Columns(usize),
    /// Implied lag weights Φ'θ_j of each of `n` series sharing `basis`.
    LagWeights { basis: BasisMatrix, n: usize },
}

impl Scored {
    fn map(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            Scored::Columns(k) => theta[..*k].to_vec(),
            Scored::LagWeights { basis, n } => {
                (0..*n).flat_map(|j| basis.weight_function(&theta[j * basis.g..(j + 1) * basis.g])).collect()
            }
        }
    }
}

struct RepData {
    train: GroupedDesign,
    test: GroupedDesign,
    n_exog_groups: usize,
    group_size: usize,
    true_groups: Vec<usize>,
    /// Exogenous columns that are truly active; `None` when not defined.
    true_vars: Option<Vec<usize>>,
    truth: Vec<f64>,
    scored: Scored,
    nsr_realized: f64,
}

struct RepOutcome {
    record: RepRecord,
    data: Option<RepData>,
}

fn run_replication(cfg: &RunConfig, rep: usize, noise_seed: u64, make: &(dyn Fn(u64) -> Result<RepData> + Sync)) -> RepOutcome {
    let chain_seeds: Vec<u64> = (0..cfg.mcmc.chains).map(|i| cfg.mcmc.chain(cfg.seed, rep as u64, i).seed).collect();
    let data = match make(rep as u64) {
        Ok(d) => d,
        Err(e) => return RepOutcome { record: RepRecord::failed(rep, noise_seed, chain_seeds, &e), data: None },
    };
    match score_replication(cfg, rep, noise_seed, &data) {
        Ok(record) => RepOutcome { record, data: Some(data) },
        Err(e) => RepOutcome { record: RepRecord::failed(rep, noise_seed, chain_seeds, &e), data: Some(data) },
    }
}

fn score_replication(cfg: &RunConfig, rep: usize, noise_seed: u64, d: &RepData) -> Result<RepRecord> {
    let train = &d.train;
    let n = train.n_groups();
    let opts = cfg.model.options(cfg.model.volatility);
    let mut prior = cfg.prior.build(n, d.n_exog_groups, d.group_size, train.n_obs())?;
    if cfg.study.tune {
        let work = if cfg.model.standardize { train.scaled() } else { train.clone() };
        let bounds = cfg.prior.bounds(d.n_exog_groups, d.group_size)?;
        let grid = cfg.tune.grid(bounds, derive_seed(cfg.seed, stream::GRID, rep as u64))?;
        let mcmc = cfg.tune.mcmc(derive_seed(cfg.mcmc.seed.unwrap_or(cfg.seed), stream::TUNING, rep as u64));
        let sel = select_c(&work, &prior, &grid, &mcmc, &opts)?;
        prior = prior.with_c(sel.c0, sel.c1);
    }
    let f = fit(train, cfg.model.standardize, &prior, &cfg.mcmc, cfg.seed, rep as u64, &opts, false)?;
    let theta = f.theta_raw(&f.chain.theta_median());
    let estimate = d.scored.map(&theta);
    let squared_error = estimate.iter().zip(&d.truth).map(|(a, b)| (a - b) * (a - b)).sum();

    let k = d.n_exog_groups;
    let exog_cols = train.partition.range(k - 1).end;
    let group_incl = &f.chain.inclusion_group[..k];
    let var_incl = &f.chain.inclusion_within[..exog_cols];
    let sel = selection_metrics(
        group_incl,
        var_incl,
        cfg.study.threshold,
        &d.true_groups,
        d.true_vars.as_deref().unwrap_or(&[]),
    )?;
    let (tpr_var, mcc_var) = match d.true_vars {
        Some(_) => (sel.tpr_var, Some(sel.mcc_var)),
        None => (None, None),
    };

    let test = &d.test;
    let mut densities = Vec::with_capacity(test.n_obs());
    let mut bench = Vec::with_capacity(test.n_obs());
    let ar1 = Ar1Fit::fit(&train.y)?;
    for r in 0..test.n_obs() {
        let z = f.scale_row(&test.row(r));
        densities.push(thin_density(posterior_predictive(&f.chain, &z)?, cfg.study.max_components)?);
        let y_prev = if r == 0 { *train.y.last().unwrap() } else { test.y[r - 1] };
        bench.push(ar1.one_step(y_prev));
    }
    let scores = forecast_scores(&densities, &test.y, Some(&bench))?;
    let acc = &f.chain.mcmc_meta.tau_acceptance;
    Ok(RepRecord {
        replication: rep,
        noise_seed,
        chain_seeds: f.chain_seeds.clone(),
        error: None,
        c0: Some(prior.c0),
        c1: Some(prior.c1),
        squared_error: Some(squared_error),
        tpr_group: sel.tpr_group,
        tpr_var,
        mcc_group: Some(sel.mcc_group),
        mcc_var,
        rmsfe: Some(scores.rmsfe),
        avg_logs: Some(scores.avg_logs),
        avg_crps: Some(scores.avg_crps),
        rel_rmsfe: scores.rel_rmsfe,
        rel_logs: scores.rel_logs,
        rel_crps: scores.rel_crps,
        nsr_realized: Some(d.nsr_realized),
        mean_tau_acceptance: (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64),
        estimate,
        group_inclusion: group_incl.to_vec(),
    })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Standard deviation of the resampled statistic over `b` bootstrap draws.
fn bootstrap_se(n: usize, b: usize, seed: u64, stat: impl Fn(&[usize]) -> f64) -> Option<f64> {
    if n < 2 || b < 2 {
        return None;
    }
    let mut rng = rng_from_seed(seed);
    let mut draws = Vec::with_capacity(b);
    let mut idx = vec![0usize; n];
    for _ in 0..b {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..n);
        }
        draws.push(stat(&idx));
    }
    let m = draws.iter().sum::<f64>() / b as f64;
    Some((draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (b - 1) as f64).sqrt())
}

/// Per-cell summary: estimation metrics from the stacked estimates, means of
/// the per-replication scores (TPR/MCC in percent), bootstrap standard errors.
fn summarize(cfg: &RunConfig, records: &[RepRecord], truth: &[f64]) -> Result<Vec<SummaryRow>> {
    let ok: Vec<&RepRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let b = cfg.study.bootstrap;
    let seed = |k: u64| derive_seed(cfg.seed, stream::BOOTSTRAP, k);
    let mut rows = Vec::new();

    let est = DMatrix::from_fn(ok.len(), truth.len(), |r, c| ok[r].estimate[c]);
    let est_stat = |idx: &[usize], which: usize| -> f64 {
        let sub = DMatrix::from_fn(idx.len(), truth.len(), |r, c| est[(idx[r], c)]);
        let m = estimation_metrics(&sub, truth).expect("shapes checked");
        [m.mse, m.var, m.bias2][which]
    };
    let full = if ok.is_empty() { None } else { Some(estimation_metrics(&est, truth)?) };
    for (k, name) in ["mse", "var", "bias2"].iter().enumerate() {
        let value = full.map(|m| [m.mse, m.var, m.bias2][k]);
        let se = bootstrap_se(ok.len(), b, seed(k as u64), |idx| est_stat(idx, k));
        rows.push(SummaryRow { metric: name.to_string(), value, se, n: ok.len() });
    }

    type Get = fn(&RepRecord) -> Option<f64>;
    let per_rep: [(&str, Get, f64); 11] = [
        ("tpr_n", |r| r.tpr_group, 1.0),
        ("tpr_g", |r| r.tpr_var, 1.0),
        ("mcc_n", |r| r.mcc_group, 100.0),
        ("mcc_g", |r| r.mcc_var, 100.0),
        ("rmsfe", |r| r.rmsfe, 1.0),
        ("logs", |r| r.avg_logs, 1.0),
        ("crps", |r| r.avg_crps, 1.0),
        ("rel_rmsfe", |r| r.rel_rmsfe, 1.0),
        ("rel_logs", |r| r.rel_logs, 1.0),
        ("rel_crps", |r| r.rel_crps, 1.0),
        ("nsr_realized", |r| r.nsr_realized, 1.0),
    ];
    for (k, (name, get, scale)) in per_rep.iter().enumerate() {
        let vals: Vec<f64> = ok.iter().filter_map(|r| get(r)).map(|v| v * scale).collect();
        let se = bootstrap_se(vals.len(), b, seed(3 + k as u64), |idx| {
            idx.iter().map(|&i| vals[i]).sum::<f64>() / idx.len() as f64
        });
        rows.push(SummaryRow { metric: name.to_string(), value: mean(&vals), se, n: vals.len() });
    }
    Ok(rows)
}

fn summary_table(rows: &[SummaryRow]) -> Table {
    let mut t = Table::new(&["metric", "value", "se", "n"]);
    for r in rows {
        t.push(vec![r.metric.clone(), opt(r.value), opt(r.se), r.n.to_string()]);
    }
    t
}

fn replications_table(records: &[RepRecord]) -> Table {
    let mut t = Table::new(&[
        "replication",
        "noise_seed",
        "chain_seeds",
        "status",
        "c0",
        "c1",
        "squared_error",
        "tpr_group",
        "tpr_var",
        "mcc_group",
        "mcc_var",
        "rmsfe",
        "logs",
        "crps",
        "rel_rmsfe",
        "rel_logs",
        "rel_crps",
        "nsr_realized",
        "mean_tau_acceptance",
    ]);
    for r in records {
        let seeds: Vec<String> = r.chain_seeds.iter().map(|s| s.to_string()).collect();
        t.push(vec![
            r.replication.to_string(),
            r.noise_seed.to_string(),
            seeds.join(";"),
            r.error.clone().unwrap_or_else(|| "ok".into()),
            opt(r.c0),
            opt(r.c1),
            opt(r.squared_error),
            opt(r.tpr_group),
            opt(r.tpr_var),
            opt(r.mcc_group),
            opt(r.mcc_var),
            opt(r.rmsfe),
            opt(r.avg_logs),
            opt(r.avg_crps),
            opt(r.rel_rmsfe),
            opt(r.rel_logs),
            opt(r.rel_crps),
            opt(r.nsr_realized),
            opt(r.mean_tau_acceptance),
        ]);
    }
    t
}

/// Design in the CSV schema read by `estimate`: `y` then `group.member` columns.
pub fn design_table(d: &GroupedDesign) -> Table {
    let mut header = vec!["y".to_string()];
    for j in 0..d.n_groups() {
        let label = &d.group_labels[j];
        if d.partition.size(j) == 1 {
            header.push(label.clone());
        } else {
            header.extend((1..=d.partition.size(j)).map(|i| format!("{label}.{i}")));
        }
    }
    let mut t = Table { header, rows: Vec::new() };
    for r in 0..d.n_obs() {
        let mut row = vec![num(d.y[r])];
        row.extend(d.row(r).into_iter().map(num));
        t.push(row);
    }
    t
}

/// A finished study; keeps the simulated data for optional export.
pub struct StudyRun {
    pub report: StudyReport,
    data: Vec<Option<RepData>>,
}

fn run_study(
    cfg: &RunConfig,
    dgp: &str,
    dgp_seed: u64,
    sigma_eps: f64,
    truth: Vec<f64>,
    true_groups: Vec<usize>,
    make: &(dyn Fn(u64) -> Result<RepData> + Sync),
) -> Result<StudyRun> {
    let outcomes = map_indexed(cfg.study.replications, |rep| {
        run_replication(cfg, rep, derive_seed(dgp_seed, stream::NOISE, rep as u64), make)
    });
    let (records, data): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.record, o.data)).unzip();
    let summary = summarize(cfg, &records, &truth)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let report = StudyReport {
        dgp: dgp.into(),
        seed: cfg.seed,
        replications: records.len(),
        failed,
        sigma_eps,
        nsr_convention: crate::dgp::NSR_CONVENTION.into(),
        truth,
        true_groups,
        summary,
        records,
        true_weights: None,
        mean_weights: None,
    };
    Ok(StudyRun { report, data })
}

fn emit(cfg: &RunConfig, run: &StudyRun, em: &mut Emitter) -> Result<()> {
    let r = &run.report;
    let ok: Vec<String> = r.records.iter().filter(|x| x.error.is_none()).map(|x| x.replication.to_string()).collect();
    let all_seeds: Vec<u64> = r.records.iter().filter(|x| x.error.is_none()).flat_map(|x| x.chain_seeds.clone()).collect();
    let mut manifest = Manifest::default();
    for (i, _) in r.summary.iter().enumerate() {
        manifest.record("study_summary.csv", i, &format!("replications {}", ok.join(";")), &all_seeds);
    }
    for (i, rec) in r.records.iter().enumerate() {
        manifest.record("study_replications.csv", i, &format!("replication {}", rec.replication), &rec.chain_seeds);
    }
    em.csv("study_summary.csv", &summary_table(&r.summary))?;
    em.csv("study_replications.csv", &replications_table(&r.records))?;
    em.json("study.json", r)?;
    if cfg.study.export_data && em.wants(Format::Csv) {
        for (rep, d) in run.data.iter().enumerate() {
            if let Some(d) = d {
                for (part, design) in [("train", &d.train), ("test", &d.test)] {
                    let name = format!("data/rep{rep:04}_{part}.csv");
                    em.csv(&name, &design_table(design))?;
                    manifest.record(&name, 0, &format!("replication {rep}"), &[]);
                }
            }
        }
    }
    em.manifest(&manifest)?;
    Ok(())
}

pub fn run_grouped(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let run = grouped_study(cfg)?;
    let report = &run.report;
    let mut em = Emitter::new(&cfg.output.dir, &cfg.output.formats)?;
    emit(cfg, &run, &mut em)?;
    em.svg("inclusion.svg", || {
        let ok: Vec<&RepRecord> = report.records.iter().filter(|r| r.error.is_none()).collect();
        let k = ok.first().map(|r| r.group_inclusion.len()).unwrap_or(0);
        let avg: Vec<f64> = (0..k).map(|j| ok.iter().map(|r| r.group_inclusion[j]).sum::<f64>() / ok.len() as f64).collect();
        let truth: Vec<f64> = (0..k).map(|j| if report.true_groups.contains(&j) { 1.0 } else { 0.0 }).collect();
        line_chart(
            "Average group inclusion frequency",
            "group",
            &[
                Line { label: "posterior inclusion".into(), y: avg, dashed: false },
                Line { label: "true support".into(), y: truth, dashed: true },
            ],
        )
    })?;
    Ok(em.written)
}

/// Run the grouped study without writing files.
pub fn grouped_study(cfg: &RunConfig) -> Result<StudyRun> {
    let spec = cfg.grouped.clone().ok_or_else(|| Error::Config("missing [grouped] block".into()))?;
    let dgp = GroupedDgp::new(spec.clone())?;
    let true_vars = dgp.active_vars.clone();
    let truth = dgp.theta.clone();
    let make = |rep: u64| -> Result<RepData> {
        let s = dgp.simulate(rep)?;
        Ok(RepData {
            train: s.train,
            test: s.test,
            n_exog_groups: spec.n,
            group_size: spec.g,
            true_groups: s.truth.active_groups.clone(),
            true_vars: Some(true_vars.clone()),
            truth: truth.clone(),
            scored: Scored::Columns(spec.width()),
            nsr_realized: s.truth.nsr_realized,
        })
    };
    run_study(cfg, "grouped", spec.seed, dgp.sigma_eps, truth.clone(), dgp.active_groups.clone(), &make)
}

pub fn run_midas(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let run = midas_study(cfg)?;
    let report = &run.report;
    let mut em = Emitter::new(&cfg.output.dir, &cfg.output.formats)?;
    emit(cfg, &run, &mut em)?;
    if let (Some(tw), Some(mw)) = (&report.true_weights, &report.mean_weights) {
        let mut t = Table::new(&["lag", "true_weight", "mean_estimated_weight"]);
        for (u, (a, b)) in tw.iter().zip(mw).enumerate() {
            t.push(vec![u.to_string(), num(*a), num(*b)]);
        }
        em.csv("study_weights.csv", &t)?;
        let spec = cfg.midas.as_ref().unwrap();
        let (a, b, c) = spec.weight_params;
        em.svg("midas_weights.svg", || {
            line_chart(
                &format!("MIDAS lag weights, beta ({a}, {b}, {c})"),
                "high-frequency lag",
                &[
                    Line { label: "true".into(), y: tw.clone(), dashed: false },
                    Line { label: format!("estimated ({})", spec.basis.name()), y: mw.clone(), dashed: true },
                ],
            )
        })?;
    }
    Ok(em.written)
}

/// Run the MIDAS study without writing files.
pub fn midas_study(cfg: &RunConfig) -> Result<StudyRun> {
    let spec = cfg.midas.clone().ok_or_else(|| Error::Config("missing [midas] block".into()))?;
    let dgp = MidasDgp::new(spec.clone())?;
    let lags = spec.p_x + 1;
    let mut truth = vec![0.0; spec.n * lags];
    for &j in &dgp.active_groups {
        truth[j * lags..(j + 1) * lags].copy_from_slice(&dgp.weights);
    }
    let scored = Scored::LagWeights { basis: dgp.basis.clone(), n: spec.n };
    let make = |rep: u64| -> Result<RepData> {
        let s = dgp.simulate(rep)?;
        Ok(RepData {
            train: s.train,
            test: s.test,
            n_exog_groups: spec.n,
            group_size: dgp.basis.g,
            true_groups: s.truth.active_groups.clone(),
            true_vars: None,
            truth: truth.clone(),
            scored: scored.clone(),
            nsr_realized: s.truth.nsr_realized,
        })
    };
    let mut run = run_study(cfg, "midas", spec.seed, dgp.sigma_eps, truth.clone(), dgp.active_groups.clone(), &make)?;
    let ok: Vec<&RepRecord> = run.report.records.iter().filter(|r| r.error.is_none()).collect();
    let mut mean_w = vec![0.0; lags];
    let mut count = 0.0;
    for r in &ok {
        for &j in &dgp.active_groups {
            for u in 0..lags {
                mean_w[u] += r.estimate[j * lags + u];
            }
            count += 1.0;
        }
    }
    run.report.true_weights = Some(dgp.weights.clone());
    run.report.mean_weights = (count > 0.0).then(|| mean_w.iter().map(|v| v / count).collect());
    Ok(run)
}
