//! TOML run configuration.

use crate::design::BasisFamily;
use crate::dgp::{GroupedDgpSpec, MidasDgpSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::sampler::{McmcConfig, ModelOptions, PriorHyperparams};
use crate::tuning::{c_lower_bounds, default_hyperparams, default_s0gr_guess, GridSpec};
use crate::volatility::{SvOptions, Volatility};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const ENV_OUT: &str = "BSGS_OUT";
pub const ENV_THREADS: &str = "BSGS_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(Error::Config(format!("unknown output format `{other}` (csv, json, svg)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulateGrouped,
    SimulateMidas,
    Estimate,
    Tune,
    Nowcast,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::SimulateGrouped => "simulate-grouped",
            Self::SimulateMidas => "simulate-midas",
            Self::Estimate => "estimate",
            Self::Tune => "tune",
            Self::Nowcast => "nowcast",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub output: OutputBlock,
    pub mcmc: McmcBlock,
    pub prior: PriorBlock,
    pub model: ModelBlock,
    pub tune: TuneBlock,
    pub study: StudyBlock,
    pub grouped: Option<GroupedDgpSpec>,
    pub midas: Option<MidasDgpSpec>,
    pub data: Option<DataBlock>,
    pub nowcast: Option<NowcastBlock>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: None,
            output: OutputBlock::default(),
            mcmc: McmcBlock::default(),
            prior: PriorBlock::default(),
            model: ModelBlock::default(),
            tune: TuneBlock::default(),
            study: StudyBlock::default(),
            grouped: None,
            midas: None,
            data: None,
            nowcast: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcBlock {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    /// Base seed for the chains; defaults to the run seed.
    pub seed: Option<u64>,
}

impl Default for McmcBlock {
    fn default() -> Self {
        Self { sweeps: 60_000, burn_in: 10_000, thin: 5, chains: 1, seed: None }
    }
}

impl McmcBlock {
    /// Configuration of chain `idx` under task `task` (replication, origin...).
    pub fn chain(&self, run_seed: u64, task: u64, idx: usize) -> McmcConfig {
        let base = self.seed.unwrap_or(run_seed);
        let seed = derive_seed(derive_seed(base, stream::CHAIN, task), stream::CHAIN, idx as u64);
        McmcConfig { sweeps: self.sweeps, burn_in: self.burn_in, thin: self.thin, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::Config("mcmc.chains must be at least 1".into()));
        }
        McmcConfig { sweeps: self.sweeps, burn_in: self.burn_in, thin: self.thin, seed: 0 }.validate()
    }
}

/// Mixture-weight prior. Missing c₀/c₁ fall back to the lower bounds
/// computed from (u₀, u₁, k₀, k₁) and a guess of the active group count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorBlock {
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub u0: f64,
    pub u1: f64,
    pub k0: f64,
    pub k1: f64,
    pub s0gr_guess: Option<usize>,
    pub a0: Option<f64>,
    pub e0: Option<f64>,
    pub group_specific_pi1: bool,
    pub hierarchical_a1: bool,
}

impl Default for PriorBlock {
    fn default() -> Self {
        Self {
            c0: None,
            c1: None,
            u0: 1.0,
            u1: 1.0,
            k0: 1.0,
            k1: 1.0,
            s0gr_guess: None,
            a0: None,
            e0: None,
            group_specific_pi1: true,
            hierarchical_a1: true,
        }
    }
}

impl PriorBlock {
    /// Hyperparameters for `n` groups and `t` rows. The lower bounds on
    /// (c₀, c₁) count only the `n_penalized` selectable groups of size `g`.
    pub fn build(&self, n: usize, n_penalized: usize, g: usize, t: usize) -> Result<PriorHyperparams> {
        let mut p = default_hyperparams(n, t, g)?;
        if let Some(a0) = self.a0 {
            p.a0 = a0;
        }
        if let Some(e0) = self.e0 {
            p.e0 = e0;
            p.e1 = e0 / (p.a0 - 1.0);
        }
        p.group_specific_pi1 = self.group_specific_pi1;
        p.hierarchical_a1 = self.hierarchical_a1;
        let (c0, c1) = match (self.c0, self.c1) {
            (Some(c0), Some(c1)) => (c0, c1),
            (c0, c1) => {
                let (b0, b1) = self.bounds(n_penalized, g)?;
                (c0.unwrap_or(b0), c1.unwrap_or(b1))
            }
        };
        let p = p.with_c(c0, c1);
        p.validate(n)?;
        Ok(p)
    }

    /// Lower bounds on (c₀, c₁). Small models (one or two selectable groups,
    /// e.g. a two-series category) are bounded as if N = 2, with u₀ lifted
    /// just above log 2 / log N when the configured value is infeasible.
    pub fn bounds(&self, n: usize, g: usize) -> Result<(f64, f64)> {
        let n = n.max(2);
        let s0 = self.s0gr_guess.unwrap_or_else(|| default_s0gr_guess(n)).clamp(1, n);
        let u0_min = 2f64.ln() / (n as f64).ln();
        let u0 = if self.u0 > u0_min { self.u0 } else { 1.05 * u0_min };
        c_lower_bounds(n, g, s0, u0, self.u1, self.k0, self.k1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    pub volatility: Volatility,
    pub intercept: bool,
    /// Divide every column by its training standard deviation.
    pub standardize: bool,
    pub sv: SvOptions,
    pub basis: BasisFamily,
    pub degree: usize,
    pub p_x: usize,
    pub p_y: usize,
    /// Horizon as a fraction of the low-frequency period, e.g. "1/3".
    pub h: String,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            volatility: Volatility::Homoskedastic,
            intercept: true,
            standardize: true,
            sv: SvOptions::default(),
            basis: BasisFamily::Legendre,
            degree: 3,
            p_x: 11,
            p_y: 1,
            h: "0".into(),
        }
    }
}

impl ModelBlock {
    pub fn options(&self, volatility: Volatility) -> ModelOptions {
        ModelOptions { volatility, sv: self.sv.clone(), intercept: self.intercept }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneBlock {
    pub c0_range: Option<(f64, f64)>,
    pub c1_range: Option<(f64, f64)>,
    pub points: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Reject grids reaching below the prior lower bounds.
    pub enforce_bounds: bool,
}

impl Default for TuneBlock {
    fn default() -> Self {
        Self {
            c0_range: None,
            c1_range: None,
            points: 20,
            sweeps: 10_000,
            burn_in: 2_000,
            thin: 1,
            enforce_bounds: true,
        }
    }
}

impl TuneBlock {
    /// Grid over (c₀, c₁); unspecified ranges span one to ten times the bounds.
    pub fn grid(&self, bounds: (f64, f64), seed: u64) -> Result<GridSpec> {
        let spec = GridSpec {
            c0_range: self.c0_range.unwrap_or((bounds.0, 10.0 * bounds.0)),
            c1_range: self.c1_range.unwrap_or((bounds.1, 10.0 * bounds.1)),
            points: self.points,
            seed: derive_seed(seed, stream::GRID, 0),
        };
        spec.validate(self.enforce_bounds.then_some(bounds))?;
        Ok(spec)
    }

    pub fn mcmc(&self, seed: u64) -> McmcConfig {
        McmcConfig { sweeps: self.sweeps, burn_in: self.burn_in, thin: self.thin, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyBlock {
    pub replications: usize,
    /// Select (c₀, c₁) by DIC inside every replication.
    pub tune: bool,
    pub bootstrap: usize,
    pub threshold: f64,
    /// Write each replication's simulated data as CSV.
    pub export_data: bool,
    /// Thin predictive mixtures to at most this many components before scoring.
    pub max_components: usize,
}

impl Default for StudyBlock {
    fn default() -> Self {
        Self { replications: 10, tune: false, bootstrap: 1000, threshold: 0.5, export_data: false, max_components: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    #[default]
    Monthly,
    Quarterly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Level,
    Diff,
    Log,
    LogDiff,
    /// Annualized growth, 400·Δlog quarterly or 1200·Δlog monthly.
    Growth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSpec {
    pub frequency: Frequency,
    pub transform: Transform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    /// Dated mixed-frequency panel.
    #[default]
    Panel,
    /// Ready-made design: column `y` plus regressors named `group.member`.
    Design,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataBlock {
    pub path: PathBuf,
    pub kind: DataKind,
    pub date_column: String,
    /// Low-frequency target series (panel data).
    pub target: String,
    /// Regressors to use; all non-target series when empty.
    pub include: Vec<String>,
    /// Per-series frequency and transform; unlisted series are monthly levels.
    pub series: BTreeMap<String, SeriesSpec>,
    /// Named group map: group name to member columns (design) or series (panel).
    pub groups: BTreeMap<String, Vec<String>>,
    /// First and last quarter of the estimation sample, e.g. "1990Q1".
    pub start: Option<String>,
    pub end: Option<String>,
}

impl Default for DataBlock {
    fn default() -> Self {
        Self {
            path: PathBuf::new(),
            kind: DataKind::Panel,
            date_column: "date".into(),
            target: "y".into(),
            include: vec![],
            series: BTreeMap::new(),
            groups: BTreeMap::new(),
            start: None,
            end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NowcastBlock {
    /// Rolling window length in quarters.
    pub window: usize,
    /// First and last forecast target quarter, e.g. "2010Q1".
    pub first_target: String,
    pub last_target: Option<String>,
    pub horizons: Vec<String>,
    pub bases: Vec<BasisFamily>,
    pub volatilities: Vec<Volatility>,
    /// Include models estimated on all series.
    pub whole: bool,
    /// Include one model per category of `data.groups`.
    pub categories: bool,
    pub pools: bool,
    /// Target quarters left out of scoring, e.g. ["2020Q1"].
    pub exclude: Vec<String>,
    /// Thin each predictive mixture to at most this many components.
    pub max_components: usize,
}

impl Default for NowcastBlock {
    fn default() -> Self {
        Self {
            window: 132,
            first_target: String::new(),
            last_target: None,
            horizons: vec!["0".into(), "1/3".into(), "2/3".into()],
            bases: vec![BasisFamily::Legendre, BasisFamily::RestrictedAlmon],
            volatilities: Volatility::ALL.to_vec(),
            whole: true,
            categories: true,
            pools: true,
            exclude: vec![],
            max_components: 500,
        }
    }
}

/// Parse "0", "1/3", "0.5" into a fraction of the low-frequency period.
pub fn parse_horizon(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse horizon `{s}`"));
    let h = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0.0 {
                return Err(bad());
            }
            a / b
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if !(h >= 0.0) || !h.is_finite() {
        return Err(bad());
    }
    Ok(h)
}

/// Command-line and environment overrides, applied flag over env over file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // relative data paths resolve against the config file
        if let (Some(data), Some(dir)) = (cfg.data.as_mut(), path.parent()) {
            if data.path.is_relative() && !data.path.as_os_str().is_empty() {
                data.path = dir.join(&data.path);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, flags: &Overrides, env: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(dir) = env(ENV_OUT).filter(|s| !s.is_empty()) {
            self.output.dir = PathBuf::from(dir);
        }
        if let Some(n) = env(ENV_THREADS).filter(|s| !s.is_empty()) {
            let n = n.parse().map_err(|_| Error::Config(format!("{ENV_THREADS} must be a positive integer, got `{n}`")))?;
            self.threads = Some(n);
        }
        if let Some(s) = flags.seed {
            self.seed = s;
        }
        if let Some(n) = flags.threads {
            self.threads = Some(n);
        }
        if let Some(d) = &flags.out {
            self.output.dir = d.clone();
        }
        if let Some(f) = &flags.formats {
            self.output.formats = f.clone();
        }
        self.output.formats.sort();
        self.output.formats.dedup();
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    /// Checks that do not need the data file.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("no output formats selected".into()));
        }
        self.mcmc.validate()?;
        let need = |present: bool, block: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("`{}` needs a [{block}] block", mode.name())))
            }
        };
        match mode {
            Mode::SimulateGrouped => {
                need(self.grouped.is_some(), "grouped")?;
                self.grouped.as_ref().unwrap().validate()?;
            }
            Mode::SimulateMidas => {
                need(self.midas.is_some(), "midas")?;
                self.midas.as_ref().unwrap().validate()?;
            }
            Mode::Estimate | Mode::Tune => need(self.data.is_some(), "data")?,
            Mode::Nowcast => {
                need(self.data.is_some(), "data")?;
                need(self.nowcast.is_some(), "nowcast")?;
                let nc = self.nowcast.as_ref().unwrap();
                if nc.bases.is_empty() || nc.volatilities.is_empty() || nc.horizons.is_empty() {
                    return Err(Error::Config("nowcast needs at least one basis, volatility and horizon".into()));
                }
                if !nc.whole && !nc.categories {
                    return Err(Error::Config("nowcast needs `whole` or `categories` enabled".into()));
                }
                if nc.categories && self.data.as_ref().unwrap().groups.is_empty() {
                    return Err(Error::Config("nowcast.categories needs a [data.groups] map".into()));
                }
                if nc.max_components == 0 {
                    return Err(Error::Config("nowcast.max_components must be positive".into()));
                }
                for h in &nc.horizons {
                    parse_horizon(h)?;
                }
            }
        }
        if matches!(mode, Mode::SimulateGrouped | Mode::SimulateMidas) {
            let s = &self.study;
            if s.replications == 0 {
                return Err(Error::Config("study.replications must be at least 1".into()));
            }
            if !(s.threshold > 0.0 && s.threshold < 1.0) {
                return Err(Error::Config("study.threshold must lie in (0, 1)".into()));
            }
            if s.max_components == 0 {
                return Err(Error::Config("study.max_components must be positive".into()));
            }
        }
        parse_horizon(&self.model.h)?;
        Ok(())
    }
}
