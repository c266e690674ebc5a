use bsgs::cli::{self, Format, Mode, Overrides, RunConfig};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bsgs", version, about = "Bayesian sparse group selection for grouped and MIDAS regressions")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (overrides BSGS_THREADS and the config).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides BSGS_OUT and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output formats; repeat or comma-separate.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Monte Carlo study on the grouped-regression design.
    SimulateGrouped,
    /// Monte Carlo study on the mixed-frequency design.
    SimulateMidas,
    /// Fit one model to a dataset.
    Estimate,
    /// Select slab scales by DIC on a grid.
    Tune,
    /// Rolling-window nowcasts with prediction pools.
    Nowcast,
}

impl From<Verb> for Mode {
    fn from(v: Verb) -> Self {
        match v {
            Verb::SimulateGrouped => Mode::SimulateGrouped,
            Verb::SimulateMidas => Mode::SimulateMidas,
            Verb::Estimate => Mode::Estimate,
            Verb::Tune => Mode::Tune,
            Verb::Nowcast => Mode::Nowcast,
        }
    }
}

fn run(args: Cli) -> bsgs::Result<Vec<PathBuf>> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = Overrides {
        seed: args.seed,
        threads: args.threads,
        out: args.out,
        formats: (!args.format.is_empty()).then_some(args.format),
    };
    cfg.apply(&flags, |k| std::env::var(k).ok())?;
    if let Some(n) = cfg.threads {
        bsgs::par::set_threads(n).map_err(bsgs::Error::Config)?;
    }
    cli::run(args.verb.into(), &cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
