//! `proteinoid`: generate ensembles, run trials, mine gates and build mappings.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proteinoid::electrode::InputPair;
use proteinoid::Error;

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "proteinoid", version, about = "Excitable microsphere ensemble simulator")]
struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `ensemble.rng_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the disc ensemble and its conductive mask.
    GenEnsemble,
    /// Run one trial, writing traces and snapshot frames.
    Simulate {
        /// Input pair as two bits, e.g. 01.
        #[arg(long)]
        input: InputPair,
    },
    /// Run the three input trials and count gates per electrode.
    MineGates,
    /// Build the k-bit mapping and analyse it.
    Map {
        /// Analyse a saved mapping table instead of simulating.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Detect spikes in saved trace files and report interval statistics.
    AnalyzeSpikes {
        #[arg(long, required = true)]
        traces: Vec<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::MappingTooLarge { .. } => 2,
        Error::BlowUp { .. } => 3,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> proteinoid::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.ensemble.rng_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.run.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> proteinoid::Result<()> {
    let cfg = load_config(&cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be >= 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::GenEnsemble => commands::gen_ensemble(&cfg),
        Command::Simulate { input } => commands::simulate(&cfg, *input),
        Command::MineGates => commands::mine_gates(&cfg),
        Command::Map { replay } => commands::map(&cfg, replay.as_deref()),
        Command::AnalyzeSpikes { traces } => commands::analyze_spikes(&cfg, traces),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
