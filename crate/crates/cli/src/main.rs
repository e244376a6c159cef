mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// Persona-driven heuristic agents for a territory-conquest game.
#[derive(Parser, Debug)]
#[command(name = "peril", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct BackendArgs {
    /// Append every prompt and reply to this log (default: in the output directory).
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Answer from a previous audit log instead of the configured backend.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate each persona on the five features.
    Annotate {
        /// Persona corpus (JSONL); the bundled corpus if omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Pick the most diverse subset of rated personas.
    SelectPersonas {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Turn personas into heuristic profiles.
    Elicit {
        /// Personas to elicit (JSONL).
        #[arg(long)]
        personas: PathBuf,
        /// `dh` or `pi`.
        #[arg(long)]
        method: Option<peril::llm::Method>,
        /// Inventory file, or `starter` for the bundled one.
        #[arg(long)]
        inventory: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Play rated random-pairing rounds between profiles.
    Tournament {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        rounds: Option<u32>,
        #[arg(long)]
        runs: Option<u32>,
        /// `classic`, `tiny3`, or a map file.
        #[arg(long)]
        map: Option<String>,
    },
    /// Correlation, extremes and consistency reports.
    Analyze {
        #[arg(long)]
        ratings: PathBuf,
        /// One or more leaderboard files.
        #[arg(long = "leaderboard")]
        leaderboards: Vec<PathBuf>,
        #[arg(long)]
        dh_profiles: Option<PathBuf>,
        #[arg(long)]
        pi_profiles: Option<PathBuf>,
        /// Corpus for persona descriptions in the extremes table.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Replay one logged game with per-turn snapshots.
    ExportReplay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        game_id: String,
        #[arg(long)]
        profiles: PathBuf,
    },
}

/// How a command finished when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()?;
    }

    match cli.command {
        Command::Annotate { corpus, backend } => {
            cfg.validate()?;
            commands::annotate(&cfg, corpus.as_deref(), &backend)
        }
        Command::SelectPersonas { ratings, corpus, k } => {
            if let Some(k) = k {
                cfg.k = k;
            }
            cfg.validate()?;
            commands::select(&cfg, &ratings, corpus.as_deref())
        }
        Command::Elicit {
            personas,
            method,
            inventory,
            lambda,
            backend,
        } => {
            if method.is_some() {
                cfg.method = method;
            }
            if inventory.is_some() {
                cfg.inventory = inventory;
            }
            if let Some(l) = lambda {
                cfg.lambda = l;
            }
            cfg.validate()?;
            commands::elicit(&cfg, &personas, &backend)
        }
        Command::Tournament {
            profiles,
            rounds,
            runs,
            map,
        } => {
            if let Some(r) = rounds {
                cfg.rounds = r;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(m) = map {
                cfg.map = m;
            }
            cfg.validate()?;
            commands::tournament(&cfg, &profiles)
        }
        Command::Analyze {
            ratings,
            leaderboards,
            dh_profiles,
            pi_profiles,
            corpus,
        } => {
            cfg.validate()?;
            commands::analyze(
                &cfg,
                &commands::AnalyzeInputs {
                    ratings,
                    leaderboards,
                    dh_profiles,
                    pi_profiles,
                    corpus,
                },
            )
        }
        Command::ExportReplay {
            log,
            game_id,
            profiles,
        } => {
            cfg.validate()?;
            commands::export_replay(&cfg, &log, &game_id, &profiles)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are failures, not the partial-success code clap would use
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => {
            log::warn!("finished with skipped records");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
