//! `structcons`: check surrogate losses for Bayes consistency on explicit
//! distributions over structured outputs.

mod commands;
mod report;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use structcons::consistency::{OptimizerConfig, SearchConfig, VerdictConfig, SCORE_TIE_TOLERANCE};
use structcons::{Fixture, LossKind, OutputSpace, SpaceKind};

use commands::{AlgoArg, InferMode};
use report::{Failure, Outcome, Report, EXIT_OK, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "structcons",
    version,
    about = "Bayes consistency checks for structured prediction losses"
)]
struct Cli {
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Seed for random search (recorded in every report).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for search. Results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Score gaps at or below this are treated as ties.
    #[arg(long, global = true, default_value_t = SCORE_TIE_TOLERANCE)]
    tie_tolerance: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    Ner,
    Dep,
    Singleroot,
    All,
}

#[derive(clap::Args)]
struct SpaceArgs {
    /// bio, dep (multi-root) or singleroot.
    #[arg(long)]
    space: SpaceKind,
    #[arg(long)]
    n: usize,
    /// Largest n to enumerate.
    #[arg(long)]
    cap: Option<usize>,
}

impl SpaceArgs {
    fn build(&self) -> Result<OutputSpace, Failure> {
        let space = OutputSpace::new(self.space, self.n)?;
        Ok(match self.cap {
            Some(cap) => space.with_cap(cap),
            None => space,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Re-derive the BIO and dependency counterexamples and verify every number.
    Reproduce {
        target: Target,
        /// Read fixture files from this directory instead of the built-in copies.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Decide whether a loss is consistent on a distribution file.
    /// Exit 0 consistent, 2 inconsistent, 3 undetermined.
    Check {
        file: PathBuf,
        #[arg(long)]
        loss: LossKind,
        /// Iteration budget when the minimizer has to be found numerically.
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
    },
    /// Draw random distributions and keep the ones where the loss is inconsistent.
    Search {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        loss: LossKind,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Symmetric Dirichlet concentration.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Write counterexamples and summary.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MAP or marginal inference on a scores file (unlisted parts score 0).
    Infer {
        mode: InferMode,
        scores: PathBuf,
        #[arg(long, value_enum, default_value_t = AlgoArg::Auto)]
        algo: AlgoArg,
        /// Require the file to be for this space.
        #[arg(long)]
        space: Option<SpaceKind>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// List every output of a space in enumeration order.
    Enumerate {
        #[command(flatten)]
        space: SpaceArgs,
    },
}

fn verdict_config(cli: &Cli, max_iters: usize) -> VerdictConfig {
    VerdictConfig {
        tie_tolerance: cli.tie_tolerance,
        optimizer: OptimizerConfig {
            max_iters,
            seed: cli.seed,
            ..OptimizerConfig::default()
        },
        ..VerdictConfig::default()
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if cli.tie_tolerance.is_nan() || cli.tie_tolerance < 0.0 {
        return Err(Failure::usage("--tie-tolerance must be non-negative"));
    }
    if cli.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    match &cli.command {
        Command::Reproduce { target, fixtures } => {
            let fixture = match target {
                Target::Ner => Some(Fixture::NerBio2),
                Target::Dep => Some(Fixture::DepMulti2),
                Target::Singleroot => Some(Fixture::DepSingle3),
                Target::All => None,
            };
            let config = verdict_config(cli, OptimizerConfig::default().max_iters);
            reproduce::run(fixture, fixtures.as_deref(), &config)
        }
        Command::Check {
            file,
            loss,
            max_iters,
        } => commands::check(file, *loss, &verdict_config(cli, *max_iters)),
        Command::Search {
            space,
            loss,
            trials,
            alpha,
            out,
        } => {
            let config = SearchConfig {
                trials: *trials,
                seed: cli.seed,
                alpha: *alpha,
                jobs: cli.jobs,
                verdict: verdict_config(cli, OptimizerConfig::default().max_iters),
            };
            commands::search(&space.build()?, *loss, &config, out.as_deref())
        }
        Command::Infer {
            mode,
            scores,
            algo,
            space,
            n,
        } => commands::infer(*mode, scores, *algo, *space, *n),
        Command::Enumerate { space } => commands::enumerate(&space.build()?),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.exit_code() == 0 {
                EXIT_OK
            } else {
                EXIT_USAGE
            });
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(outcome) => {
            if cli.json {
                let report = Report {
                    command: &args[1..],
                    input_digest: outcome.digest.as_deref(),
                    results: &outcome.results,
                    wall_time_ms: start.elapsed().as_millis() as u64,
                    version: env!("CARGO_PKG_VERSION"),
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            } else {
                print!("{}", outcome.text);
            }
            ExitCode::from(outcome.code)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
