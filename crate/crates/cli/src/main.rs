//! Command-line simulator for Exp3-OE on Colonel Blotto and Hide-and-Seek.
//!
//! Exit status is 0 on success, 1 for invalid input or any other error and
//! 2 when `verify-bound` finds the regret above the bound.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use soppp::games::HsCondition;
use soppp::harness::{
    graph_info, parse_config, run_experiment, verify_bound, write_csv, write_csv_to, Game,
};
use soppp::Error;

#[derive(Parser)]
#[command(name = "soppp", version, about = "Exp3-OE path-planning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its regret series as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output file; overrides `output` in the config. Without either,
        /// the CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment with Q_t recorded and compare the mean regret to
    /// the bound.
    VerifyBound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print graph sizes and observation-graph properties for one round.
    GraphInfo {
        #[arg(long, value_enum)]
        game: GameKind,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        kappa: usize,
        #[arg(long, value_enum, default_value_t = ConditionArg::C1)]
        condition: ConditionArg,
        /// Seed for the sampled Blotto round.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GameKind {
    Cb,
    Hs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConditionArg {
    C1,
    C2,
}

enum Failure {
    Error(Error),
    BoundViolated,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn read_config(path: &PathBuf) -> Result<soppp::harness::ExperimentConfig, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    parse_config(&text)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config, out } => {
            let config = read_config(&config)?;
            let series = run_experiment(&config)?;
            match out.or(config.output) {
                Some(path) => write_csv(&series, &path)?,
                None => write_csv_to(&series, io::stdout().lock()).map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })?,
            }
        }
        Command::VerifyBound { config } => {
            let report = verify_bound(&read_config(&config)?)?;
            println!("{report}");
            if !report.pass {
                return Err(Failure::BoundViolated);
            }
        }
        Command::GraphInfo {
            game,
            k,
            n,
            kappa,
            condition,
            seed,
        } => {
            let game = match game {
                GameKind::Cb => Game::Blotto {
                    k: u32::try_from(k)
                        .map_err(|_| Error::InvalidParameter(format!("k={k} is too large")))?,
                    n,
                },
                GameKind::Hs => Game::HideSeek {
                    k,
                    n,
                    kappa,
                    condition: match condition {
                        ConditionArg::C1 => HsCondition::C1,
                        ConditionArg::C2 => HsCondition::C2,
                    },
                },
            };
            println!("{}", graph_info(&game, seed)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout and succeed; usage errors are
            // validation errors.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::BoundViolated) => ExitCode::from(2),
    }
}
