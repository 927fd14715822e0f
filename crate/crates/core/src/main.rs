use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lpinet::config::{ConfigError, RunConfig};
use lpinet::metrics::{write_outputs, RunRecord};
use lpinet::runner::execute;
use lpinet::sweep::{expand, SweepSpec};

#[derive(Parser)]
#[command(name = "lpinet", version, about = "Lossless interconnect power-management simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration, optionally expanded by a sweep.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sweep: Option<PathBuf>,
        /// Output directory [default: config output_dir, then $LPINET_OUT, then ./out].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides the config seed (sweep seeds still apply).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUN: u8 = 2;

fn plan(config: &Path, sweep: Option<&Path>, seed: Option<u64>) -> Result<(RunConfig, Vec<RunConfig>), ConfigError> {
    let mut base = RunConfig::load(config)?;
    if let Some(seed) = seed {
        base.seed = seed;
    }
    let sweep = match sweep {
        Some(p) => SweepSpec::load(p)?,
        None => SweepSpec { max_runs: lpinet::sweep::DEFAULT_MAX_RUNS, ..Default::default() },
    };
    let runs = expand(&base, &sweep)?;
    Ok((base, runs))
}

fn output_dir(cli: Option<PathBuf>, base: &RunConfig) -> PathBuf {
    cli.or_else(|| base.output_dir.clone())
        .or_else(|| std::env::var_os("LPINET_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Validate { config } => match RunConfig::load(&config) {
            Ok(cfg) => {
                println!("ok: {cfg}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run { config, sweep, out, workers, seed } => {
            let (base, runs) = match plan(&config, sweep.as_deref(), seed) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let dir = output_dir(out, &base);
            let mut records = execute(&runs, workers);
            let failed = records.iter().filter(|r| matches!(r, RunRecord::Failed(_))).count();
            if let Err(e) = write_outputs(&dir, &mut records) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_RUN);
            }
            eprintln!("{} runs, {failed} failed; results in {}", records.len(), dir.display());
            if failed > 0 {
                ExitCode::from(EXIT_RUN)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
