use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use degenloop_cli::commands;
use degenloop_cli::format::fmt_num;
use degenloop_cli::presets::{Preset, PresetOptions, DEFAULT_EPSILON_GRID};
use degenloop_cli::sweep::SweepParam;
use degenloop_cli::verify::Check;
use degenloop_cli::CliError;
use degenloop_core::engine::DEFAULT_MASTER_SEED;

/// Simulate recommender feedback loops and measure how fast user interest degenerates.
#[derive(Debug, Parser)]
#[command(name = "degenloop", version)]
struct Cli {
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the batch described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a figure preset.
    Figure {
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
        /// Noise levels for fig5.
        #[arg(long, value_delimiter = ',')]
        epsilon_grid: Option<Vec<f64>>,
    },
    /// Sweep one parameter of a JSON config.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification check and write a JSON report.
    Verify {
        check: Check,
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out, seed } => {
            commands::run(&config, &out, seed)?;
            println!("wrote {}", out.display());
        }
        Command::Figure { preset, out, seed, epsilon_grid } => {
            let opts = PresetOptions {
                master_seed: seed,
                epsilon_grid: epsilon_grid.unwrap_or_else(|| DEFAULT_EPSILON_GRID.to_vec()),
            };
            commands::figure(preset, &out, &opts)?;
            println!("wrote {}", out.display());
        }
        Command::Sweep { param, values, config, out, seed } => {
            commands::sweep(param, &values, &config, &out, seed)?;
            println!("wrote {}", out.display());
        }
        Command::Verify { check, seed, out } => {
            let report = commands::verify(check, seed, &out)?;
            for a in &report.assertions {
                let verdict = if a.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {} measured={} threshold={}", a.name, fmt_num(a.measured), fmt_num(a.threshold));
            }
            println!("report {}", out.join(format!("verify_{}.json", check.name())).display());
            if let Some(e) = commands::verification_error(&report) {
                return Err(e);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
