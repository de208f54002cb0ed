use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rill_cli::commands::{cmd_experiment, cmd_oracle, cmd_run, cmd_verify, default_out_dir};
use rill_cli::config::{read_file, Etas, FileConfig, SnapshotKind, Statistic};
use rill_cli::error::CliError;
use rill_cli::experiment::Preset;
use rill_cli::verify::Level;

#[derive(Parser)]
#[command(name = "rill", version, about = "Rill erosion on a periodic directed lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate with explicit parameters and write the requested statistics.
    Run(RunArgs),
    /// Regenerate one of the named data sets.
    Experiment {
        preset: Preset,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Exact law of the load at depth `k` after `n` steps.
    Oracle {
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        time: usize,
        /// Enumerate clusters instead of running the walk recursion.
        #[arg(long)]
        bruteforce: bool,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every acceptance criterion; exits 2 if any fails.
    Verify {
        #[arg(value_enum, default_value = "fast")]
        level: Level,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the flags below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// One or more values, comma separated.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    stats: Option<Vec<Statistic>>,
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    snapshot_times: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    snapshot_format: Option<SnapshotKind>,
}

impl RunArgs {
    fn flags(self) -> FileConfig {
        FileConfig {
            width: self.width,
            depth: self.depth,
            eta: self.eta.map(Etas::Many),
            r: self.r,
            seed: self.seed,
            steps: self.steps,
            threads: self.threads,
            scale: self.scale,
            out_dir: self.out_dir,
            stats: self.stats,
            burn_in: self.burn_in,
            snapshot_times: self.snapshot_times,
            snapshot_format: self.snapshot_format,
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let file = match &args.config {
                Some(path) => read_file(path)?,
                None => FileConfig::default(),
            };
            let cfg = file.overlay(args.flags()).resolve()?;
            for path in cmd_run(&cfg)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Experiment {
            preset,
            scale,
            seed,
            out_dir,
            threads,
        } => {
            if threads == Some(0) {
                return Err(CliError::config("threads", "must be at least 1"));
            }
            let out_dir = out_dir.unwrap_or_else(default_out_dir);
            for path in cmd_experiment(preset, scale, seed, threads, &out_dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Oracle {
            depth,
            time,
            bruteforce,
            out,
        } => {
            let csv = cmd_oracle(depth, time, bruteforce)?;
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => std::io::stdout().write_all(&csv)?,
            }
        }
        Command::Verify { level, seed, threads } => cmd_verify(level, seed, threads)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
