use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use snum_cli::{regen, run, spec, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "snum", version, about = "Degrees of compactness for finite-dimensional operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec.
    Run {
        spec: PathBuf,
        /// Output directory (overrides the spec's output path).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solver seed (overrides the spec's solver seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a spec without running it.
    Validate { spec: PathBuf },
    /// Regression fixtures.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Recompute fixture groups and report differences.
    Regen {
        /// Glob over group names.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec, out, seed } => match run(&spec, &RunOptions { out, seed, threads: None }) {
            Ok(m) => {
                for o in &m.outputs {
                    println!("{} ({:.3} s)", o.file, o.seconds);
                }
                println!("manifest.json: seed {}, {:.3} s", m.seed, m.wall_time_seconds);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Validate { spec: path } => {
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            match spec::load(&path).and_then(|s| spec::validate(&s, &base).map(|_| s)) {
                Ok(s) => {
                    println!("ok: {} operators, {} computations", s.operators.len(), s.computations.len());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Fixtures { command: FixturesCommand::Regen { filter, dir, seed } } => {
            match regen::regen(&dir, filter.as_deref(), seed) {
                Ok(r) => {
                    print!("{}", r.render());
                    ExitCode::from(r.exit_code() as u8)
                }
                Err(e) => fail(e),
            }
        }
    }
}
