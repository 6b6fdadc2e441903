use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hsheat::{run, Check, Command, RunOptions};

/// Half-space heat experiments driven by a config file.
#[derive(Parser)]
#[command(name = "hsheat", version)]
struct Cli {
    /// Directory for CSV reports and the manifest.
    #[arg(long, global = true, env = "HSHEAT_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "HSHEAT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lorentz norm of the configured data.
    Norm { config: PathBuf },
    /// Free evolution E(t) u0 at the report levels.
    Evolve { config: PathBuf },
    /// Picard iteration for the full problem.
    Solve { config: PathBuf },
    /// Run one numerical check.
    Verify { check: Check, config: PathBuf },
    /// Calibrate the contraction constants.
    Calibrate { config: PathBuf },
}

fn main() -> ExitCode {
    // exit status 2 is reserved for failed checks
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let (command, config) = match cli.command {
        Cmd::Norm { config } => (Command::Norm, config),
        Cmd::Evolve { config } => (Command::Evolve, config),
        Cmd::Solve { config } => (Command::Solve, config),
        Cmd::Verify { check, config } => (Command::Verify(check), config),
        Cmd::Calibrate { config } => (Command::Calibrate, config),
    };
    let options = RunOptions {
        output_dir: cli.output_dir,
    };
    match run(command, &config, &options) {
        Ok(outcome) => {
            println!("{}: {}", command.name(), outcome.summary);
            println!("outputs: {}", outcome.output_dir.display());
            if outcome.passed {
                println!("status: pass");
                ExitCode::SUCCESS
            } else {
                println!("status: fail");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
