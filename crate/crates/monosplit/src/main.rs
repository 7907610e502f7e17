use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use monosplit::cli::{parse_config, run_table, CliOverrides};
use monosplit::splitting::stepsize::StepsizeMode;

/// Splitting solvers for monotone inclusions with four operators, and their
/// product-space extensions.
#[derive(Parser)]
#[command(name = "monosplit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the runs described by a JSON configuration file.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the run configuration.
    config: PathBuf,
    /// Output directory for CSV traces (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reject step sizes on the admissibility boundary.
    #[arg(long, conflicts_with = "permissive")]
    strict: bool,
    /// Accept step sizes up to (and including) the boundary, with a warning.
    #[arg(long)]
    permissive: bool,
    /// Pre-solve each cell to a tight fixed point and record the energy
    /// diagnostic column.
    #[arg(long)]
    lyapunov: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let mode = if args.strict {
                Some(StepsizeMode::Strict)
            } else if args.permissive {
                Some(StepsizeMode::Permissive)
            } else {
                None
            };
            let overrides = CliOverrides {
                out_dir: args.out,
                mode,
                lyapunov: args.lyapunov,
            };
            let cfg = match parse_config(&args.config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match run_table(&cfg, &overrides) {
                Ok(report) => {
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    print!("{}", report.table());
                    println!("traces written to {}", report.out_dir.display());
                    if report.all_converged {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
