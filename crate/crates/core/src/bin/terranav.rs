use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use terranav::cli::{cmd_compare, cmd_run, CliError, RunArgs};

#[derive(Parser)]
#[command(name = "terranav", version, about = "Terrain-aware local navigation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of episodes for one variant.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// dwa_vanilla, ours_full, ours_no_attention or waypoint_only
        #[arg(long)]
        variant: String,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate metrics of several run directories.
    Compare {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Run {
            scenario,
            variant,
            episodes,
            seed,
            out,
        } => cmd_run(&RunArgs {
            scenario,
            variant,
            episodes,
            seed,
            out,
        })
        .map(|s| {
            let m = &s.metrics;
            println!(
                "{} {}: success {:.3}, vibration {:.4}, speed {:.3} m/s, length {}",
                s.scenario,
                s.variant,
                m.success_rate,
                m.avg_vibration,
                m.avg_speed,
                m.norm_traj_length.map_or("n/a".to_string(), |v| format!("{v:.3}"))
            );
        }),
        Command::Compare { out, runs } => cmd_compare(&runs, &out).map(|c| {
            println!("wrote comparison of {} runs to {}", c.metrics["success_rate"].len(), out.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
