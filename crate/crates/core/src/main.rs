use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use iotclust::commands::{
    cmd_compare, cmd_train, exit_code, CompareArgs, TrainArgs, DEFAULT_REPS, DEFAULT_SWEEP,
};

#[derive(Parser)]
#[command(
    name = "iotclust",
    version,
    about = "Edge-IoT device clustering: Q-learning vs random VM assignment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write its Q-table snapshot and training trace.
    Train {
        /// Scenario file of key=value lines; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate trained agent and random baseline over a device-count sweep.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated device counts.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP)]
        sweep: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_REPS)]
        reps: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Q-table snapshot used at every point instead of training inline.
        #[arg(long)]
        qtable: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let result = match cli.command {
        Command::Train { config, seed, out } => {
            cmd_train(&TrainArgs { config, seed, out }).map(|s| {
                println!("final_epsilon={}", s.final_epsilon);
                println!("last_500_mean_reward={}", s.last_500_mean_reward);
            })
        }
        Command::Compare {
            config,
            seed,
            sweep,
            reps,
            out,
            qtable,
        } => {
            let args = CompareArgs {
                config,
                seed,
                sweep,
                reps,
                out,
                qtable,
            };
            cmd_compare(&args).map(|c| {
                for p in &c.mixed {
                    println!(
                        "n={} clusters rl={:.3} random={:.3} delayed rl={:.3} random={:.3}",
                        p.device_count,
                        p.rl.mean_clusters_used,
                        p.random.mean_clusters_used,
                        p.rl.mean_delayed_devices,
                        p.random.mean_delayed_devices
                    );
                }
            })
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
