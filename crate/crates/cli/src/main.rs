//! `fblab`: run named simulation/analysis scenarios from a JSON config, or
//! list the built-in parameter presets.
//!
//! Exit codes: 0 success, 2 configuration/schema violation, 3 numerical
//! failure during a run.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{presets, ScenarioConfig};

#[derive(Parser)]
#[command(name = "fblab", version, about = "Floquet optical-binding laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the scenario described by a JSON config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Size of the worker thread pool.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the named parameter presets.
    ListPresets,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListPresets => {
            println!(
                "{:<12} {:>12} {:>10} {:>14} {:>10}",
                "name", "gamma/2pi", "g/2pi", "|delta|/2pi", "kd"
            );
            println!(
                "{:<12} {:>12} {:>10} {:>14} {:>10}",
                "", "[Hz]", "[Hz]", "[Hz]", "[pi]"
            );
            for p in presets() {
                let kd = if p.kd_scan_pi.is_empty() {
                    format!("{:.3}", p.kd_pi)
                } else {
                    format!("scan({})", p.kd_scan_pi.len())
                };
                println!(
                    "{:<12} {:>12} {:>10} {:>14} {:>10}",
                    p.name, p.gamma_hz, p.g_hz, p.abs_delta_hz, kd
                );
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, seed, out, threads } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: could not size the thread pool: {e}");
                    return ExitCode::from(2);
                }
            }
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: /: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let mut cfg = match ScenarioConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.simulation.seed = s;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir.to_string_lossy().into_owned();
            }
            let resolved = match cfg.resolve() {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let dir = PathBuf::from(&cfg.output_dir);
            match run::run(cfg.scenario, &resolved, &dir) {
                Ok(()) => {
                    println!("wrote {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(run::RunError::Numerical(msg)) => {
                    eprintln!("error: numerical failure: {msg}");
                    ExitCode::from(3)
                }
                Err(run::RunError::Io(msg)) => {
                    eprintln!("error: i/o: {msg}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
