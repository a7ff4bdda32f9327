use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use beamkit::pipeline::Method;
use beamkit::ScenarioConfig;
use beamkit_cli::{run_single, run_sweep, worker_count, write_outputs, DesignStatus, SweepKind, SweepSpec};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "beamkit",
    version,
    about = "Energy-efficient hybrid beamforming designs and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one design on the configured seed and print its report as JSON.
    Design {
        config: PathBuf,
        #[arg(long, default_value = "proposed")]
        method: Method,
    },
    /// Seeded Monte-Carlo sweep writing CSV tables and meta.json.
    Sweep {
        #[arg(long)]
        kind: SweepKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Seed of trial 0 (defaults to the config's rng_seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of proposed, omp, fdb, comm_only.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        /// Comma-separated grid replacing the kind's default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
        /// Transmit power in watts corresponding to 0 dB SNR.
        #[arg(long, default_value_t = 1.0)]
        snr_reference: f64,
        /// Record wall-clock times in the wall_ms column.
        #[arg(long)]
        timing: bool,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Design { config, method } => {
            let (report, msg, status) = run_single(&config, method);
            if let Some(r) = report {
                match serde_json::to_string_pretty(&r) {
                    Ok(s) => {
                        let _ = writeln!(std::io::stdout(), "{s}");
                    }
                    Err(e) => eprintln!("error: {e}"),
                }
            }
            if let Some(m) = msg {
                eprintln!("error: {m}");
            }
            ExitCode::from(status as u8)
        }
        Command::Sweep {
            kind,
            config,
            out,
            trials,
            seed,
            methods,
            grid,
            snr_reference,
            timing,
        } => {
            let base = match ScenarioConfig::from_json_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(DesignStatus::InvalidInput as u8);
                }
            };
            let mut spec = SweepSpec::new(kind, base);
            spec.trials = trials;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(m) = methods {
                spec.methods = m;
            }
            if let Some(g) = grid {
                spec.grid = g;
            }
            spec.snr_reference = snr_reference;
            spec.timing = timing;
            let result = match run_sweep(&spec, worker_count()) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(DesignStatus::InvalidInput as u8);
                }
            };
            match write_outputs(&spec, &result, &out) {
                Ok(paths) => {
                    for p in paths {
                        let _ = writeln!(std::io::stdout(), "{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
