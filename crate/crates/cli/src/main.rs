//! `confmerge`: highway on-ramp merging with calibrated arrival-time
//! uncertainty, end to end. Generate simulated trajectory datasets, train
//! the arrival-time network, calibrate a distribution-free bound table,
//! audit its coverage, and run closed-loop merge episodes against the
//! traffic simulator.
//!
//! Exit codes: 0 success, 2 rejected configuration or input files, 3 batch
//! in which no planning step anywhere was feasible, 1 other failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod dataset;
mod fail;
mod model;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "confmerge",
    version,
    about = "Merge a ramp vehicle through simulated highway traffic under calibrated arrival-time uncertainty"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the config field reference; optionally write a default config
    Config {
        /// Write a ready-to-edit default config file here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate scenarios and write the train/calib/test dataset splits
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Training-split trajectory count (overrides seeds.train_count)
        #[arg(long)]
        count: Option<usize>,
        /// Dataset directory
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Fit the arrival-time predictor on the training split
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory (from gen-data)
        #[arg(long, default_value = "data")]
        data: PathBuf,
        /// Output directory for model.json and loss_curve.csv
        #[arg(long, default_value = "model")]
        out: PathBuf,
    },
    /// Build the per-(step, slot) bound table from the calibration split
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        /// Model file (required for predictor "network")
        #[arg(long)]
        model: Option<PathBuf>,
        /// Override zone.epsilon for this table
        #[arg(long)]
        epsilon: Option<f64>,
        /// Table file to write
        #[arg(long, default_value = "table.json")]
        out: PathBuf,
    },
    /// Measure empirical coverage of a table on the test split
    Coverage {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "table.json")]
        table: PathBuf,
        /// Also write the full report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one closed-loop merge episode and export its plot data
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Calibrated table (not used by the oracle planner)
        #[arg(long)]
        table: Option<PathBuf>,
        /// Scenario seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for states.csv, plans.csv, arrivals.json, run.json
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Run a seeded batch of episodes and write the aggregate report
    Batch {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "table.json")]
        table: PathBuf,
        /// First scenario seed; runs use seed..seed+runs
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Output directory for report.json and runs.csv
        #[arg(long, default_value = "batch")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<u8, fail::Fail> {
    match cli.cmd {
        Cmd::Config { out } => {
            commands::cmd_config(out.as_deref())?;
            Ok(0)
        }
        Cmd::GenData { config, count, out } => {
            let cfg = RunConfig::load(config.as_deref())?;
            commands::cmd_gen_data(cfg, count, &out)?;
            Ok(0)
        }
        Cmd::Train { config, data, out } => {
            let cfg = RunConfig::load(config.as_deref())?;
            commands::cmd_train(&cfg, &data, &out)?;
            Ok(0)
        }
        Cmd::Calibrate {
            config,
            data,
            model,
            epsilon,
            out,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            commands::cmd_calibrate(cfg, &data, model.as_deref(), epsilon, &out)?;
            Ok(0)
        }
        Cmd::Coverage {
            config,
            data,
            model,
            table,
            out,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            commands::cmd_coverage(&cfg, &data, model.as_deref(), &table, out.as_deref())?;
            Ok(0)
        }
        Cmd::Simulate {
            config,
            model,
            table,
            seed,
            out,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            commands::cmd_simulate(&cfg, model.as_deref(), table.as_deref(), seed, &out)?;
            Ok(0)
        }
        Cmd::Batch {
            config,
            model,
            table,
            seed,
            runs,
            out,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            let report = commands::cmd_batch(&cfg, model.as_deref(), &table, seed, runs, &out)?;
            let planning: usize = report.runs.iter().map(|r| r.planning_steps).sum();
            let infeasible: usize = report.runs.iter().map(|r| r.infeasible_steps).sum();
            if planning > 0 && infeasible == planning {
                eprintln!("error: no planning step in any episode was feasible");
                return Ok(3);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
