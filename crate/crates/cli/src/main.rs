//! Command-line front end for the open-system Krotov optimizer.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::ExperimentConfig;
use error::CliError;
use output::{CONVERGENCE_FILE, RESULT_FILE, TRAJECTORY_FILE};

const AFTER_HELP: &str = "\
OUTPUT FILES (written by `run` into the output directory)
  convergence.csv  k,J,fidelity,fluence,delta_J
                   one row per iteration; k = 0 is the seed field
  trajectory.csv   t,D1_free,D1_controlled,xi
                   one row per time node: trace distance to the target
                   without and with the optimized field, and the field
  result.json      scalars and metadata (versions, seed, wall clock,
                   resolved config)
  Floats carry 17 significant digits.

CONFIG
  One JSON object. `mode` is one of open-optimize, closed-optimize,
  thermal-speedup, free-time, qsl. `preset` (gad-qubit, speedup-demo,
  qubit-flip) supplies defaults underneath the given keys. Complex
  matrix entries are [re, im] pairs, rows outer. Unknown keys are errors.

EXIT CODES
  0 success, 2 unreadable or unparseable config, 3 invalid or infeasible
  problem, 4 run aborted (monotonicity or consistency failure, i/o).";

#[derive(Parser, Debug)]
#[command(name = "lindkrotov", version, about, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Seed of the initial field; overrides `optimizer.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Dotted override such as `optimizer.delta=1.5`; repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the closed-form and first-passage ε-free times.
    FreeTime { config: PathBuf },
}

fn load(
    path: &Path,
    overrides: &[String],
    seed: Option<u64>,
    output_dir: Option<&Path>,
) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let dir = output_dir.map(|p| p.to_string_lossy().into_owned());
    ExperimentConfig::from_document(raw, overrides, seed, dir.as_deref())
}

fn metadata(config: &ExperimentConfig, elapsed: f64) -> Value {
    json!({
        "library_version": lindkrotov::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "seed": config.optimizer.seed,
        "wall_clock_seconds": elapsed,
        "config": config,
    })
}

fn run_command(
    path: &Path,
    overrides: &[String],
    seed: Option<u64>,
    output_dir: Option<&Path>,
) -> Result<(), CliError> {
    let config = load(path, overrides, seed, output_dir)?;
    let start = Instant::now();
    let out = run::execute(&config)?;
    let elapsed = start.elapsed().as_secs_f64();

    let dir = PathBuf::from(config.output_dir.as_deref().unwrap_or("results"));
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    if let Some(csv) = &out.convergence {
        output::write_text(&dir.join(CONVERGENCE_FILE), csv)?;
        files.push(CONVERGENCE_FILE);
    }
    if let Some(csv) = &out.trajectory {
        output::write_text(&dir.join(TRAJECTORY_FILE), csv)?;
        files.push(TRAJECTORY_FILE);
    }
    files.push(RESULT_FILE);
    let result = json!({
        "mode": config.mode,
        "scalars": out.scalars,
        "files": files,
        "metadata": metadata(&config, elapsed),
    });
    output::write_json(&dir.join(RESULT_FILE), &result)?;
    for line in &out.summary {
        println!("{line}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn free_time_command(path: &Path) -> Result<(), CliError> {
    let config = load(path, &[], None, None)?;
    let out = run::free_time(&config)?;
    for line in &out.summary {
        println!("{line}");
    }
    print!("{}", output::render_json(&Value::Object(out.scalars)));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            output_dir,
            seed,
            overrides,
        } => run_command(config, overrides, *seed, output_dir.as_deref()),
        Command::FreeTime { config } => free_time_command(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
