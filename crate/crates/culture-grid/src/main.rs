use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use culture_grid::config::{self, ExperimentPlan};
use culture_grid::experiments::{self, PlanError};
use culture_grid::fitness::FitnessSpec;
use culture_grid::world;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Simulate cultural evolution on a grid of imitating, inventing agents.
#[derive(Parser)]
#[command(name = "culture-grid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the base configuration once, ignoring sweep axes.
    Run {
        /// Configuration file (`key = value` lines).
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the full sweep grid with replicates and write a summary table.
    Sweep {
        /// Configuration file (`key = value` lines).
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Write the full action-fitness table as CSV.
    Oracle {
        /// Fitness function to tabulate: f1 or f2.
        #[arg(long, default_value = "f1")]
        fitness: String,
        /// Output file; defaults to stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Pretty-print a stored grid snapshot as glyphs with a legend.
    SnapshotRender {
        /// Snapshot file produced by a run.
        snapshot: PathBuf,
    },
}

/// Failures split by exit code: bad input (1) versus failed output (2).
enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(message) | CliError::Io(message) => f.write_str(message),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; anything else is a
            // usage problem.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, seed, out } => execute_plan(&config, seed, out, false),
        Command::Sweep { config, seed, out } => execute_plan(&config, seed, out, true),
        Command::Oracle { fitness, out } => write_oracle(&fitness, out),
        Command::SnapshotRender { snapshot } => render_snapshot(&snapshot),
    }
}

fn load_plan(path: &Path) -> Result<ExperimentPlan, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read `{}`: {e}", path.display())))?;
    config::parse_plan(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn execute_plan(path: &Path, seed: Option<u64>, out: Option<PathBuf>, sweep: bool) -> Result<(), CliError> {
    let mut plan = load_plan(path)?;
    if !sweep {
        plan = plan.without_sweeps();
    }
    if let Some(seed) = seed {
        plan.override_seed(seed);
    }
    if let Some(dir) = out {
        plan.out_dir = dir;
    }
    let outcome = experiments::run_plan(&plan).map_err(|e| match e {
        PlanError::Validation(v) => CliError::Invalid(format!("{}: {v}", path.display())),
        io @ PlanError::Io { .. } => CliError::Io(io.to_string()),
    })?;
    eprintln!("{} run(s) complete; summary written to {}", outcome.runs, outcome.summary_path.display());
    Ok(())
}

fn write_oracle(fitness: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    let spec = match fitness.to_ascii_lowercase().as_str() {
        "f1" => FitnessSpec::F1,
        "f2" => FitnessSpec::F2,
        other => return Err(CliError::Invalid(format!("unknown fitness `{other}` (expected f1 or f2)"))),
    };
    let table = experiments::fitness_table_csv(&spec);
    match out {
        Some(path) => fs::write(&path, table)
            .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display())))?,
        None => print!("{table}"),
    }
    Ok(())
}

fn render_snapshot(path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read `{}`: {e}", path.display())))?;
    let grid = world::parse_snapshot(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    print!("{}", experiments::render_snapshot_glyphs(&grid));
    Ok(())
}
