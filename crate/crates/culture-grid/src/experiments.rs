//! Executing experiment plans and rendering their outputs.
//!
//! A plan expands into `variants x replicates` runs, each with its own seed
//! derived from the plan's master seed. Every run writes one metrics CSV;
//! requested iterations also write grid snapshots. After all runs a summary
//! table aggregates the replicates per variant: mean and sample standard
//! deviation of the headline statistics at every recorded iteration, plus
//! one row for the convergence iteration.

use crate::action::Action;
use crate::config::{ExperimentPlan, Variant};
use crate::engine::{self, RunOptions, ValidationError};
use crate::fitness::{FitnessSpec, Landscape};
use crate::metrics::{self, MetricsRow};
use crate::rng;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("cannot write `{path}`: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Seed for one run of the grid, mixed from the master seed so every
/// `(variant, replicate)` pair draws an independent stream.
pub fn run_seed(base: u64, variant: usize, replicate: u32) -> u64 {
    rng::derive_seed(base, &[rng::STREAM_RUN, ((variant as u64) << 32) | replicate as u64])
}

pub fn metrics_filename(variant: usize, replicate: u32) -> String {
    format!("metrics_v{variant}_r{replicate}.csv")
}

pub fn snapshot_filename(variant: usize, replicate: u32, iteration: u32) -> String {
    format!("v{variant}_r{replicate}_t{iteration}.txt")
}

pub const SUMMARY_FILENAME: &str = "summary.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug)]
pub struct PlanOutcome {
    pub runs: usize,
    pub summary_path: PathBuf,
}

fn create_dir(path: &Path) -> Result<(), PlanError> {
    fs::create_dir_all(path).map_err(|source| PlanError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, contents: &str) -> Result<(), PlanError> {
    fs::write(path, contents).map_err(|source| PlanError::Io { path: path.to_path_buf(), source })
}

/// Mean and sample standard deviation (n - 1 denominator); the deviation is
/// reported as 0 for fewer than two values.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, sd)
}

fn append_variant_summary(out: &mut String, variant: &Variant, replicates: &[Vec<MetricsRow>]) {
    let stats: [(&str, fn(&MetricsRow) -> f64); 3] = [
        ("mean_fitness", |row| row.mean_fitness),
        ("diversity", |row| row.diversity as f64),
        ("top_fraction", |row| row.top_fraction),
    ];
    let label = variant.params_label();
    let iteration_count = replicates.iter().map(|m| m.len()).min().unwrap_or(0);
    for i in 0..iteration_count {
        let iteration = replicates[0][i].iteration;
        for (name, extract) in stats {
            let values: Vec<f64> = replicates.iter().map(|rows| extract(&rows[i])).collect();
            let (mean, sd) = mean_sd(&values);
            let _ = writeln!(out, "{},{},{},{},{},{},{}", variant.id, label, iteration, name, mean, sd, values.len());
        }
    }
    // Convergence is aggregated over the replicates that reached it; a run
    // that never converges contributes nothing, and a variant with no
    // converged replicate reports a mean of -1 with n = 0.
    let converged: Vec<f64> = replicates
        .iter()
        .filter_map(|rows| metrics::convergence_iteration(rows))
        .map(|t| t as f64)
        .collect();
    if converged.is_empty() {
        let _ = writeln!(out, "{},{label},-1,convergence_iteration,-1,0,0", variant.id);
    } else {
        let (mean, sd) = mean_sd(&converged);
        let _ = writeln!(out, "{},{label},-1,convergence_iteration,{mean},{sd},{}", variant.id, converged.len());
    }
}

/// Run every variant and replicate of `plan`, writing per-run metrics CSVs,
/// any requested snapshots, and the aggregate `summary.csv` under the plan's
/// output directory.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome, PlanError> {
    create_dir(&plan.out_dir)?;
    let snapshots_dir = plan.out_dir.join(SNAPSHOT_DIR);
    if !plan.snapshot_iterations.is_empty() {
        create_dir(&snapshots_dir)?;
    }
    let options = RunOptions { snapshot_iterations: plan.snapshot_iterations.clone(), ..RunOptions::default() };

    let mut summary = String::from("variant_id,params,iteration,stat,mean,sd,n\n");
    let mut runs = 0;
    for variant in &plan.variants {
        let landscape = Landscape::enumerate(&variant.config.fitness);
        let mut replicate_metrics: Vec<Vec<MetricsRow>> = Vec::with_capacity(plan.replicates as usize);
        for k in 0..plan.replicates {
            let mut config = variant.config.clone();
            config.seed = run_seed(variant.config.seed, variant.id, k);
            let result = engine::run_with(&config, &options, |_, _| {})?;
            write_file(
                &plan.out_dir.join(metrics_filename(variant.id, k)),
                &metrics::write_csv(&result.metrics, &landscape),
            )?;
            for (t, grid) in &result.snapshots {
                write_file(&snapshots_dir.join(snapshot_filename(variant.id, k, *t)), grid)?;
            }
            replicate_metrics.push(result.metrics);
            runs += 1;
        }
        append_variant_summary(&mut summary, variant, &replicate_metrics);
    }
    let summary_path = plan.out_dir.join(SUMMARY_FILENAME);
    write_file(&summary_path, &summary)?;
    Ok(PlanOutcome { runs, summary_path })
}

/// The full action table for one fitness function: every action index, its
/// six body-part directions (-1 = left, 0 = stationary, 1 = right), and its
/// fitness value.
pub fn fitness_table_csv(spec: &FitnessSpec) -> String {
    let mut out = String::from("action_index,left_arm,right_arm,left_leg,right_leg,head,hips,fitness\n");
    for action in Action::iter_all() {
        let _ = write!(out, "{}", action.index());
        for posture in action.parts() {
            let _ = write!(out, ",{}", posture.signum());
        }
        let _ = writeln!(out, ",{}", spec.evaluate(&action));
    }
    out
}

const GLYPHS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

/// Re-render a parsed snapshot as a glyph grid with a legend. Distinct
/// action indices get letters in order of first appearance; `.` marks empty
/// cells and `#` stands in once the glyph alphabet is exhausted.
pub fn render_snapshot_glyphs(grid: &[Vec<Option<u16>>]) -> String {
    fn glyph_at(position: usize) -> char {
        if position < GLYPHS.len() {
            GLYPHS[position] as char
        } else {
            '#'
        }
    }
    let mut seen: Vec<u16> = Vec::new();
    let mut out = String::new();
    for row in grid {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push(' ');
            }
            match cell {
                Some(index) => {
                    let position = seen.iter().position(|&s| s == *index).unwrap_or_else(|| {
                        seen.push(*index);
                        seen.len() - 1
                    });
                    out.push(glyph_at(position));
                }
                None => out.push('.'),
            }
        }
        out.push('\n');
    }
    out.push('\n');
    for (position, index) in seen.iter().enumerate() {
        let action = Action::from_index(*index).expect("parsed snapshots hold valid action indices");
        let _ = writeln!(out, "{} = {:?}", glyph_at(position), action);
    }
    out
}
