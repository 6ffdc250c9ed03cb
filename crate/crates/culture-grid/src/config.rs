//! Plain-text experiment configuration.
//!
//! The format is line-oriented `key = value` with dotted keys and `#`
//! comments; every key is optional and falls back to a default. Indexed keys
//! (`barriers.0.between_cols`, `regions.1.rect`) describe repeated sections.
//! `sweep.<key> = v1, v2, ...` turns a scalar key into an experiment axis;
//! several sweep lines combine as a cross product, first line outermost.
//! Unknown keys, malformed values, and out-of-range values are rejected with
//! the offending line number. When the same key appears twice the later line
//! wins.

use crate::engine::{BroadcastPolicy, BroadcastSelection, SimConfig, UpdateMode};
use crate::fitness::FitnessSpec;
use crate::world::{Barrier, Cell, Erosion, Placement, Rect, RegionOverride, Topology, WorldSpec};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    /// A problem attributable to one configuration line.
    Line { line: usize, message: String },
    /// A cross-field problem in the assembled plan.
    Plan { message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Line { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Plan { message } => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// One experiment axis: a configuration key and the values it sweeps over.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub path: String,
    pub values: Vec<String>,
}

/// One point in the sweep grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub id: usize,
    /// `(key, value)` pairs that distinguish this variant from the base.
    pub params: Vec<(String, String)>,
    pub config: SimConfig,
}

impl Variant {
    /// Compact `key=value;key=value` rendering for summary rows.
    pub fn params_label(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub base: SimConfig,
    pub sweeps: Vec<SweepSpec>,
    pub variants: Vec<Variant>,
    pub replicates: u32,
    pub out_dir: PathBuf,
    pub snapshot_iterations: Vec<u32>,
}

impl ExperimentPlan {
    /// The same plan reduced to its base configuration (used by single-run
    /// execution, which ignores sweep axes).
    pub fn without_sweeps(&self) -> ExperimentPlan {
        let mut plan = self.clone();
        plan.sweeps.clear();
        plan.variants = vec![Variant { id: 0, params: Vec::new(), config: plan.base.clone() }];
        plan
    }

    /// Replace the master seed everywhere (CLI `--seed` override).
    pub fn override_seed(&mut self, seed: u64) {
        self.base.seed = seed;
        for v in &mut self.variants {
            v.config.seed = seed;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PlacementKind {
    Full,
    Density,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum FitnessKind {
    F1,
    F2,
    Weighted,
}

#[derive(Clone, Debug, Default)]
struct RawBarrier {
    between: Option<(usize, usize)>,
    permeability: Option<f64>,
    erosion_start: Option<u32>,
    erosion_duration: Option<u32>,
}

#[derive(Clone, Debug, Default)]
struct RawRegion {
    rect: Option<Rect>,
    invention_prob: Option<f64>,
}

/// Typed store for every simulation-level key, shared between base parsing
/// and sweep application so both validate values the same way.
#[derive(Clone, Debug, Default)]
struct RawSettings {
    rows: Option<usize>,
    cols: Option<usize>,
    topology: Option<Topology>,
    placement: Option<PlacementKind>,
    density: Option<f64>,
    cells: Option<Vec<Cell>>,
    barriers: BTreeMap<usize, RawBarrier>,
    regions: BTreeMap<usize, RawRegion>,
    fitness: Option<FitnessKind>,
    weight_f1: Option<f64>,
    weight_f2: Option<f64>,
    iterations: Option<u32>,
    invention_prob: Option<f64>,
    rate_of_change: Option<f64>,
    bc_count: Option<usize>,
    bc_selection: Option<BroadcastSelection>,
    bc_fixed_ids: Option<Vec<usize>>,
    bc_period: Option<u32>,
    mental_simulation: Option<bool>,
    update_mode: Option<UpdateMode>,
    seed: Option<u64>,
}

fn parse_number<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("expected {what}, got `{}`", value.trim()))
}

fn parse_prob(value: &str, what: &str) -> Result<f64, String> {
    let v: f64 = parse_number(value, "a number")?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("{what} must lie in [0, 1], got {v}"));
    }
    Ok(v)
}

/// `A:B` (invention to imitation) becomes the probability `A / (A + B)`.
fn parse_ratio(value: &str) -> Result<f64, String> {
    let (a, b) = value
        .split_once(':')
        .ok_or_else(|| format!("expected a ratio like `2:1`, got `{}`", value.trim()))?;
    let a: f64 = parse_number(a, "a number")?;
    let b: f64 = parse_number(b, "a number")?;
    if a < 0.0 || b < 0.0 || a + b <= 0.0 {
        return Err(format!("ratio parts must be non-negative and not both zero, got `{}`", value.trim()));
    }
    Ok(a / (a + b))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

fn parse_pair(value: &str, what: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected {what} as `a,b`, got `{}`", value.trim()));
    }
    Ok((parse_number(parts[0], "an integer")?, parse_number(parts[1], "an integer")?))
}

fn parse_cells(value: &str) -> Result<Vec<Cell>, String> {
    value
        .split(';')
        .map(|part| parse_pair(part, "a cell"))
        .collect()
}

fn parse_list<T: std::str::FromStr>(value: &str, what: &str) -> Result<Vec<T>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|part| parse_number(part, what)).collect()
}

fn parse_rect(value: &str) -> Result<Rect, String> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected a rectangle as `top,left,bottom,right`, got `{}`", value.trim()));
    }
    Ok(Rect {
        top: parse_number(parts[0], "an integer")?,
        left: parse_number(parts[1], "an integer")?,
        bottom: parse_number(parts[2], "an integer")?,
        right: parse_number(parts[3], "an integer")?,
    })
}

impl RawSettings {
    /// Apply one `key = value` assignment. Errors are messages without line
    /// numbers; the caller attaches them.
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        match key {
            "world.rows" | "world.cols" => {
                let v: usize = parse_number(value, "a positive integer")?;
                if v == 0 {
                    return Err(format!("{key} must be at least 1"));
                }
                if key == "world.rows" {
                    self.rows = Some(v);
                } else {
                    self.cols = Some(v);
                }
            }
            "world.topology" => {
                self.topology = Some(match value {
                    "torus" => Topology::Torus,
                    "bounded" => Topology::Bounded,
                    other => return Err(format!("unknown topology `{other}` (expected torus or bounded)")),
                });
            }
            "world.placement" => {
                self.placement = Some(match value {
                    "full" => PlacementKind::Full,
                    "density" => PlacementKind::Density,
                    "explicit" => PlacementKind::Explicit,
                    other => return Err(format!("unknown placement `{other}` (expected full, density, or explicit)")),
                });
            }
            "world.density" => {
                let v: f64 = parse_number(value, "a number")?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(format!("world.density must lie in (0, 1], got {v}"));
                }
                self.density = Some(v);
            }
            "world.cells" => self.cells = Some(parse_cells(value)?),
            "fitness" => {
                self.fitness = Some(match value.to_ascii_lowercase().as_str() {
                    "f1" => FitnessKind::F1,
                    "f2" => FitnessKind::F2,
                    "weighted" => FitnessKind::Weighted,
                    other => return Err(format!("unknown fitness `{other}` (expected f1, f2, or weighted)")),
                });
            }
            "fitness.weight_f1" | "fitness.weight_f2" => {
                let v: f64 = parse_number(value, "a number")?;
                if v < 0.0 {
                    return Err(format!("{key} must be non-negative, got {v}"));
                }
                if key == "fitness.weight_f1" {
                    self.weight_f1 = Some(v);
                } else {
                    self.weight_f2 = Some(v);
                }
            }
            "iterations" => {
                let v: u32 = parse_number(value, "a positive integer")?;
                if v == 0 {
                    return Err("iterations must be at least 1".into());
                }
                self.iterations = Some(v);
            }
            "invention_prob" => self.invention_prob = Some(parse_prob(value, "invention_prob")?),
            "invention_ratio" => self.invention_prob = Some(parse_ratio(value)?),
            "rate_of_change" => self.rate_of_change = Some(parse_prob(value, "rate_of_change")?),
            "broadcast.count" => self.bc_count = Some(parse_number(value, "a non-negative integer")?),
            "broadcast.selection" => {
                self.bc_selection = Some(match value {
                    "random" => BroadcastSelection::RandomEachIteration,
                    "fittest" => BroadcastSelection::Fittest,
                    "fixed" => BroadcastSelection::FixedIds(Vec::new()),
                    other => return Err(format!("unknown selection `{other}` (expected random, fittest, or fixed)")),
                });
            }
            "broadcast.fixed_ids" => self.bc_fixed_ids = Some(parse_list(value, "an agent id")?),
            "broadcast.period" => {
                let v: u32 = parse_number(value, "a positive integer")?;
                if v == 0 {
                    return Err("broadcast.period must be at least 1".into());
                }
                self.bc_period = Some(v);
            }
            "mental_simulation" => self.mental_simulation = Some(parse_bool(value)?),
            "update_mode" => {
                self.update_mode = Some(match value {
                    "synchronous" => UpdateMode::Synchronous,
                    "sequential" => UpdateMode::Sequential,
                    other => return Err(format!("unknown update mode `{other}` (expected synchronous or sequential)")),
                });
            }
            "seed" => self.seed = Some(parse_number(value, "an unsigned integer")?),
            _ => {
                if let Some(rest) = key.strip_prefix("barriers.") {
                    return self.set_barrier(key, rest, value);
                }
                if let Some(rest) = key.strip_prefix("regions.") {
                    return self.set_region(key, rest, value);
                }
                return Err(format!("unknown key `{key}`"));
            }
        }
        Ok(())
    }

    fn set_barrier(&mut self, key: &str, rest: &str, value: &str) -> Result<(), String> {
        let (index, field) = rest
            .split_once('.')
            .ok_or_else(|| format!("unknown key `{key}`"))?;
        let index: usize = parse_number(index, "a barrier index")?;
        let barrier = self.barriers.entry(index).or_default();
        match field {
            "between_cols" => {
                let (a, b) = parse_pair(value, "a column interface")?;
                if b != a + 1 {
                    return Err(format!("between_cols must name adjacent columns `c,c+1`, got `{a},{b}`"));
                }
                barrier.between = Some((a, b));
            }
            "permeability" => barrier.permeability = Some(parse_prob(value, "permeability")?),
            "erosion_start" => barrier.erosion_start = Some(parse_number(value, "an iteration")?),
            "erosion_duration" => {
                let v: u32 = parse_number(value, "a positive integer")?;
                if v == 0 {
                    return Err("erosion_duration must be at least 1".into());
                }
                barrier.erosion_duration = Some(v);
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn set_region(&mut self, key: &str, rest: &str, value: &str) -> Result<(), String> {
        let (index, field) = rest
            .split_once('.')
            .ok_or_else(|| format!("unknown key `{key}`"))?;
        let index: usize = parse_number(index, "a region index")?;
        let region = self.regions.entry(index).or_default();
        match field {
            "rect" => region.rect = Some(parse_rect(value)?),
            "invention_prob" => region.invention_prob = Some(parse_prob(value, "invention_prob")?),
            "invention_ratio" => region.invention_prob = Some(parse_ratio(value)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Assemble and validate a [`SimConfig`]. Errors are cross-field and
    /// carry no line number.
    fn build(&self) -> Result<SimConfig, String> {
        let defaults = SimConfig::default();
        let placement = match self.placement.unwrap_or(PlacementKind::Full) {
            PlacementKind::Full => Placement::Full,
            PlacementKind::Density => Placement::RandomDensity(
                self.density.ok_or("world.placement = density requires world.density")?,
            ),
            PlacementKind::Explicit => Placement::Explicit(
                self.cells.clone().ok_or("world.placement = explicit requires world.cells")?,
            ),
        };
        let mut barriers = Vec::new();
        for (index, raw) in &self.barriers {
            let (left, _) = raw
                .between
                .ok_or(format!("barriers.{index} needs between_cols"))?;
            let erosion = match (raw.erosion_start, raw.erosion_duration) {
                (None, None) => None,
                (Some(start), Some(duration)) => Some(Erosion { start, duration }),
                _ => {
                    return Err(format!(
                        "barriers.{index} needs both erosion_start and erosion_duration or neither"
                    ))
                }
            };
            barriers.push(Barrier {
                left_col: left,
                base_permeability: raw.permeability.unwrap_or(0.0),
                erosion,
            });
        }
        let mut region_overrides = Vec::new();
        for (index, raw) in &self.regions {
            let rect = raw.rect.ok_or(format!("regions.{index} needs rect"))?;
            let invention_prob = raw
                .invention_prob
                .ok_or(format!("regions.{index} needs invention_prob or invention_ratio"))?;
            region_overrides.push(RegionOverride { rect, invention_prob });
        }
        let fitness = match self.fitness.unwrap_or(FitnessKind::F1) {
            FitnessKind::F1 => {
                if self.weight_f1.is_some() || self.weight_f2.is_some() {
                    return Err("fitness weights require fitness = weighted".into());
                }
                FitnessSpec::F1
            }
            FitnessKind::F2 => {
                if self.weight_f1.is_some() || self.weight_f2.is_some() {
                    return Err("fitness weights require fitness = weighted".into());
                }
                FitnessSpec::F2
            }
            FitnessKind::Weighted => FitnessSpec::weighted(
                self.weight_f1.unwrap_or(1.0),
                self.weight_f2.unwrap_or(1.0),
            )
            .map_err(|e| e.to_string())?,
        };
        let selection = match (self.bc_selection.clone(), &self.bc_fixed_ids) {
            (Some(BroadcastSelection::FixedIds(_)), Some(ids)) => BroadcastSelection::FixedIds(ids.clone()),
            (Some(BroadcastSelection::FixedIds(_)), None) => {
                return Err("broadcast.selection = fixed requires broadcast.fixed_ids".into())
            }
            (Some(other), _) => other,
            (None, _) => defaults.broadcast.selection.clone(),
        };
        let config = SimConfig {
            world: WorldSpec {
                rows: self.rows.unwrap_or(defaults.world.rows),
                cols: self.cols.unwrap_or(defaults.world.cols),
                topology: self.topology.unwrap_or(defaults.world.topology),
                placement,
                barriers,
                region_overrides,
            },
            fitness,
            iterations: self.iterations.unwrap_or(defaults.iterations),
            invention_prob: self.invention_prob.unwrap_or(defaults.invention_prob),
            rate_of_change: self.rate_of_change.unwrap_or(defaults.rate_of_change),
            broadcast: BroadcastPolicy {
                count: self.bc_count.unwrap_or(defaults.broadcast.count),
                selection,
                period: self.bc_period.unwrap_or(defaults.broadcast.period),
            },
            mental_simulation: self.mental_simulation.unwrap_or(defaults.mental_simulation),
            seed: self.seed.unwrap_or(defaults.seed),
            update_mode: self.update_mode.unwrap_or(defaults.update_mode),
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

/// Keys that describe the experiment rather than one simulation; these
/// cannot be swept.
const PLAN_KEYS: [&str; 3] = ["replicates", "snapshot_iterations", "out.dir"];

pub fn parse_plan(text: &str) -> Result<ExperimentPlan, ConfigError> {
    let mut settings = RawSettings::default();
    let mut replicates: u32 = 1;
    let mut out_dir = PathBuf::from("out");
    let mut snapshot_iterations: Vec<u32> = Vec::new();
    let mut sweeps: Vec<(SweepSpec, usize)> = Vec::new();

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |message: String| ConfigError::Line { line: line_no, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(at("missing key before `=`".into()));
        }
        match key {
            "replicates" => {
                let v: u32 = parse_number(value, "a positive integer").map_err(&at)?;
                if v == 0 {
                    return Err(at("replicates must be at least 1".into()));
                }
                replicates = v;
            }
            "snapshot_iterations" => {
                snapshot_iterations = parse_list(value, "an iteration").map_err(&at)?;
            }
            "out.dir" => {
                if value.is_empty() {
                    return Err(at("out.dir must not be empty".into()));
                }
                out_dir = PathBuf::from(value);
            }
            _ => {
                if let Some(path) = key.strip_prefix("sweep.") {
                    if path == "seed" || PLAN_KEYS.contains(&path) || path.starts_with("sweep.") {
                        return Err(at(format!("`{path}` cannot be swept")));
                    }
                    if sweeps.iter().any(|(s, _)| s.path == path) {
                        return Err(at(format!("duplicate sweep for `{path}`")));
                    }
                    let values: Vec<String> =
                        value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
                    if values.is_empty() {
                        return Err(at(format!("sweep over `{path}` needs at least one value")));
                    }
                    sweeps.push((SweepSpec { path: path.to_string(), values }, line_no));
                } else {
                    settings.set(key, value).map_err(&at)?;
                }
            }
        }
    }

    // Validate every sweep value against the final settings so bad values
    // are reported with the sweep line number.
    for (sweep, line_no) in &sweeps {
        for value in &sweep.values {
            let mut probe = settings.clone();
            probe
                .set(&sweep.path, value)
                .map_err(|message| ConfigError::Line { line: *line_no, message })?;
        }
    }

    let base = settings.build().map_err(|message| ConfigError::Plan { message })?;

    let sweeps: Vec<SweepSpec> = sweeps.into_iter().map(|(s, _)| s).collect();
    let mut assignments: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for sweep in &sweeps {
        let mut next = Vec::with_capacity(assignments.len() * sweep.values.len());
        for prefix in &assignments {
            for value in &sweep.values {
                let mut combo = prefix.clone();
                combo.push((sweep.path.clone(), value.clone()));
                next.push(combo);
            }
        }
        assignments = next;
    }

    let mut variants = Vec::with_capacity(assignments.len());
    for (id, params) in assignments.into_iter().enumerate() {
        let mut varied = settings.clone();
        for (path, value) in &params {
            varied.set(path, value).map_err(|message| ConfigError::Plan {
                message: format!("variant {id} ({path} = {value}): {message}"),
            })?;
        }
        let config = varied.build().map_err(|message| ConfigError::Plan {
            message: if params.is_empty() {
                message
            } else {
                format!("variant {id}: {message}")
            },
        })?;
        variants.push(Variant { id, params, config });
    }

    Ok(ExperimentPlan { base, sweeps, variants, replicates, out_dir, snapshot_iterations })
}
