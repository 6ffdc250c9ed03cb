//! The simulation engine: configuration, the iteration loop, broadcasting.
//!
//! Each iteration every agent either invents a variation of its own action or
//! scans its neighbourhood for a fitter one to imitate. Under the default
//! synchronous update all observations read the state committed at the start
//! of the iteration and adoptions land together at the end; because every
//! agent also draws from its own `(iteration, id)`-keyed random stream, the
//! order agents are processed in cannot affect the outcome. The sequential
//! mode commits each adoption immediately instead.

use crate::action::Action;
use crate::agent::{invent, AgentId, AgentState};
use crate::fitness::{FitnessSpec, FitnessSpecError, Landscape};
use crate::metrics::{self, MetricsRow};
use crate::world::{self, Cell, Placement, WorldSpec};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BroadcastSelection {
    /// The same configured agents every active iteration.
    FixedIds(Vec<AgentId>),
    /// Freshly drawn without replacement each active iteration.
    RandomEachIteration,
    /// The highest-fitness agents, ties broken toward lower ids.
    Fittest,
}

/// Broadcasting: selected agents whose actions are observable by everyone,
/// not just their neighbours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BroadcastPolicy {
    /// Number of broadcasters; 0 disables broadcasting.
    pub count: usize,
    pub selection: BroadcastSelection,
    /// Broadcasters are active every `period`-th iteration; 1 = continuous.
    pub period: u32,
}

impl Default for BroadcastPolicy {
    fn default() -> Self {
        BroadcastPolicy { count: 0, selection: BroadcastSelection::RandomEachIteration, period: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UpdateMode {
    #[default]
    Synchronous,
    Sequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub world: WorldSpec,
    pub fitness: FitnessSpec,
    pub iterations: u32,
    /// Probability of attempting invention rather than imitation; a ratio of
    /// r parts invention to s parts imitation encodes as r / (r + s).
    pub invention_prob: f64,
    /// Per-part mutation probability during invention.
    pub rate_of_change: f64,
    pub broadcast: BroadcastPolicy,
    /// When false, invented candidates are adopted unconditionally and an
    /// imitating agent adopts a uniformly chosen candidate unconditionally.
    pub mental_simulation: bool,
    pub seed: u64,
    pub update_mode: UpdateMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            world: WorldSpec::default(),
            fitness: FitnessSpec::F1,
            iterations: 100,
            invention_prob: 0.5,
            rate_of_change: 1.0 / 6.0,
            broadcast: BroadcastPolicy::default(),
            mental_simulation: true,
            seed: 0,
            update_mode: UpdateMode::Synchronous,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("world must have at least one row and one column")]
    EmptyWorld,
    #[error("placement density must lie in (0, 1]")]
    DensityOutOfRange,
    #[error("explicit placement needs at least one cell")]
    NoCells,
    #[error("placement cell ({0}, {1}) is outside the grid")]
    CellOutOfBounds(usize, usize),
    #[error("placement cell ({0}, {1}) is listed twice")]
    DuplicateCell(usize, usize),
    #[error("barrier interface {0}|{1} does not fit the grid columns")]
    BarrierOutOfRange(usize, usize),
    #[error("barrier permeability must lie in [0, 1]")]
    PermeabilityOutOfRange,
    #[error("barrier erosion duration must be at least 1")]
    ZeroErosionDuration,
    #[error("region rectangle ({0}, {1})-({2}, {3}) is empty or outside the grid")]
    BadRegion(usize, usize, usize, usize),
    #[error("{name} must lie in [0, 1]")]
    ProbabilityOutOfRange { name: &'static str },
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("broadcast period must be at least 1")]
    ZeroPeriod,
    #[error("broadcast count {count} exceeds the population of {population}")]
    BroadcastCountExceedsPopulation { count: usize, population: usize },
    #[error("fixed broadcaster list must name {expected} distinct agents with ids below {population}")]
    BadFixedBroadcasters { expected: usize, population: usize },
    #[error(transparent)]
    Fitness(#[from] FitnessSpecError),
}

impl SimConfig {
    /// Checks everything that does not depend on the realised population;
    /// [`Simulation::new`] additionally checks broadcaster ids and counts.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let w = &self.world;
        if w.rows == 0 || w.cols == 0 {
            return Err(ValidationError::EmptyWorld);
        }
        match &w.placement {
            Placement::Full => {}
            Placement::RandomDensity(d) => {
                if !(*d > 0.0 && *d <= 1.0) {
                    return Err(ValidationError::DensityOutOfRange);
                }
            }
            Placement::Explicit(cells) => {
                if cells.is_empty() {
                    return Err(ValidationError::NoCells);
                }
                let mut seen = std::collections::HashSet::new();
                for &cell in cells {
                    if !w.in_bounds(cell) {
                        return Err(ValidationError::CellOutOfBounds(cell.0, cell.1));
                    }
                    if !seen.insert(cell) {
                        return Err(ValidationError::DuplicateCell(cell.0, cell.1));
                    }
                }
            }
        }
        for b in &w.barriers {
            if b.left_col + 1 >= w.cols {
                return Err(ValidationError::BarrierOutOfRange(b.left_col, b.left_col + 1));
            }
            if !(0.0..=1.0).contains(&b.base_permeability) {
                return Err(ValidationError::PermeabilityOutOfRange);
            }
            if let Some(e) = b.erosion {
                if e.duration == 0 {
                    return Err(ValidationError::ZeroErosionDuration);
                }
            }
        }
        for r in &w.region_overrides {
            let rect = r.rect;
            if rect.bottom < rect.top || rect.right < rect.left || rect.bottom >= w.rows || rect.right >= w.cols {
                return Err(ValidationError::BadRegion(rect.top, rect.left, rect.bottom, rect.right));
            }
            if !(0.0..=1.0).contains(&r.invention_prob) {
                return Err(ValidationError::ProbabilityOutOfRange { name: "region invention probability" });
            }
        }
        self.fitness.validate()?;
        if self.iterations == 0 {
            return Err(ValidationError::ZeroIterations);
        }
        if !(0.0..=1.0).contains(&self.invention_prob) {
            return Err(ValidationError::ProbabilityOutOfRange { name: "invention probability" });
        }
        if !(0.0..=1.0).contains(&self.rate_of_change) {
            return Err(ValidationError::ProbabilityOutOfRange { name: "rate of change" });
        }
        if self.broadcast.period == 0 {
            return Err(ValidationError::ZeroPeriod);
        }
        Ok(())
    }
}

/// Which agents broadcast at iteration `t`; empty when broadcasting is
/// disabled or `t` is not a multiple of the period.
pub fn select_broadcasters(
    policy: &BroadcastPolicy,
    agents: &[AgentState],
    t: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<AgentId> {
    if policy.count == 0 || t % policy.period != 0 {
        return Vec::new();
    }
    match &policy.selection {
        BroadcastSelection::FixedIds(ids) => ids.clone(),
        BroadcastSelection::RandomEachIteration => {
            rand::seq::index::sample(rng, agents.len(), policy.count).into_iter().collect()
        }
        BroadcastSelection::Fittest => {
            let mut ids: Vec<AgentId> = (0..agents.len()).collect();
            ids.sort_by(|&a, &b| {
                agents[b]
                    .current_fitness
                    .partial_cmp(&agents[a].current_fitness)
                    .expect("fitness is never NaN")
                    .then(a.cmp(&b))
            });
            ids.truncate(policy.count);
            ids
        }
    }
}

/// The broadcaster one agent attends to: the most similar action by Hamming
/// distance, ties toward the lower id, the agent itself excluded.
pub fn choose_broadcaster_for(
    agent: &AgentState,
    broadcasters: &[AgentId],
    action_of: &dyn Fn(AgentId) -> Action,
) -> Option<(AgentId, Action)> {
    let mut best: Option<(u32, AgentId, Action)> = None;
    for &id in broadcasters {
        if id == agent.id {
            continue;
        }
        let action = action_of(id);
        let distance = agent.current_action.hamming_distance(&action);
        let closer = match &best {
            None => true,
            Some((d, b, _)) => distance < *d || (distance == *d && id < *b),
        };
        if closer {
            best = Some((distance, id, action));
        }
    }
    best.map(|(_, id, action)| (id, action))
}

/// Agent processing order inside one iteration. Synchronous runs commit the
/// same state either way; the reversed order exists to demonstrate that.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProcessingOrder {
    #[default]
    AscendingIds,
    DescendingIds,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Iterations at which to render a grid snapshot (0 = initial state).
    pub snapshot_iterations: Vec<u32>,
    pub processing_order: ProcessingOrder,
}

/// Per-agent bookkeeping over a whole run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentRunStats {
    pub id: AgentId,
    pub position: Cell,
    /// Iterations in which the agent attempted invention / imitation.
    pub invention_choices: u32,
    pub imitation_choices: u32,
    /// Adoptions actually committed, split by where the action came from.
    pub invention_adoptions: u32,
    pub imitation_adoptions: u32,
    /// First iteration at which the agent held a globally optimal action.
    pub first_optimal_iteration: Option<u32>,
    /// `(invention_choices, imitation_choices)` frozen at that moment.
    pub choices_at_first_optimal: Option<(u32, u32)>,
    /// `(invention_adoptions, imitation_adoptions)` frozen at that moment.
    pub adoptions_at_first_optimal: Option<(u32, u32)>,
}

pub struct RunResult {
    pub metrics: Vec<MetricsRow>,
    /// `(iteration, rendered grid)` pairs, in request order.
    pub snapshots: Vec<(u32, String)>,
    pub agent_stats: Vec<AgentRunStats>,
}

pub struct Simulation {
    config: SimConfig,
    landscape: Landscape,
    agents: Vec<AgentState>,
    /// Row-major cell -> occupying agent.
    cell_index: Vec<Option<AgentId>>,
    t: u32,
    stats: Vec<AgentRunStats>,
    order: ProcessingOrder,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Simulation, ValidationError> {
        config.validate()?;
        let landscape = Landscape::enumerate(&config.fitness);
        let mut placement_rng = rng::stream(config.seed, &[rng::STREAM_PLACEMENT]);
        let cells = config.world.place(&mut placement_rng);

        let mut cell_index = vec![None; config.world.cell_count()];
        let mut agents = Vec::with_capacity(cells.len());
        for (id, &cell) in cells.iter().enumerate() {
            let invention_prob = config.world.effective_invention_prob(cell, config.invention_prob);
            agents.push(AgentState::new(id, cell, &config.fitness, invention_prob));
            cell_index[cell.0 * config.world.cols + cell.1] = Some(id);
        }

        let population = agents.len();
        let policy = &config.broadcast;
        if policy.count > 0 {
            if policy.count > population {
                return Err(ValidationError::BroadcastCountExceedsPopulation {
                    count: policy.count,
                    population,
                });
            }
            if let BroadcastSelection::FixedIds(ids) = &policy.selection {
                let mut distinct: Vec<AgentId> = ids.clone();
                distinct.sort_unstable();
                distinct.dedup();
                if ids.len() != policy.count || distinct.len() != ids.len() || ids.iter().any(|&id| id >= population)
                {
                    return Err(ValidationError::BadFixedBroadcasters { expected: policy.count, population });
                }
            }
        }

        let stats = agents
            .iter()
            .map(|a| {
                let optimal = landscape.is_maximizer(a.current_action.index());
                AgentRunStats {
                    id: a.id,
                    position: a.position,
                    invention_choices: 0,
                    imitation_choices: 0,
                    invention_adoptions: 0,
                    imitation_adoptions: 0,
                    first_optimal_iteration: optimal.then_some(0),
                    choices_at_first_optimal: optimal.then_some((0, 0)),
                    adoptions_at_first_optimal: optimal.then_some((0, 0)),
                }
            })
            .collect();

        Ok(Simulation {
            config: config.clone(),
            landscape,
            agents,
            cell_index,
            t: 0,
            stats,
            order: ProcessingOrder::AscendingIds,
        })
    }

    pub fn iteration(&self) -> u32 {
        self.t
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn landscape(&self) -> &Landscape {
        &self.landscape
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn stats(&self) -> &[AgentRunStats] {
        &self.stats
    }

    fn occupant(&self, cell: Cell) -> Option<AgentId> {
        self.cell_index[cell.0 * self.config.world.cols + cell.1]
    }

    /// Advance one iteration: every agent invents or imitates once.
    pub fn step(&mut self) {
        self.t += 1;
        let t = self.t;
        let seed = self.config.seed;
        let synchronous = self.config.update_mode == UpdateMode::Synchronous;

        let broadcasters = {
            let mut bc_rng = rng::stream(seed, &[rng::STREAM_BROADCAST, t as u64]);
            select_broadcasters(&self.config.broadcast, &self.agents, t, &mut bc_rng)
        };

        // Under synchronous update every observation reads the actions
        // committed at the start of the iteration.
        let baseline: Vec<Action> = self.agents.iter().map(|a| a.current_action).collect();

        let ids: Vec<AgentId> = match self.order {
            ProcessingOrder::AscendingIds => (0..self.agents.len()).collect(),
            ProcessingOrder::DescendingIds => (0..self.agents.len()).rev().collect(),
        };

        let mut staged: Vec<Option<(Action, bool)>> = vec![None; self.agents.len()];
        for id in ids {
            let mut agent_rng = rng::stream(seed, &[rng::STREAM_AGENT, t as u64, id as u64]);
            let (invented, decision) = {
                let agent = &self.agents[id];
                let action_of = |other: AgentId| -> Action {
                    if synchronous {
                        baseline[other]
                    } else {
                        self.agents[other].current_action
                    }
                };
                let u: f64 = agent_rng.random();
                if u < agent.invention_prob {
                    let candidate =
                        invent(&agent.current_action, &agent.kbo, self.config.rate_of_change, &mut agent_rng);
                    let adopt = !self.config.mental_simulation || agent.would_adopt(&candidate, &self.config.fitness);
                    (true, adopt.then_some(candidate))
                } else {
                    let observe = |cell: Cell| -> Option<(AgentId, Action)> {
                        self.occupant(cell).map(|other| (other, action_of(other)))
                    };
                    let broadcaster = choose_broadcaster_for(agent, &broadcasters, &action_of);
                    let candidates = world::imitation_candidates(
                        &self.config.world,
                        agent.position,
                        t,
                        &observe,
                        broadcaster,
                        &mut agent_rng,
                    );
                    let choice = if self.config.mental_simulation {
                        agent.scan_candidates(&candidates, &self.config.fitness)
                    } else {
                        // Without mental simulation the first entry of the
                        // already-shuffled list is a uniform choice.
                        candidates.first().map(|(_, action)| *action)
                    };
                    (false, choice)
                }
            };
            if invented {
                self.stats[id].invention_choices += 1;
            } else {
                self.stats[id].imitation_choices += 1;
            }
            if let Some(action) = decision {
                if synchronous {
                    staged[id] = Some((action, invented));
                } else {
                    self.commit(id, action, invented);
                }
            }
        }
        if synchronous {
            for id in 0..staged.len() {
                if let Some((action, invented)) = staged[id].take() {
                    self.commit(id, action, invented);
                }
            }
        }
    }

    fn commit(&mut self, id: AgentId, action: Action, invented: bool) {
        let spec = self.config.fitness;
        let agent = &mut self.agents[id];
        if self.config.mental_simulation {
            agent.learn_and_implement(action, &spec);
        } else {
            agent.adopt_unchecked(action, &spec);
        }
        let stats = &mut self.stats[id];
        if invented {
            stats.invention_adoptions += 1;
        } else {
            stats.imitation_adoptions += 1;
        }
        if stats.first_optimal_iteration.is_none() && self.landscape.is_maximizer(agent.current_action.index()) {
            stats.first_optimal_iteration = Some(self.t);
            stats.choices_at_first_optimal = Some((stats.invention_choices, stats.imitation_choices));
            stats.adoptions_at_first_optimal = Some((stats.invention_adoptions, stats.imitation_adoptions));
        }
    }

    pub fn metrics_row(&self) -> MetricsRow {
        let actions: Vec<Action> = self.agents.iter().map(|a| a.current_action).collect();
        metrics::collect(self.t, &actions, &self.config.fitness, &self.landscape)
    }

    pub fn render_snapshot(&self) -> String {
        world::render_snapshot(self.config.world.rows, self.config.world.cols, |cell| {
            self.occupant(cell).map(|id| self.agents[id].current_action.index())
        })
    }
}

/// Run to completion with default options.
pub fn run(config: &SimConfig) -> Result<RunResult, ValidationError> {
    run_with(config, &RunOptions::default(), |_, _| {})
}

/// Run to completion, recording metrics at iteration 0 and after every
/// iteration, rendering snapshots where requested, and calling `observer`
/// after every recorded state.
pub fn run_with(
    config: &SimConfig,
    options: &RunOptions,
    mut observer: impl FnMut(u32, &Simulation),
) -> Result<RunResult, ValidationError> {
    let mut sim = Simulation::new(config)?;
    sim.order = options.processing_order;
    let mut metrics_rows = Vec::with_capacity(config.iterations as usize + 1);
    let mut snapshots = Vec::new();
    let record = |sim: &Simulation, rows: &mut Vec<MetricsRow>, snaps: &mut Vec<(u32, String)>| {
        rows.push(sim.metrics_row());
        if options.snapshot_iterations.contains(&sim.iteration()) {
            snaps.push((sim.iteration(), sim.render_snapshot()));
        }
    };
    record(&sim, &mut metrics_rows, &mut snapshots);
    observer(0, &sim);
    for _ in 0..config.iterations {
        sim.step();
        record(&sim, &mut metrics_rows, &mut snapshots);
        observer(sim.iteration(), &sim);
    }
    Ok(RunResult { metrics: metrics_rows, snapshots, agent_stats: sim.stats })
}
