//! The spatial world: a rectangular grid, its neighbourhoods, and barriers.
//!
//! Agents sit on grid cells (at most one per cell) and observe their Moore
//! neighbourhood — the eight surrounding cells, wrapping on a torus and
//! clipped on a bounded grid. Vertical barriers between adjacent columns
//! block observation across the interface with a per-iteration permeability
//! that can erode linearly over time.

use crate::action::Action;
use crate::agent::AgentId;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// `(row, column)`, zero-based.
pub type Cell = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Torus,
    Bounded,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    /// Every cell occupied.
    Full,
    /// A fixed fraction of cells occupied, chosen by the placement stream.
    RandomDensity(f64),
    /// Exactly the listed cells occupied.
    Explicit(Vec<Cell>),
}

/// Linear erosion schedule: permeability climbs from the base value starting
/// at `start`, reaching full permeability after `duration` iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Erosion {
    pub start: u32,
    pub duration: u32,
}

/// Vertical interface between column `left_col` and `left_col + 1`, spanning
/// every row.
#[derive(Clone, Debug, PartialEq)]
pub struct Barrier {
    pub left_col: usize,
    pub base_permeability: f64,
    pub erosion: Option<Erosion>,
}

impl Barrier {
    /// Probability that an observation crosses this barrier at iteration `t`.
    pub fn permeability(&self, t: u32) -> f64 {
        let Some(Erosion { start, duration }) = self.erosion else {
            return self.base_permeability;
        };
        if t < start {
            self.base_permeability
        } else if t >= start + duration {
            1.0
        } else {
            let progress = (t - start) as f64 / duration as f64;
            self.base_permeability + (1.0 - self.base_permeability) * progress
        }
    }

    /// Whether a link between the two cells spans this column interface.
    /// Diagonal links count. Callers exclude links that wrap around a torus
    /// seam; a barrier partitions by column interval only.
    pub fn separates(&self, a: Cell, b: Cell) -> bool {
        let (lo, hi) = if a.1 <= b.1 { (a.1, b.1) } else { (b.1, a.1) };
        lo <= self.left_col && hi >= self.left_col + 1
    }
}

/// Axis-aligned cell rectangle, bounds inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl Rect {
    pub fn contains(&self, (r, c): Cell) -> bool {
        (self.top..=self.bottom).contains(&r) && (self.left..=self.right).contains(&c)
    }
}

/// Regional parameter override: agents inside the rectangle invent with a
/// different probability than the global setting.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionOverride {
    pub rect: Rect,
    pub invention_prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldSpec {
    pub rows: usize,
    pub cols: usize,
    pub topology: Topology,
    pub placement: Placement,
    pub barriers: Vec<Barrier>,
    pub region_overrides: Vec<RegionOverride>,
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            rows: 10,
            cols: 10,
            topology: Topology::Torus,
            placement: Placement::Full,
            barriers: Vec::new(),
            region_overrides: Vec::new(),
        }
    }
}

/// Moore offsets in fixed scan order (row-major around the centre).
const MOORE_OFFSETS: [(isize, isize); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

impl WorldSpec {
    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn in_bounds(&self, (r, c): Cell) -> bool {
        r < self.rows && c < self.cols
    }

    /// The Moore neighbourhood of a cell, in fixed scan order. On a torus the
    /// offsets wrap; on a bounded grid they clip, leaving 3 cells in a corner
    /// and 5 on an edge. Offsets that land on the same cell (grids narrower
    /// than three in either dimension) are reported once, and the cell itself
    /// is never included.
    pub fn neighbors(&self, cell: Cell) -> Vec<Cell> {
        assert!(self.in_bounds(cell), "cell {cell:?} outside {}x{} grid", self.rows, self.cols);
        let (r, c) = (cell.0 as isize, cell.1 as isize);
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        let mut out = Vec::with_capacity(8);
        for (dr, dc) in MOORE_OFFSETS {
            let target = match self.topology {
                Topology::Torus => ((r + dr).rem_euclid(rows) as usize, (c + dc).rem_euclid(cols) as usize),
                Topology::Bounded => {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nr >= rows || nc < 0 || nc >= cols {
                        continue;
                    }
                    (nr as usize, nc as usize)
                }
            };
            if target != cell && !out.contains(&target) {
                out.push(target);
            }
        }
        out
    }

    /// True when a neighbour link reaches across the vertical torus seam
    /// (leftmost to rightmost column). Barriers never filter seam links.
    pub fn link_wraps_columns(&self, a: Cell, b: Cell) -> bool {
        if self.topology != Topology::Torus || self.cols <= 2 {
            return false;
        }
        let (lo, hi) = if a.1 <= b.1 { (a.1, b.1) } else { (b.1, a.1) };
        hi - lo == self.cols - 1
    }

    /// Invention probability at a cell: the last matching regional override
    /// wins, otherwise the global default.
    pub fn effective_invention_prob(&self, cell: Cell, global: f64) -> f64 {
        self.region_overrides
            .iter()
            .rev()
            .find(|o| o.rect.contains(cell))
            .map(|o| o.invention_prob)
            .unwrap_or(global)
    }

    /// Occupied cells in row-major order. `Full` takes every cell;
    /// `RandomDensity(d)` draws `max(1, round(d * cells))` distinct cells
    /// from the placement stream; `Explicit` uses the listed cells.
    pub fn place(&self, rng: &mut ChaCha8Rng) -> Vec<Cell> {
        match &self.placement {
            Placement::Full => (0..self.rows).flat_map(|r| (0..self.cols).map(move |c| (r, c))).collect(),
            Placement::RandomDensity(density) => {
                let total = self.cell_count();
                let count = ((density * total as f64).round() as usize).clamp(1, total);
                let mut picks: Vec<usize> = rand::seq::index::sample(rng, total, count).into_iter().collect();
                picks.sort_unstable();
                picks.into_iter().map(|i| (i / self.cols, i % self.cols)).collect()
            }
            Placement::Explicit(cells) => {
                let mut cells = cells.clone();
                cells.sort_unstable();
                cells
            }
        }
    }
}

/// Assemble the shuffled candidate list one imitating agent scans.
///
/// Occupied neighbour cells are looked up through `observe`; a neighbour
/// whose link crosses one or more barriers survives only if an independent
/// permeability draw passes for each crossed barrier (seam links are never
/// filtered). The selected broadcaster, if any, joins the list unless that
/// agent is already present, and the whole list is returned in uniformly
/// random order.
pub fn imitation_candidates(
    world: &WorldSpec,
    cell: Cell,
    t: u32,
    observe: &dyn Fn(Cell) -> Option<(AgentId, Action)>,
    broadcaster: Option<(AgentId, Action)>,
    rng: &mut ChaCha8Rng,
) -> Vec<(AgentId, Action)> {
    let mut out: Vec<(AgentId, Action)> = Vec::with_capacity(9);
    for neighbor in world.neighbors(cell) {
        let Some(entry) = observe(neighbor) else { continue };
        let mut blocked = false;
        if !world.link_wraps_columns(cell, neighbor) {
            for barrier in &world.barriers {
                if barrier.separates(cell, neighbor) && rng.random::<f64>() >= barrier.permeability(t) {
                    blocked = true;
                }
            }
        }
        if !blocked {
            out.push(entry);
        }
    }
    if let Some((id, action)) = broadcaster {
        if !out.iter().any(|(existing, _)| *existing == id) {
            out.push((id, action));
        }
    }
    out.shuffle(rng);
    out
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SnapshotParseError {
    #[error("snapshot line {line}: unreadable cell `{token}`")]
    BadToken { line: usize, token: String },
    #[error("snapshot line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("snapshot is empty")]
    Empty,
}

/// Render a grid snapshot: one line per row, cells space-separated, each cell
/// the occupant's action index or `.` when empty.
pub fn render_snapshot(rows: usize, cols: usize, occupant: impl Fn(Cell) -> Option<u16>) -> String {
    let mut out = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(' ');
            }
            match occupant((r, c)) {
                Some(index) => out.push_str(&index.to_string()),
                None => out.push('.'),
            }
        }
        out.push('\n');
    }
    out
}

/// Parse the snapshot text format back into per-cell occupancy.
pub fn parse_snapshot(text: &str) -> Result<Vec<Vec<Option<u16>>>, SnapshotParseError> {
    let mut grid: Vec<Vec<Option<u16>>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for token in line.split_whitespace() {
            if token == "." {
                row.push(None);
                continue;
            }
            let index: u16 = token
                .parse()
                .ok()
                .filter(|&v| (v as usize) < crate::action::ACTION_COUNT)
                .ok_or_else(|| SnapshotParseError::BadToken { line: i + 1, token: token.to_string() })?;
            row.push(Some(index));
        }
        if let Some(first) = grid.first() {
            if row.len() != first.len() {
                return Err(SnapshotParseError::RaggedRow { line: i + 1, expected: first.len(), found: row.len() });
            }
        }
        grid.push(row);
    }
    if grid.is_empty() {
        return Err(SnapshotParseError::Empty);
    }
    Ok(grid)
}
