//! Shortest paths over the occupancy grid: A* for production, Dijkstra as
//! an exhaustive oracle.
//!
//! Costs are tracked as integer step counts (straight, diagonal) and only
//! converted to meters via one closed form, [`grid_length_m`]. Because
//! `s + d*sqrt(2)` determines (s, d) uniquely, two searches that find
//! optimal paths always report bit-identical costs, and a replayed path
//! accumulates exactly the planner's length.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geometry::Vec3;
use crate::scene::{OccupancyGrid, Scene};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("no path between start and goal")]
    NoPath,
    #[error("{0} position is not navigable")]
    BadEndpoint(&'static str),
}

/// Meters for a path of `straight` axis steps, `diagonal` diagonal steps,
/// and any non-grid remainder in cell units. The single source of truth for
/// path lengths; both the planner and the episode tracker use it so equal
/// step counts give bit-equal lengths.
pub fn grid_length_m(straight: u64, diagonal: u64, extra_cells: f64, cell_size: f64) -> f64 {
    (straight as f64 + std::f64::consts::SQRT_2 * diagonal as f64 + extra_cells) * cell_size
}

/// An optimal cell-center path. Consecutive points are 8-neighbors; the
/// first is the start cell center and the last is the goal cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoints {
    pub points: Vec<Vec3>,
    pub cells: Vec<(usize, usize)>,
    pub straight_steps: u64,
    pub diagonal_steps: u64,
    pub total_cost_m: f64,
}

impl Waypoints {
    /// Collapses collinear runs to their endpoints. The result is no longer
    /// cell-adjacent; each hop is a straight or pure-diagonal segment.
    pub fn thinned(&self) -> Vec<Vec3> {
        if self.points.len() <= 2 {
            return self.points.clone();
        }
        let dir = |a: (usize, usize), b: (usize, usize)| {
            (b.0 as isize - a.0 as isize, b.1 as isize - a.1 as isize)
        };
        let mut out = vec![self.points[0]];
        for i in 1..self.points.len() - 1 {
            if dir(self.cells[i - 1], self.cells[i]) != dir(self.cells[i], self.cells[i + 1]) {
                out.push(self.points[i]);
            }
        }
        out.push(*self.points.last().unwrap());
        out
    }
}

const DIRS: [(isize, isize); 8] = [
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Exact accumulated cost as integer step counts; ordered by its real value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct StepCost {
    straight: u64,
    diagonal: u64,
}

impl StepCost {
    const ZERO: StepCost = StepCost { straight: 0, diagonal: 0 };

    fn value(&self) -> f64 {
        self.straight as f64 + std::f64::consts::SQRT_2 * self.diagonal as f64
    }

    fn plus(&self, diagonal: bool) -> StepCost {
        StepCost {
            straight: self.straight + u64::from(!diagonal),
            diagonal: self.diagonal + u64::from(diagonal),
        }
    }
}

/// Min-heap entry: priority value first, then (row, col) for deterministic
/// lexicographic tie-breaking.
struct HeapEntry {
    priority: f64,
    row: usize,
    col: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the smallest key out.
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.row.cmp(&self.row))
            .then_with(|| other.col.cmp(&self.col))
    }
}

fn octile(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dr = a.0.abs_diff(b.0) as f64;
    let dc = a.1.abs_diff(b.1) as f64;
    let (lo, hi) = if dr < dc { (dr, dc) } else { (dc, dr) };
    (hi - lo) + std::f64::consts::SQRT_2 * lo
}

struct SearchResult {
    cost: StepCost,
    parents: Vec<Option<(usize, usize)>>,
}

/// Shared search core. With `heuristic` it is A* under the octile heuristic;
/// without, plain Dijkstra. Both expand in (priority, row, col) order and
/// relax edges identically, so they always agree on the optimal step counts.
fn search(
    grid: &OccupancyGrid,
    start: (usize, usize),
    goal: (usize, usize),
    heuristic: bool,
) -> Option<SearchResult> {
    let cols = grid.cols();
    let idx = |r: usize, c: usize| r * cols + c;
    let mut best: Vec<Option<StepCost>> = vec![None; cols * grid.rows()];
    let mut parents: Vec<Option<(usize, usize)>> = vec![None; cols * grid.rows()];
    let mut heap = BinaryHeap::new();

    best[idx(start.0, start.1)] = Some(StepCost::ZERO);
    let h0 = if heuristic { octile(start, goal) } else { 0.0 };
    heap.push(HeapEntry { priority: h0, row: start.0, col: start.1 });

    while let Some(HeapEntry { priority, row, col }) = heap.pop() {
        let g = best[idx(row, col)].expect("queued cells always have a cost");
        let h = if heuristic { octile((row, col), goal) } else { 0.0 };
        if priority > g.value() + h {
            continue; // stale entry superseded by a better relaxation
        }
        if (row, col) == goal {
            return Some(SearchResult { cost: g, parents });
        }
        for (dr, dc) in DIRS {
            let (nr, nc) = (row as isize + dr, col as isize + dc);
            if !grid.in_bounds(nr, nc) {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            if grid.is_blocked(nr, nc) {
                continue;
            }
            let diagonal = dr != 0 && dc != 0;
            if diagonal {
                // No corner cutting: both orthogonal neighbors must be free.
                let side_a = ((row as isize + dr) as usize, col);
                let side_b = (row, (col as isize + dc) as usize);
                if grid.is_blocked(side_a.0, side_a.1) || grid.is_blocked(side_b.0, side_b.1) {
                    continue;
                }
            }
            let candidate = g.plus(diagonal);
            let better = match best[idx(nr, nc)] {
                None => true,
                Some(old) => candidate.value() < old.value(),
            };
            if better {
                best[idx(nr, nc)] = Some(candidate);
                parents[idx(nr, nc)] = Some((row, col));
                let nh = if heuristic { octile((nr, nc), goal) } else { 0.0 };
                heap.push(HeapEntry { priority: candidate.value() + nh, row: nr, col: nc });
            }
        }
    }
    None
}

fn endpoint_cell(
    scene: &Scene,
    pos: Vec3,
    which: &'static str,
) -> Result<(usize, usize), PathError> {
    match scene.grid.cell_of(pos.x, pos.z) {
        Some((r, c)) if !scene.grid.is_blocked(r, c) => Ok((r, c)),
        _ => Err(PathError::BadEndpoint(which)),
    }
}

/// Cost-optimal 8-connected path between the cells containing `start` and
/// `goal`, as floor-level cell centers.
pub fn shortest_path(scene: &Scene, start: Vec3, goal: Vec3) -> Result<Waypoints, PathError> {
    let start_cell = endpoint_cell(scene, start, "start")?;
    let goal_cell = endpoint_cell(scene, goal, "goal")?;
    let result = search(&scene.grid, start_cell, goal_cell, true).ok_or(PathError::NoPath)?;

    let mut cells = vec![goal_cell];
    let cols = scene.grid.cols();
    while let Some(prev) = result.parents[cells.last().unwrap().0 * cols + cells.last().unwrap().1]
    {
        cells.push(prev);
    }
    cells.reverse();
    debug_assert_eq!(cells[0], start_cell);

    let points: Vec<Vec3> =
        cells.iter().map(|&(r, c)| scene.grid.cell_center(r, c)).collect();
    Ok(Waypoints {
        points,
        cells,
        straight_steps: result.cost.straight,
        diagonal_steps: result.cost.diagonal,
        total_cost_m: grid_length_m(
            result.cost.straight,
            result.cost.diagonal,
            0.0,
            scene.grid.cell_size(),
        ),
    })
}

/// Heuristic-free exhaustive search returning only the optimal cost in
/// meters; the test oracle for [`shortest_path`].
pub fn dijkstra_oracle(scene: &Scene, start: Vec3, goal: Vec3) -> Result<f64, PathError> {
    let start_cell = endpoint_cell(scene, start, "start")?;
    let goal_cell = endpoint_cell(scene, goal, "goal")?;
    let result = search(&scene.grid, start_cell, goal_cell, false).ok_or(PathError::NoPath)?;
    Ok(grid_length_m(
        result.cost.straight,
        result.cost.diagonal,
        0.0,
        scene.grid.cell_size(),
    ))
}
