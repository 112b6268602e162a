use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use super::{PlannerError, PlannerLimits};
use crate::grid::Cell;
use crate::perception::CostMap;
use crate::terrain::Pose2D;

/// 8-connected cell path on the cost-map starting at the robot cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPath {
    pub cells: Vec<Cell>,
    /// Accumulated traversal cost.
    pub cost: f64,
    pub resolution: f64,
    /// Robot cell.
    pub center: Cell,
    /// World pose of the window the path was planned in.
    pub frame: Pose2D,
}

impl WaypointPath {
    pub fn with_frame(mut self, frame: Pose2D) -> Self {
        self.frame = frame;
        self
    }

    /// Robot-frame `(forward, left)` of a path cell in meters.
    pub fn cell_local(&self, cell: Cell) -> (f64, f64) {
        let forward = (cell.row as f64 - self.center.row as f64) * self.resolution;
        let right = (cell.col as f64 - self.center.col as f64) * self.resolution;
        (forward, -right)
    }

    pub fn cell_world(&self, cell: Cell) -> (f64, f64) {
        let (f, l) = self.cell_local(cell);
        self.frame.to_world(f, l)
    }

    /// Sum of per-step traversal costs, recomputed from the cell sequence.
    pub fn recompute_cost(&self, costmap: &CostMap, step_cost: f64) -> f64 {
        self.cells
            .windows(2)
            .fold(0.0, |acc, w| acc + edge_cost(costmap, w[0], w[1], step_cost))
    }
}

#[inline]
fn step_length(a: Cell, b: Cell) -> f64 {
    if a.row != b.row && a.col != b.col {
        SQRT_2
    } else {
        1.0
    }
}

#[inline]
fn edge_cost(costmap: &CostMap, from: Cell, to: Cell, step_cost: f64) -> f64 {
    (costmap.get(to.row, to.col) + step_cost) * step_length(from, to)
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    steps: u32,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (cost, steps, index)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.steps.cmp(&self.steps))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Minimum-cost 8-connected path from the robot cell to `goal`.
///
/// Entering cell `c` costs `(cost(c) + step_cost) * step_length`, with step
/// length 1 for axial and sqrt(2) for diagonal moves. Among equal-cost paths
/// the one with fewer steps wins, then the lexicographically smallest cell
/// sequence. With obstacle masking, cells at or above `c_obs` cannot be
/// entered.
pub fn least_cost_path(
    costmap: &CostMap,
    goal: Cell,
    limits: &PlannerLimits,
) -> Result<WaypointPath, PlannerError> {
    let rows = costmap.rows();
    let cols = costmap.cols();
    if goal.row >= rows || goal.col >= cols {
        return Err(PlannerError::GoalOutside { goal, rows, cols });
    }
    let (cr, cc) = costmap.center();
    let start = Cell::new(cr, cc);
    let idx = |c: Cell| c.row * cols + c.col;
    let cell_of = |i: usize| Cell::new(i / cols, i % cols);
    let blocked = |c: Cell| limits.obstacle_masking && costmap.get(c.row, c.col) >= limits.c_obs;

    let n = rows * cols;
    let mut dist = vec![f64::INFINITY; n];
    let mut steps = vec![u32::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0.0;
    steps[idx(start)] = 0;
    heap.push(Entry {
        cost: 0.0,
        steps: 0,
        index: idx(start),
    });

    while let Some(Entry { cost, steps: s, index }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        if index == idx(goal) {
            break;
        }
        let u = cell_of(index);
        for (dr, dc) in NEIGHBORS {
            let r = u.row as isize + dr;
            let c = u.col as isize + dc;
            if !costmap.grid().contains(r, c) {
                continue;
            }
            let v = Cell::new(r as usize, c as usize);
            if blocked(v) {
                continue;
            }
            let vi = idx(v);
            let nd = cost + edge_cost(costmap, u, v, limits.step_cost);
            let ns = s + 1;
            if nd < dist[vi] || (nd == dist[vi] && ns < steps[vi]) {
                dist[vi] = nd;
                steps[vi] = ns;
                heap.push(Entry {
                    cost: nd,
                    steps: ns,
                    index: vi,
                });
            }
        }
    }

    let gi = idx(goal);
    if !dist[gi].is_finite() {
        return Err(PlannerError::NoPath { goal });
    }

    // Tight edges u -> v satisfy dist[u] + w == dist[v] and steps[u] + 1 == steps[v].
    // Mark cells that reach the goal over tight edges, then walk forward from
    // the start taking the smallest such successor.
    let tight = |u: Cell, v: Cell| -> bool {
        let (ui, vi) = (idx(u), idx(v));
        done[ui]
            && dist[ui].is_finite()
            && steps[ui] != u32::MAX
            && steps[ui] + 1 == steps[vi]
            && dist[ui] + edge_cost(costmap, u, v, limits.step_cost) == dist[vi]
    };
    let mut reaches = vec![false; n];
    reaches[gi] = true;
    let mut stack = vec![goal];
    while let Some(v) = stack.pop() {
        if v == start {
            continue;
        }
        for (dr, dc) in NEIGHBORS {
            let r = v.row as isize + dr;
            let c = v.col as isize + dc;
            if !costmap.grid().contains(r, c) {
                continue;
            }
            let u = Cell::new(r as usize, c as usize);
            if !reaches[idx(u)] && tight(u, v) {
                reaches[idx(u)] = true;
                stack.push(u);
            }
        }
    }

    let mut cells = vec![start];
    let mut cur = start;
    while cur != goal {
        let mut next: Option<Cell> = None;
        for (dr, dc) in NEIGHBORS {
            let r = cur.row as isize + dr;
            let c = cur.col as isize + dc;
            if !costmap.grid().contains(r, c) {
                continue;
            }
            let v = Cell::new(r as usize, c as usize);
            if reaches[idx(v)] && !blocked(v) && tight(cur, v) && next.is_none_or(|b| v < b) {
                next = Some(v);
            }
        }
        cur = next.expect("tight successor exists on an optimal path");
        cells.push(cur);
    }

    Ok(WaypointPath {
        cells,
        cost: dist[gi],
        resolution: costmap.resolution(),
        center: start,
        frame: Pose2D::new(0.0, 0.0, 0.0),
    })
}

/// Window cell for a world goal. Goals beyond the window are projected along
/// their bearing onto the window boundary.
pub fn goal_cell(costmap: &CostMap, pose: &Pose2D, goal: (f64, f64)) -> Cell {
    let (cr, cc) = costmap.center();
    let res = costmap.resolution();
    let (forward, left) = pose.to_local(goal.0, goal.1);
    let dr = forward / res;
    let dc = -left / res;
    let max_up = (costmap.rows() - 1 - cr) as f64;
    let max_down = cr as f64;
    let max_right = (costmap.cols() - 1 - cc) as f64;
    let max_left = cc as f64;
    let limit = |d: f64, pos: f64, neg: f64| -> f64 {
        if d > 0.0 {
            pos / d
        } else if d < 0.0 {
            neg / -d
        } else {
            f64::INFINITY
        }
    };
    let t = limit(dr, max_up, max_down)
        .min(limit(dc, max_right, max_left))
        .min(1.0);
    let row = (cr as f64 + t * dr).round().clamp(0.0, (costmap.rows() - 1) as f64);
    let col = (cc as f64 + t * dc).round().clamp(0.0, (costmap.cols() - 1) as f64);
    Cell::new(row as usize, col as usize)
}

/// Index of the first cell whose arc distance from the robot reaches
/// `lookahead`, or the last index when the path is shorter.
pub fn select_waypoint_index(path: &WaypointPath, lookahead: f64) -> usize {
    let mut arc = 0.0;
    for i in 1..path.cells.len() {
        arc += step_length(path.cells[i - 1], path.cells[i]) * path.resolution;
        if arc >= lookahead {
            return i;
        }
    }
    path.cells.len() - 1
}

/// World coordinates of the lookahead waypoint.
pub fn select_waypoint(path: &WaypointPath, lookahead: f64) -> (f64, f64) {
    path.cell_world(path.cells[select_waypoint_index(path, lookahead)])
}
