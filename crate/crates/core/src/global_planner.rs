//! A* over the inflated costmap.
//!
//! Edge weights are kept as integers in millionths of a cell so that every
//! search order sums the same path to the same total. A path whose cost is
//! reported by two different algorithms is therefore comparable with `==`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::costmap::{Costmap, INSCRIBED};
use crate::error::PlanError;
use crate::kinematics::Point2;
use crate::world::{CellWalker, GridGeometry};

/// Fixed-point scale of path costs (units per cell length).
pub const COST_SCALE: u64 = 1_000_000;
/// Axial step length in cost units.
pub const AXIAL_UNITS: u64 = COST_SCALE;
/// Diagonal step length in cost units, `round(√2 · COST_SCALE)`.
pub const DIAGONAL_UNITS: u64 = 1_414_214;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Scales how strongly inflated costs lengthen an edge.
    pub cost_weight: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { cost_weight: 3.0 }
    }
}

impl PlannerConfig {
    /// Weight of moving onto a cell with `cost`, in cost units.
    pub fn edge_units(&self, diagonal: bool, cost: u8) -> u64 {
        let step = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
        let w = step * (1.0 + self.cost_weight * cost as f64 / 255.0);
        (w * COST_SCALE as f64).round() as u64
    }
}

/// Octile distance between two cells in cost units.
pub fn octile_units(dc: u64, dr: u64) -> u64 {
    let (lo, hi) = if dc < dr { (dc, dr) } else { (dr, dc) };
    AXIAL_UNITS * (hi - lo) + DIAGONAL_UNITS * lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Cell centers (or retained corners after [`simplify`]), start first.
    pub waypoints: Vec<Point2>,
    /// Accumulated cost of the goal in cells.
    pub cost: f64,
    /// Same cost in fixed-point units; exact.
    pub cost_units: u64,
}

impl Path {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn start(&self) -> Option<Point2> {
        self.waypoints.first().copied()
    }

    pub fn goal(&self) -> Option<Point2> {
        self.waypoints.last().copied()
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    /// Closest point on the polyline to `p`, the index of the segment it lies
    /// on, and the distance. `None` for an empty path.
    pub fn closest_point(&self, p: Point2) -> Option<(Point2, usize, f64)> {
        match self.waypoints.len() {
            0 => None,
            1 => Some((self.waypoints[0], 0, self.waypoints[0].distance(&p))),
            _ => {
                let mut best: Option<(Point2, usize, f64)> = None;
                for (i, w) in self.waypoints.windows(2).enumerate() {
                    let q = closest_on_segment(w[0], w[1], p);
                    let d = q.distance(&p);
                    if best.is_none_or(|(_, _, bd)| d < bd) {
                        best = Some((q, i, d));
                    }
                }
                best
            }
        }
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        self.closest_point(p).map_or(f64::INFINITY, |(_, _, d)| d)
    }

    /// The part of the polyline from the point closest to `p` to the goal.
    pub fn remaining_from(&self, p: Point2) -> Path {
        match self.closest_point(p) {
            Some((q, seg, _)) if self.waypoints.len() > 1 => {
                let mut waypoints = vec![q];
                waypoints.extend_from_slice(&self.waypoints[seg + 1..]);
                Path {
                    waypoints,
                    cost: self.cost,
                    cost_units: self.cost_units,
                }
            }
            _ => self.clone(),
        }
    }
}

pub fn closest_on_segment(a: Point2, b: Point2, p: Point2) -> Point2 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return a;
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    Point2::new(a.x + t * dx, a.y + t * dy)
}

fn snap(g: &GridGeometry, p: Point2) -> Option<(usize, usize)> {
    g.world_to_cell(p)
}

const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Minimum-cost 8-connected path from the cell containing `start` to the cell
/// containing `goal`. Cells at or above [`INSCRIBED`] are not traversable and
/// diagonal moves may not cut past such a cell.
///
/// Ties in the open set break on lower f, then lower h, then lower row-major
/// cell index.
pub fn plan(costmap: &Costmap, start: Point2, goal: Point2, config: &PlannerConfig) -> Result<Path, PlanError> {
    let g = costmap.geometry;
    let (sc, sr) = snap(&g, start).ok_or(PlanError::StartOutOfBounds(start))?;
    let (gc, gr) = snap(&g, goal).ok_or(PlanError::GoalOutOfBounds(goal))?;
    let start_cost = costmap.cost(sc, sr);
    if start_cost >= INSCRIBED {
        return Err(PlanError::StartBlocked(start_cost));
    }
    let goal_cost = costmap.cost(gc, gr);
    if goal_cost >= INSCRIBED {
        return Err(PlanError::GoalBlocked(goal_cost));
    }

    let start_idx = g.index(sc, sr);
    let goal_idx = g.index(gc, gr);
    if start_idx == goal_idx {
        return Ok(Path {
            waypoints: vec![g.cell_center(sc, sr)],
            cost: 0.0,
            cost_units: 0,
        });
    }

    let heuristic = |idx: usize| -> u64 {
        let (c, r) = g.col_row(idx);
        octile_units(c.abs_diff(gc) as u64, r.abs_diff(gr) as u64)
    };
    let passable = |c: i64, r: i64| g.contains_cell(c, r) && costmap.cost(c as usize, r as usize) < INSCRIBED;

    let n = g.len();
    let mut best_g = vec![u64::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    best_g[start_idx] = 0;
    let h0 = heuristic(start_idx);
    open.push(Reverse((h0, h0, start_idx)));

    while let Some(Reverse((f, h, idx))) = open.pop() {
        if closed[idx] || f - h != best_g[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == goal_idx {
            break;
        }
        let (c, r) = g.col_row(idx);
        let (c, r) = (c as i64, r as i64);
        for (dc, dr) in NEIGHBORS {
            let (nc, nr) = (c + dc, r + dr);
            if !passable(nc, nr) {
                continue;
            }
            let diagonal = dc != 0 && dr != 0;
            if diagonal && !(passable(c + dc, r) && passable(c, r + dr)) {
                continue;
            }
            let nidx = g.index(nc as usize, nr as usize);
            if closed[nidx] {
                continue;
            }
            let tentative = best_g[idx] + config.edge_units(diagonal, costmap.cost(nc as usize, nr as usize));
            if tentative < best_g[nidx] {
                best_g[nidx] = tentative;
                parent[nidx] = idx;
                let nh = heuristic(nidx);
                open.push(Reverse((tentative + nh, nh, nidx)));
            }
        }
    }

    if best_g[goal_idx] == u64::MAX {
        return Err(PlanError::NoPath);
    }
    let mut cells = vec![goal_idx];
    let mut cur = goal_idx;
    while cur != start_idx {
        cur = parent[cur];
        cells.push(cur);
    }
    cells.reverse();
    let units = best_g[goal_idx];
    Ok(Path {
        waypoints: cells
            .into_iter()
            .map(|i| {
                let (c, r) = g.col_row(i);
                g.cell_center(c, r)
            })
            .collect(),
        cost: units as f64 / COST_SCALE as f64,
        cost_units: units,
    })
}

/// True when every cell the segment passes through costs less than [`INSCRIBED`].
pub fn segment_is_clear(costmap: &Costmap, a: Point2, b: Point2) -> bool {
    CellWalker::segment(&costmap.geometry, a, b).all(|(c, r, _)| costmap.cost_signed(c, r) < INSCRIBED)
}

/// Drops waypoints that a straight, collision-free segment can skip. From each
/// retained waypoint the farthest waypoint with a clear segment is kept next,
/// so the result is a fixed point of this function.
pub fn simplify(path: &Path, costmap: &Costmap) -> Path {
    let pts = &path.waypoints;
    if pts.len() <= 2 {
        return path.clone();
    }
    let mut out = vec![pts[0]];
    let mut anchor = 0;
    while anchor < pts.len() - 1 {
        let mut next = anchor + 1;
        for j in (anchor + 2..pts.len()).rev() {
            if segment_is_clear(costmap, pts[anchor], pts[j]) {
                next = j;
                break;
            }
        }
        out.push(pts[next]);
        anchor = next;
    }
    Path {
        waypoints: out,
        cost: path.cost,
        cost_units: path.cost_units,
    }
}
