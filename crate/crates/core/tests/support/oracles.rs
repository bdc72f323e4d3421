//! Slow, independent reference implementations used by the tests.
#![allow(dead_code)]

use std::collections::BinaryHeap;
use std::cmp::Reverse;

use gridnav_core::costmap::{Costmap, InflationParams, INSCRIBED, LETHAL, UNKNOWN};
use gridnav_core::global_planner::Path;
use gridnav_core::kinematics::{normalize_angle, Point2, Pose2D, RobotParams, Twist};
use gridnav_core::local_planner::DwaConfig;
use gridnav_core::world::{CellState, GridGeometry, OccupancyGrid};
use rand::Rng;

/// Inflation used by the randomized planner and costmap checks: blocking
/// stops at the obstacle itself so random grids stay mostly solvable.
pub const TEST_INFLATION: InflationParams = InflationParams {
    inscribed_radius: 0.0,
    inflation_radius: 0.55,
    decay: 4.0,
};

pub fn random_grid<R: Rng>(rng: &mut R, w: usize, h: usize, res: f64, p_occ: f64, p_unknown: f64) -> OccupancyGrid {
    let geometry = GridGeometry {
        width: w,
        height: h,
        resolution: res,
        origin: Point2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
    };
    let cells = (0..w * h)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p_occ {
                CellState::Occupied
            } else if u < p_occ + p_unknown {
                CellState::Unknown
            } else {
                CellState::Free
            }
        })
        .collect();
    OccupancyGrid::new(geometry, cells).unwrap()
}

/// Ray/box slab test: entry parameter of the ray into the box, if any.
fn slab_entry(o: Point2, d: (f64, f64), lo: Point2, hi: Point2) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for (oc, dc, l, h) in [(o.x, d.0, lo.x, hi.x), (o.y, d.1, lo.y, hi.y)] {
        if dc.abs() < 1e-300 {
            if oc < l || oc > h {
                return None;
            }
        } else {
            let a = (l - oc) / dc;
            let b = (h - oc) / dc;
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
    }
    (t0 <= t1 && t1 >= 0.0).then_some((t0.max(0.0), t1))
}

/// First OCCUPIED cell boundary along the ray, testing every cell.
pub fn raycast_oracle(grid: &OccupancyGrid, origin: Point2, angle: f64, range_max: f64) -> Option<f64> {
    let g = grid.geometry;
    let d = (angle.cos(), angle.sin());
    let map_hi = Point2::new(g.max_x(), g.max_y());
    let (_, exit) = slab_entry(origin, d, g.origin, map_hi)?;
    let mut best: Option<f64> = None;
    for row in 0..g.height {
        for col in 0..g.width {
            if grid.get(col, row) != CellState::Occupied {
                continue;
            }
            let lo = Point2::new(g.origin.x + col as f64 * g.resolution, g.origin.y + row as f64 * g.resolution);
            let hi = Point2::new(lo.x + g.resolution, lo.y + g.resolution);
            if let Some((t, t_out)) = slab_entry(origin, d, lo, hi) {
                if t_out > t && best.is_none_or(|b| t < b) {
                    best = Some(t);
                }
            }
        }
    }
    best.filter(|&t| t <= range_max && t <= exit)
}

/// Cost field from the definition: nearest LETHAL cell center over the
/// whole grid.
pub fn costmap_oracle(grid: &OccupancyGrid, params: &InflationParams) -> Vec<u8> {
    let g = grid.geometry;
    let obstacles: Vec<(i64, i64)> = (0..g.height)
        .flat_map(|r| (0..g.width).map(move |c| (c, r)))
        .filter(|&(c, r)| grid.get(c, r) == CellState::Occupied)
        .map(|(c, r)| (c as i64, r as i64))
        .collect();
    let mut out = Vec::with_capacity(g.len());
    for r in 0..g.height {
        for c in 0..g.width {
            let cost = match grid.get(c, r) {
                CellState::Occupied => LETHAL,
                CellState::Unknown => UNKNOWN,
                CellState::Free => {
                    let d = obstacles
                        .iter()
                        .map(|&(oc, or)| {
                            let (dc, dr) = (oc - c as i64, or - r as i64);
                            ((dc * dc + dr * dr) as f64).sqrt() * g.resolution
                        })
                        .fold(f64::INFINITY, f64::min);
                    if d <= params.inscribed_radius + 1e-9 {
                        INSCRIBED
                    } else if d <= params.inflation_radius + 1e-9 {
                        (252.0 * (-params.decay * (d - params.inscribed_radius)).exp()).round() as u8
                    } else {
                        0
                    }
                }
            };
            out.push(cost);
        }
    }
    out
}

/// Distance from each cell center to the nearest obstacle center.
pub fn obstacle_distance(grid: &OccupancyGrid, col: usize, row: usize) -> f64 {
    let g = grid.geometry;
    let mut best = f64::INFINITY;
    for r in 0..g.height {
        for c in 0..g.width {
            if grid.get(c, r) == CellState::Occupied {
                let dc = c as f64 - col as f64;
                let dr = r as f64 - row as f64;
                best = best.min(dc.hypot(dr) * g.resolution);
            }
        }
    }
    best
}

/// Plain Dijkstra over the same graph as the A* planner, in fixed-point
/// units. `None` when unreachable or an endpoint is blocked.
pub fn dijkstra_units(costmap: &Costmap, start: (usize, usize), goal: (usize, usize), cost_weight: f64) -> Option<u64> {
    let g = costmap.geometry;
    let free = |c: i64, r: i64| {
        c >= 0 && r >= 0 && (c as usize) < g.width && (r as usize) < g.height && costmap.cost(c as usize, r as usize) < INSCRIBED
    };
    if !free(start.0 as i64, start.1 as i64) || !free(goal.0 as i64, goal.1 as i64) {
        return None;
    }
    let edge = |diagonal: bool, cost: u8| -> u64 {
        let len = if diagonal { 2f64.sqrt() } else { 1.0 };
        (len * (1.0 + cost_weight * f64::from(cost) / 255.0) * 1e6).round() as u64
    };
    let mut dist = vec![u64::MAX; g.width * g.height];
    let idx = |c: usize, r: usize| r * g.width + c;
    dist[idx(start.0, start.1)] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, start.0, start.1)));
    while let Some(Reverse((d, c, r))) = heap.pop() {
        if d > dist[idx(c, r)] {
            continue;
        }
        if (c, r) == goal {
            return Some(d);
        }
        for dc in -1i64..=1 {
            for dr in -1i64..=1 {
                if dc == 0 && dr == 0 {
                    continue;
                }
                let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                if !free(nc, nr) {
                    continue;
                }
                let diagonal = dc != 0 && dr != 0;
                if diagonal && (!free(c as i64 + dc, r as i64) || !free(c as i64, r as i64 + dr)) {
                    continue;
                }
                let nd = d + edge(diagonal, costmap.cost(nc as usize, nr as usize));
                let k = idx(nc as usize, nr as usize);
                if nd < dist[k] {
                    dist[k] = nd;
                    heap.push(Reverse((nd, nc as usize, nr as usize)));
                }
            }
        }
    }
    None
}

/// Exhaustive re-scoring of every DWA sample, written from the scoring rules
/// without the planner's helpers. Returns the winning sample index and command.
pub fn dwa_bruteforce(
    pose: Pose2D,
    current: Twist,
    goal: Point2,
    path: &Path,
    costmap: &Costmap,
    robot: &RobotParams,
    cfg: &DwaConfig,
) -> Option<(usize, Twist)> {
    let dt = robot.dt;
    let v_lo = (current.v - robot.accel_v * dt).max(0.0).min(robot.max_v);
    let v_hi = (current.v + robot.accel_v * dt).min(robot.max_v).max(0.0);
    let w_lo = (current.omega - robot.accel_omega * dt).max(-robot.max_omega).min(robot.max_omega);
    let w_hi = (current.omega + robot.accel_omega * dt).min(robot.max_omega).max(-robot.max_omega);
    let pick = |lo: f64, hi: f64, n: usize, k: usize| {
        if k == 0 {
            lo
        } else if k == n - 1 {
            hi
        } else {
            lo + (hi - lo) * (k as f64 / (n - 1) as f64)
        }
    };
    let steps = ((cfg.horizon / cfg.sim_dt).round() as usize).max(1);

    let seg_dist = |p: Point2| -> f64 {
        let w = &path.waypoints;
        if w.len() == 1 {
            return w[0].distance(&p);
        }
        let mut best = f64::INFINITY;
        for i in 0..w.len() - 1 {
            let (a, b) = (w[i], w[i + 1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
            };
            let q = Point2::new(a.x + t * dx, a.y + t * dy);
            best = best.min(q.distance(&p));
        }
        best
    };

    struct Sample {
        cmd: Twist,
        ok: bool,
        terms: [f64; 4],
    }
    let mut samples = Vec::new();
    for i in 0..cfg.nv {
        let v = pick(v_lo, v_hi, cfg.nv, i);
        for j in 0..cfg.nomega {
            let w = pick(w_lo, w_hi, cfg.nomega, j);
            let (mut x, mut y, mut th) = (pose.x, pose.y, pose.theta);
            let mut ok = true;
            let mut clear = 1.0f64;
            for k in 0..=steps {
                if k > 0 {
                    let (s, c) = th.sin_cos();
                    x += v * cfg.sim_dt * c;
                    y += v * cfg.sim_dt * s;
                    th = normalize_angle(th + w * cfg.sim_dt);
                }
                let cost = costmap.cost_at(Point2::new(x, y));
                if cost >= LETHAL {
                    ok = false;
                }
                clear = clear.min(((253.0 - f64::from(cost)) / 253.0).clamp(0.0, 1.0));
            }
            let end = Point2::new(x, y);
            samples.push(Sample {
                cmd: Twist::new(v, w),
                ok,
                terms: [-seg_dist(end), -end.distance(&goal), clear, v / robot.max_v],
            });
        }
    }
    let weights = [cfg.w_path, cfg.w_goal, cfg.w_obstacle, cfg.w_velocity];
    let feasible: Vec<&Sample> = samples.iter().filter(|s| s.ok).collect();
    if feasible.is_empty() {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (idx, s) in samples.iter().enumerate() {
        if !s.ok {
            continue;
        }
        let mut score = 0.0;
        for (k, w) in weights.iter().enumerate() {
            let lo = feasible.iter().map(|f| f.terms[k]).fold(f64::INFINITY, f64::min);
            let hi = feasible.iter().map(|f| f.terms[k]).fold(f64::NEG_INFINITY, f64::max);
            let n = if hi > lo { (s.terms[k] - lo) / (hi - lo) } else { 0.0 };
            score += w * n;
        }
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((idx, score));
        }
    }
    best.map(|(i, _)| (i, samples[i].cmd))
}

/// Cells whose centers lie within `radius` of `center`, by scanning the grid.
pub fn disc_oracle(g: &GridGeometry, center: Point2, radius: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..g.height {
        for c in 0..g.width {
            if g.cell_center(c, r).distance(&center) <= radius {
                out.push((c, r));
            }
        }
    }
    out
}

/// Center of a uniformly chosen cell with cost below INSCRIBED.
pub fn random_free_cell<R: Rng>(rng: &mut R, costmap: &Costmap) -> Option<(usize, usize)> {
    let g = costmap.geometry;
    let free: Vec<(usize, usize)> = (0..g.height)
        .flat_map(|r| (0..g.width).map(move |c| (c, r)))
        .filter(|&(c, r)| costmap.cost(c, r) < INSCRIBED)
        .collect();
    (!free.is_empty()).then(|| free[rng.random_range(0..free.len())])
}

/// A randomized local-planning situation.
pub struct DwaScene {
    pub costmap: Costmap,
    pub pose: Pose2D,
    pub twist: Twist,
    pub goal: Pose2D,
    pub path: Path,
}

pub fn random_dwa_scene<R: Rng>(rng: &mut R, robot: &RobotParams) -> DwaScene {
    let grid = random_grid(rng, 40, 40, 0.1, 0.06, 0.02);
    let costmap = gridnav_core::costmap::build_static_costmap(&grid, InflationParams::default()).unwrap();
    let g = costmap.geometry;
    let (c, r) = random_free_cell(rng, &costmap).unwrap_or((20, 20));
    let start = g.cell_center(c, r);
    let pose = Pose2D::new(start.x, start.y, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
    let twist = Twist::new(
        rng.random_range(0.0..=robot.max_v),
        rng.random_range(-robot.max_omega..=robot.max_omega),
    );
    let mut waypoints = vec![start];
    for _ in 0..rng.random_range(1..4) {
        waypoints.push(Point2::new(
            rng.random_range(g.origin.x..g.max_x()),
            rng.random_range(g.origin.y..g.max_y()),
        ));
    }
    let last = *waypoints.last().unwrap();
    DwaScene {
        costmap,
        pose,
        twist,
        goal: Pose2D::new(last.x, last.y, 0.0),
        path: Path {
            waypoints,
            cost: 0.0,
            cost_units: 0,
        },
    }
}

/// Largest position error of a constant-twist Euler rollout against the exact
/// arc over `horizon` seconds.
pub fn euler_arc_error(v: f64, omega: f64, dt: f64, horizon: f64) -> f64 {
    let steps = (horizon / dt).round() as usize;
    let mut pose = Pose2D::new(0.0, 0.0, 0.0);
    let mut worst = 0.0f64;
    for k in 1..=steps {
        pose = gridnav_core::kinematics::step(pose, Twist::new(v, omega), dt);
        let t = k as f64 * dt;
        let exact = Point2::new(v / omega * (omega * t).sin(), v / omega * (1.0 - (omega * t).cos()));
        worst = worst.max(pose.position().distance(&exact));
    }
    worst
}
