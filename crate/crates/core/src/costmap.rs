//! 0–255 planning costs with obstacle inflation, plus the rolling local
//! costmap that folds LiDAR returns in around the robot.
//!
//! Cost semantics:
//!
//! | value | meaning |
//! |-------|---------|
//! | 0 | free, farther than the inflation radius from any obstacle |
//! | 1..=252 | inflation band, exponential decay with distance |
//! | 253 | within the inscribed radius of an obstacle: the robot center may not go here |
//! | 254 | obstacle |
//! | 255 | unknown |

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::CostmapError;
use crate::kinematics::{Point2, Pose2D};
use crate::world::{CellState, CellWalker, GridGeometry, LidarScan, OccupancyGrid};

pub const FREE: u8 = 0;
pub const INSCRIBED: u8 = 253;
pub const LETHAL: u8 = 254;
pub const UNKNOWN: u8 = 255;

const RADIUS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InflationParams {
    /// m
    pub inscribed_radius: f64,
    /// m
    pub inflation_radius: f64,
    /// 1/m
    pub decay: f64,
}

impl Default for InflationParams {
    fn default() -> Self {
        Self {
            inscribed_radius: 0.22,
            inflation_radius: 0.55,
            decay: 10.0,
        }
    }
}

impl InflationParams {
    pub fn validate(&self) -> Result<(), CostmapError> {
        let ok = self.inscribed_radius >= 0.0
            && self.inflation_radius >= self.inscribed_radius
            && self.inflation_radius.is_finite();
        if !ok {
            return Err(CostmapError::InvalidRadii {
                inscribed: self.inscribed_radius,
                inflation: self.inflation_radius,
            });
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(CostmapError::InvalidDecay(self.decay));
        }
        Ok(())
    }

    /// Cost of a free cell whose nearest obstacle center is `distance` meters away.
    pub fn cost_for_distance(&self, distance: f64) -> u8 {
        if distance <= self.inscribed_radius + RADIUS_EPS {
            INSCRIBED
        } else if distance <= self.inflation_radius + RADIUS_EPS {
            let c = 252.0 * (-self.decay * (distance - self.inscribed_radius)).exp();
            c.round() as u8
        } else {
            FREE
        }
    }

    fn radius_cells(&self, resolution: f64) -> i64 {
        (self.inflation_radius / resolution + RADIUS_EPS).floor() as i64
    }
}

/// Cost grid with the same geometry as the occupancy grid it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Costmap {
    pub geometry: GridGeometry,
    pub inflation: InflationParams,
    costs: Vec<u8>,
}

impl Costmap {
    pub fn costs(&self) -> &[u8] {
        &self.costs
    }

    pub fn cost(&self, col: usize, row: usize) -> u8 {
        self.costs[self.geometry.index(col, row)]
    }

    /// Out-of-bounds cells report [`LETHAL`].
    pub fn cost_signed(&self, col: i64, row: i64) -> u8 {
        if self.geometry.contains_cell(col, row) {
            self.cost(col as usize, row as usize)
        } else {
            LETHAL
        }
    }

    /// Cost of the cell containing `p`; outside the map is [`LETHAL`].
    pub fn cost_at(&self, p: Point2) -> u8 {
        let (c, r) = self.geometry.world_to_cell_unchecked(p);
        self.cost_signed(c, r)
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    /// Plain-text portable graymap of the cost field, top row first.
    pub fn to_pgm(&self) -> String {
        let g = &self.geometry;
        let mut out = format!("P2\n{} {}\n255\n", g.width, g.height);
        for row in (0..g.height).rev() {
            let line: Vec<String> = (0..g.width).map(|c| self.cost(c, row).to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Copy of a rectangular block of costs, row-major from `(col0, row0)`.
    pub fn block(&self, rect: CellRect) -> Vec<u8> {
        let mut out = Vec::with_capacity(rect.width() * rect.height());
        for row in rect.row0..=rect.row1 {
            for col in rect.col0..=rect.col1 {
                out.push(self.cost(col, row));
            }
        }
        out
    }
}

/// Inclusive cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub col0: usize,
    pub row0: usize,
    pub col1: usize,
    pub row1: usize,
}

impl CellRect {
    pub fn width(&self) -> usize {
        self.col1 - self.col0 + 1
    }

    pub fn height(&self) -> usize {
        self.row1 - self.row0 + 1
    }

    pub fn contains(&self, col: i64, row: i64) -> bool {
        col >= self.col0 as i64 && col <= self.col1 as i64 && row >= self.row0 as i64 && row <= self.row1 as i64
    }
}

/// Inflates obstacles over the whole map: OCCUPIED → LETHAL, UNKNOWN → UNKNOWN,
/// FREE → cost from the distance to the nearest LETHAL cell center.
pub fn build_static_costmap(grid: &OccupancyGrid, inflation: InflationParams) -> Result<Costmap, CostmapError> {
    inflation.validate()?;
    let g = grid.geometry;
    let mut costmap = Costmap {
        geometry: g,
        inflation,
        costs: vec![FREE; g.len()],
    };
    if g.is_empty() {
        return Ok(costmap);
    }
    let whole = CellRect {
        col0: 0,
        row0: 0,
        col1: g.width - 1,
        row1: g.height - 1,
    };
    let cells = grid.cells();
    inflate_region(
        &mut costmap,
        whole,
        |i| cells[i] == CellState::Occupied,
        |i| cells[i] == CellState::Unknown,
    );
    Ok(costmap)
}

/// Recomputes costs inside `region`. Obstacles up to the inflation radius
/// outside the region still contribute.
fn inflate_region(
    costmap: &mut Costmap,
    region: CellRect,
    is_lethal: impl Fn(usize) -> bool,
    is_unknown: impl Fn(usize) -> bool,
) {
    let g = costmap.geometry;
    let params = costmap.inflation;
    let radius = params.radius_cells(g.resolution);
    let ratio = params.inflation_radius / g.resolution;
    let max_d2 = (ratio * ratio + 1e-6).floor() as i64;
    let (rw, rh) = (region.width(), region.height());
    let mut best = vec![i64::MAX; rw * rh];

    let src_col0 = (region.col0 as i64 - radius).max(0);
    let src_col1 = (region.col1 as i64 + radius).min(g.width as i64 - 1);
    let src_row0 = (region.row0 as i64 - radius).max(0);
    let src_row1 = (region.row1 as i64 + radius).min(g.height as i64 - 1);
    for sr in src_row0..=src_row1 {
        for sc in src_col0..=src_col1 {
            if !is_lethal(g.index(sc as usize, sr as usize)) {
                continue;
            }
            let r0 = (sr - radius).max(region.row0 as i64);
            let r1 = (sr + radius).min(region.row1 as i64);
            let c0 = (sc - radius).max(region.col0 as i64);
            let c1 = (sc + radius).min(region.col1 as i64);
            for r in r0..=r1 {
                let dr = r - sr;
                for c in c0..=c1 {
                    let dc = c - sc;
                    let d2 = dr * dr + dc * dc;
                    if d2 > max_d2 {
                        continue;
                    }
                    let k = (r as usize - region.row0) * rw + (c as usize - region.col0);
                    if d2 < best[k] {
                        best[k] = d2;
                    }
                }
            }
        }
    }

    for r in 0..rh {
        for c in 0..rw {
            let idx = g.index(region.col0 + c, region.row0 + r);
            costmap.costs[idx] = if is_lethal(idx) {
                LETHAL
            } else if is_unknown(idx) {
                UNKNOWN
            } else {
                match best[r * rw + c] {
                    i64::MAX => FREE,
                    d2 => params.cost_for_distance((d2 as f64).sqrt() * g.resolution),
                }
            };
        }
    }
}

/// Square window around the robot inside which scans update the local costmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalWindow {
    /// Side length, m.
    pub side: f64,
    /// Scans observing a marked cell as free before the mark expires.
    pub persistence: u8,
}

impl Default for LocalWindow {
    fn default() -> Self {
        Self {
            side: 4.0,
            persistence: 3,
        }
    }
}

impl LocalWindow {
    /// Cells whose centers fall inside the window centered at `center`, clipped
    /// to the map. `None` when the window misses the map entirely.
    pub fn cell_rect(&self, geometry: &GridGeometry, center: Point2) -> Option<CellRect> {
        let half = self.side / 2.0;
        let res = geometry.resolution;
        let lo_c = ((center.x - half - geometry.origin.x) / res - 0.5).ceil() as i64;
        let hi_c = ((center.x + half - geometry.origin.x) / res - 0.5).floor() as i64;
        let lo_r = ((center.y - half - geometry.origin.y) / res - 0.5).ceil() as i64;
        let hi_r = ((center.y + half - geometry.origin.y) / res - 0.5).floor() as i64;
        let col0 = lo_c.max(0);
        let row0 = lo_r.max(0);
        let col1 = hi_c.min(geometry.width as i64 - 1);
        let row1 = hi_r.min(geometry.height as i64 - 1);
        (col0 <= col1 && row0 <= row1).then_some(CellRect {
            col0: col0 as usize,
            row0: row0 as usize,
            col1: col1 as usize,
            row1: row1 as usize,
        })
    }
}

/// Static costmap plus LiDAR marks inside a window that follows the robot.
///
/// A beam endpoint marks its cell as an obstacle for `persistence` scans; each
/// later scan whose beam passes through the cell without ending there counts
/// down once. Static obstacles are never cleared.
#[derive(Debug, Clone)]
pub struct LocalCostmap {
    static_map: Costmap,
    map: Costmap,
    marks: Vec<u8>,
    pub window: LocalWindow,
    last_window: Option<CellRect>,
}

impl LocalCostmap {
    pub fn new(static_map: Costmap, window: LocalWindow) -> Self {
        let n = static_map.geometry.len();
        Self {
            map: static_map.clone(),
            static_map,
            marks: vec![0; n],
            window,
            last_window: None,
        }
    }

    pub fn costmap(&self) -> &Costmap {
        &self.map
    }

    pub fn static_costmap(&self) -> &Costmap {
        &self.static_map
    }

    pub fn last_window(&self) -> Option<CellRect> {
        self.last_window
    }

    pub fn is_marked(&self, col: usize, row: usize) -> bool {
        self.marks[self.map.geometry.index(col, row)] > 0
    }

    /// Drops all marks and restores the static costs.
    pub fn reset(&mut self) {
        self.map = self.static_map.clone();
        self.marks.iter_mut().for_each(|m| *m = 0);
        self.last_window = None;
    }

    /// Folds one scan taken at `robot_pose` into the window around the robot and
    /// re-inflates the window. Returns the window that was updated.
    pub fn update(&mut self, scan: &LidarScan, robot_pose: Pose2D) -> Option<CellRect> {
        let g = self.map.geometry;
        let origin = robot_pose.position();
        let rect = self.window.cell_rect(&g, origin)?;
        self.last_window = Some(rect);

        // Cells within the window are never farther than this from its center.
        let reach = self.window.side * std::f64::consts::FRAC_1_SQRT_2 + g.resolution;
        let mut cleared = vec![false; rect.width() * rect.height()];
        let mut hit = vec![false; cleared.len()];
        let local = |c: i64, r: i64| (r as usize - rect.row0) * rect.width() + (c as usize - rect.col0);

        for (i, range) in scan.ranges.iter().enumerate() {
            let angle = scan.beam_angle(robot_pose.theta, i);
            let (length, endpoint) = match range {
                Some(r) if *r <= reach => (*r, true),
                Some(_) | None => (reach.min(scan.range_max), false),
            };
            let mut walker = CellWalker::new(&g, origin, angle, length).peekable();
            while let Some((c, r, _)) = walker.next() {
                if !rect.contains(c, r) {
                    continue;
                }
                if endpoint && walker.peek().is_none() {
                    hit[local(c, r)] = true;
                } else {
                    cleared[local(c, r)] = true;
                }
            }
        }

        let persistence = self.window.persistence.max(1);
        for r in rect.row0..=rect.row1 {
            for c in rect.col0..=rect.col1 {
                let k = local(c as i64, r as i64);
                let idx = g.index(c, r);
                if hit[k] {
                    self.marks[idx] = persistence;
                } else if cleared[k] && self.marks[idx] > 0 {
                    self.marks[idx] -= 1;
                }
            }
        }

        let static_costs = &self.static_map.costs;
        let marks = &self.marks;
        inflate_region(
            &mut self.map,
            rect,
            |i| static_costs[i] == LETHAL || marks[i] > 0,
            |i| static_costs[i] == UNKNOWN,
        );
        Some(rect)
    }
}
