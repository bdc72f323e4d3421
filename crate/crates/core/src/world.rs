//! Static ground truth: occupancy grid, point landmarks and the simulated 2D LiDAR.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ParseError, WorldError};
use crate::kinematics::{Point2, Pose2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

impl CellState {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '.' => Some(CellState::Free),
            '#' => Some(CellState::Occupied),
            '?' => Some(CellState::Unknown),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            CellState::Free => '.',
            CellState::Occupied => '#',
            CellState::Unknown => '?',
        }
    }
}

/// Shape and placement of a row-major grid. Row 0 is the minimum-y row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    /// meters per cell
    pub resolution: f64,
    /// World coordinates of the outer corner of cell (0, 0).
    pub origin: Point2,
}

impl GridGeometry {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn col_row(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn contains_cell(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height
    }

    /// Unbounded cell coordinates of a world point.
    pub fn world_to_cell_unchecked(&self, p: Point2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn world_to_cell(&self, p: Point2) -> Option<(usize, usize)> {
        let (c, r) = self.world_to_cell_unchecked(p);
        self.contains_cell(c, r).then_some((c as usize, r as usize))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        Point2::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        self.world_to_cell(p).is_some()
    }

    pub fn max_x(&self) -> f64 {
        self.origin.x + self.width as f64 * self.resolution
    }

    pub fn max_y(&self) -> f64 {
        self.origin.y + self.height as f64 * self.resolution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub geometry: GridGeometry,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry, cells: Vec<CellState>) -> Result<Self, WorldError> {
        if !(geometry.resolution.is_finite() && geometry.resolution > 0.0) {
            return Err(WorldError::InvalidResolution(geometry.resolution));
        }
        if cells.len() != geometry.len() {
            return Err(WorldError::CellCount {
                expected: geometry.len(),
                actual: cells.len(),
            });
        }
        Ok(Self { geometry, cells })
    }

    pub fn filled(geometry: GridGeometry, state: CellState) -> Result<Self, WorldError> {
        Self::new(geometry, vec![state; geometry.len()])
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn resolution(&self) -> f64 {
        self.geometry.resolution
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn get(&self, col: usize, row: usize) -> CellState {
        self.cells[self.geometry.index(col, row)]
    }

    pub fn set(&mut self, col: usize, row: usize, state: CellState) {
        let i = self.geometry.index(col, row);
        self.cells[i] = state;
    }

    /// `None` when out of bounds.
    pub fn state_at(&self, p: Point2) -> Option<CellState> {
        self.geometry.world_to_cell(p).map(|(c, r)| self.get(c, r))
    }

    pub fn is_occupied(&self, col: i64, row: i64) -> bool {
        self.geometry.contains_cell(col, row) && self.get(col as usize, row as usize) == CellState::Occupied
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: u32,
    pub position: Point2,
}

/// Landmarks keyed by id; iteration is in ascending id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LandmarkMap {
    landmarks: BTreeMap<u32, Landmark>,
}

impl LandmarkMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, landmark: Landmark) -> Result<(), WorldError> {
        if self.landmarks.contains_key(&landmark.id) {
            return Err(WorldError::DuplicateLandmark(landmark.id));
        }
        self.landmarks.insert(landmark.id, landmark);
        Ok(())
    }

    pub fn from_landmarks(items: impl IntoIterator<Item = Landmark>) -> Result<Self, WorldError> {
        let mut map = Self::new();
        for l in items {
            map.insert(l)?;
        }
        Ok(map)
    }

    pub fn get(&self, id: u32) -> Option<&Landmark> {
        self.landmarks.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Landmark> {
        self.landmarks.values()
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Map file
// ---------------------------------------------------------------------------

/// Parses the ASCII map document.
///
/// ```text
/// resolution 0.05
/// origin -6.5 -5.0 0
/// size 4 2            (optional; enforced when present)
/// landmark 1 0.1 0.2  (repeatable)
/// map:
/// #..#
/// ?..#
/// ```
pub fn load_world(text: &str) -> Result<(OccupancyGrid, LandmarkMap), ParseError> {
    let mut resolution: Option<f64> = None;
    let mut origin: Option<Point2> = None;
    let mut size: Option<(usize, usize, usize)> = None;
    let mut landmarks = LandmarkMap::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let mut map_line = None;

    for (lineno, line) in lines.by_ref() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "map:" {
            map_line = Some(lineno);
            break;
        }
        let mut parts = trimmed.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let col_of = |idx: usize| -> usize {
            // column (1-based) of the idx-th whitespace separated token
            let mut seen = 0;
            let mut in_token = false;
            for (i, ch) in line.char_indices() {
                if ch.is_whitespace() {
                    in_token = false;
                } else if !in_token {
                    if seen == idx {
                        return i + 1;
                    }
                    seen += 1;
                    in_token = true;
                }
            }
            line.len() + 1
        };
        let num = |idx: usize| -> Result<f64, ParseError> {
            let tok = args.get(idx).ok_or_else(|| {
                ParseError::new(lineno, line.len() + 1, format!("`{key}` expects more arguments"))
            })?;
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::new(lineno, col_of(idx + 1), format!("invalid number `{tok}`")))
        };
        let expect_args = |n: usize| -> Result<(), ParseError> {
            if args.len() != n {
                Err(ParseError::new(
                    lineno,
                    1,
                    format!("`{key}` takes {n} argument(s), got {}", args.len()),
                ))
            } else {
                Ok(())
            }
        };
        match key {
            "resolution" => {
                expect_args(1)?;
                let r = num(0)?;
                if r <= 0.0 {
                    return Err(ParseError::new(lineno, col_of(1), "resolution must be > 0"));
                }
                resolution = Some(r);
            }
            "origin" => {
                expect_args(3)?;
                let (x, y, theta) = (num(0)?, num(1)?, num(2)?);
                if theta != 0.0 {
                    return Err(ParseError::new(lineno, col_of(3), "rotated map origins are not supported"));
                }
                origin = Some(Point2::new(x, y));
            }
            "size" => {
                expect_args(2)?;
                let w: usize = args[0]
                    .parse()
                    .map_err(|_| ParseError::new(lineno, col_of(1), format!("invalid width `{}`", args[0])))?;
                let h: usize = args[1]
                    .parse()
                    .map_err(|_| ParseError::new(lineno, col_of(2), format!("invalid height `{}`", args[1])))?;
                size = Some((w, h, lineno));
            }
            "landmark" => {
                expect_args(3)?;
                let id: u32 = args[0]
                    .parse()
                    .map_err(|_| ParseError::new(lineno, col_of(1), format!("invalid landmark id `{}`", args[0])))?;
                let p = Point2::new(num(1)?, num(2)?);
                landmarks
                    .insert(Landmark { id, position: p })
                    .map_err(|e| ParseError::new(lineno, col_of(1), e.to_string()))?;
            }
            other => {
                return Err(ParseError::new(lineno, 1, format!("unknown header key `{other}`")));
            }
        }
    }

    let map_line = map_line.ok_or_else(|| ParseError::new(text.lines().count().max(1), 1, "missing `map:` section"))?;
    let resolution = resolution.ok_or_else(|| ParseError::new(map_line, 1, "missing `resolution` header"))?;
    let origin = origin.ok_or_else(|| ParseError::new(map_line, 1, "missing `origin` header"))?;

    let mut rows: Vec<(usize, &str)> = lines.collect();
    while rows.last().is_some_and(|(_, l)| l.trim().is_empty()) {
        rows.pop();
    }
    if rows.is_empty() {
        return Err(ParseError::new(map_line + 1, 1, "map body is empty"));
    }

    let width = match size {
        Some((w, _, _)) => w,
        None => rows[0].1.chars().count(),
    };
    if let Some((_, h, lineno)) = size {
        if h != rows.len() {
            return Err(ParseError::new(
                lineno,
                1,
                format!("header height {h} does not match {} body rows", rows.len()),
            ));
        }
    }
    if width == 0 {
        return Err(ParseError::new(rows[0].0, 1, "map rows must not be empty"));
    }

    let height = rows.len();
    let geometry = GridGeometry {
        width,
        height,
        resolution,
        origin,
    };
    let mut cells = vec![CellState::Free; geometry.len()];
    for (file_row, (lineno, line)) in rows.iter().enumerate() {
        let row = height - 1 - file_row;
        let mut count = 0;
        for (col, ch) in line.chars().enumerate() {
            if col >= width {
                return Err(ParseError::new(
                    *lineno,
                    col + 1,
                    format!("row longer than width {width}"),
                ));
            }
            let state = CellState::from_char(ch)
                .ok_or_else(|| ParseError::new(*lineno, col + 1, format!("unknown map character `{ch}`")))?;
            cells[geometry.index(col, row)] = state;
            count += 1;
        }
        if count != width {
            return Err(ParseError::new(
                *lineno,
                count + 1,
                format!("row has {count} cells, expected {width}"),
            ));
        }
    }

    let grid = OccupancyGrid::new(geometry, cells).map_err(|e| ParseError::new(map_line, 1, e.to_string()))?;
    Ok((grid, landmarks))
}

/// Serializes a grid and landmarks back to the map document format.
pub fn write_world(grid: &OccupancyGrid, landmarks: &LandmarkMap) -> String {
    let g = &grid.geometry;
    let mut out = String::new();
    let _ = writeln!(out, "resolution {}", g.resolution);
    let _ = writeln!(out, "origin {} {} 0", g.origin.x, g.origin.y);
    let _ = writeln!(out, "size {} {}", g.width, g.height);
    for l in landmarks.iter() {
        let _ = writeln!(out, "landmark {} {} {}", l.id, l.position.x, l.position.y);
    }
    out.push_str("map:\n");
    for row in (0..g.height).rev() {
        for col in 0..g.width {
            out.push(grid.get(col, row).to_char());
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Grid traversal
// ---------------------------------------------------------------------------

/// Visits every cell a ray passes through, in order, with the distance (meters)
/// at which the ray enters it. The first item is the cell holding the start
/// point at distance 0. Cells may lie outside the grid; callers bounds-check.
///
/// When the ray crosses a cell corner exactly, the column step is taken first,
/// so both side cells touching the corner are reported.
#[derive(Debug, Clone)]
pub struct CellWalker {
    col: i64,
    row: i64,
    step_col: i64,
    step_row: i64,
    next_col_t: f64,
    next_row_t: f64,
    delta_col_t: f64,
    delta_row_t: f64,
    limit: f64,
    started: bool,
}

impl CellWalker {
    /// Ray from `start` along `angle`, up to `limit` meters.
    pub fn new(geometry: &GridGeometry, start: Point2, angle: f64, limit: f64) -> Self {
        let (dy, dx) = angle.sin_cos();
        Self::with_direction(geometry, start, dx, dy, limit)
    }

    /// Segment from `a` to `b`.
    pub fn segment(geometry: &GridGeometry, a: Point2, b: Point2) -> Self {
        let len = a.distance(&b);
        if len == 0.0 {
            return Self::with_direction(geometry, a, 1.0, 0.0, 0.0);
        }
        Self::with_direction(geometry, a, (b.x - a.x) / len, (b.y - a.y) / len, len)
    }

    fn with_direction(geometry: &GridGeometry, start: Point2, dx: f64, dy: f64, limit: f64) -> Self {
        let res = geometry.resolution;
        let gx = (start.x - geometry.origin.x) / res;
        let gy = (start.y - geometry.origin.y) / res;
        let col = gx.floor() as i64;
        let row = gy.floor() as i64;

        let axis = |g: f64, cell: i64, d: f64| -> (i64, f64, f64) {
            if d > 0.0 {
                (1, ((cell + 1) as f64 - g) * res / d, res / d)
            } else if d < 0.0 {
                (-1, (g - cell as f64) * res / -d, res / -d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_col, next_col_t, delta_col_t) = axis(gx, col, dx);
        let (step_row, next_row_t, delta_row_t) = axis(gy, row, dy);
        Self {
            col,
            row,
            step_col,
            step_row,
            next_col_t,
            next_row_t,
            delta_col_t,
            delta_row_t,
            limit,
            started: false,
        }
    }
}

impl Iterator for CellWalker {
    /// `(col, row, entry distance)`
    type Item = (i64, i64, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            return Some((self.col, self.row, 0.0));
        }
        let t = if self.next_col_t <= self.next_row_t {
            let t = self.next_col_t;
            self.col += self.step_col;
            self.next_col_t += self.delta_col_t;
            t
        } else {
            let t = self.next_row_t;
            self.row += self.step_row;
            self.next_row_t += self.delta_row_t;
            t
        };
        if t > self.limit || !t.is_finite() {
            // park so subsequent calls stay exhausted
            self.next_col_t = f64::INFINITY;
            self.next_row_t = f64::INFINITY;
            self.limit = f64::NEG_INFINITY;
            return None;
        }
        Some((self.col, self.row, t))
    }
}

/// Distance from `origin` along `angle` to the boundary of the first OCCUPIED
/// cell, or `None` if nothing is hit within `range_max` (or before leaving the
/// map). UNKNOWN cells do not block.
pub fn raycast(grid: &OccupancyGrid, origin: Point2, angle: f64, range_max: f64) -> Result<Option<f64>, WorldError> {
    if !grid.geometry.contains_point(origin) {
        return Err(WorldError::OutOfBounds(origin));
    }
    Ok(raycast_unchecked(grid, origin, angle, range_max))
}

pub(crate) fn raycast_unchecked(grid: &OccupancyGrid, origin: Point2, angle: f64, range_max: f64) -> Option<f64> {
    for (col, row, t) in CellWalker::new(&grid.geometry, origin, angle, range_max) {
        if !grid.geometry.contains_cell(col, row) {
            return None;
        }
        if grid.get(col as usize, row as usize) == CellState::Occupied {
            return Some(t);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// LiDAR
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarParams {
    /// degrees
    pub fov: f64,
    /// degrees
    pub angular_resolution: f64,
    pub range_min: f64,
    pub range_max: f64,
    /// Hz
    pub rate: f64,
    /// Range noise standard deviation, m.
    pub noise_sigma: f64,
}

impl Default for LidarParams {
    fn default() -> Self {
        Self {
            fov: 270.0,
            angular_resolution: 0.36,
            range_min: 0.06,
            range_max: 6.40,
            rate: 10.0,
            noise_sigma: 0.005,
        }
    }
}

impl LidarParams {
    pub fn beam_count(&self) -> usize {
        (self.fov / self.angular_resolution + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.range_min > 0.0 && self.range_min < self.range_max) {
            return Err(format!(
                "lidar range bounds must satisfy 0 < range_min < range_max, got {}..{}",
                self.range_min, self.range_max
            ));
        }
        if !(self.fov > 0.0 && self.fov <= 360.0) || !(self.angular_resolution > 0.0) {
            return Err("lidar fov and angular_resolution must be positive".into());
        }
        if !(self.noise_sigma >= 0.0) || !(self.rate > 0.0) {
            return Err("lidar noise_sigma must be >= 0 and rate > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub stamp: f64,
    /// True pose at capture time; simulation-internal.
    pub pose_at_scan: Pose2D,
    /// Relative angle of beam 0 (radians, `-fov/2`).
    pub angle_min: f64,
    /// radians
    pub angle_increment: f64,
    pub range_min: f64,
    pub range_max: f64,
    /// One entry per beam; `None` is NO_RETURN.
    pub ranges: Vec<Option<f64>>,
}

impl LidarScan {
    /// A scan where no beam returns.
    pub fn empty(params: &LidarParams, pose: Pose2D, stamp: f64) -> Self {
        Self {
            stamp,
            pose_at_scan: pose,
            angle_min: -params.fov.to_radians() / 2.0,
            angle_increment: params.angular_resolution.to_radians(),
            range_min: params.range_min,
            range_max: params.range_max,
            ranges: vec![None; params.beam_count()],
        }
    }

    /// World-frame angle of beam `i` for a sensor heading.
    pub fn beam_angle(&self, heading: f64, i: usize) -> f64 {
        heading + self.angle_min + i as f64 * self.angle_increment
    }

    /// Export encoding: NO_RETURN becomes `range_max`.
    pub fn export_ranges(&self) -> Vec<f64> {
        self.ranges.iter().map(|r| r.unwrap_or(self.range_max)).collect()
    }
}

/// Casts every beam from `true_pose` (the LiDAR sits at the robot center).
pub fn simulate_scan<R: Rng + ?Sized>(
    grid: &OccupancyGrid,
    true_pose: Pose2D,
    params: &LidarParams,
    stamp: f64,
    rng: &mut R,
) -> Result<LidarScan, WorldError> {
    let origin = true_pose.position();
    if !grid.geometry.contains_point(origin) {
        return Err(WorldError::OutOfBounds(origin));
    }
    let mut scan = LidarScan::empty(params, true_pose, stamp);
    for i in 0..scan.ranges.len() {
        let angle = scan.beam_angle(true_pose.theta, i);
        let noise: f64 = rng.sample(StandardNormal);
        scan.ranges[i] = raycast_unchecked(grid, origin, angle, params.range_max).and_then(|r| {
            let noisy = r + params.noise_sigma * noise;
            (noisy >= params.range_min).then(|| noisy.min(params.range_max))
        });
    }
    Ok(scan)
}

// ---------------------------------------------------------------------------
// World with dynamic obstacles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, p: Point2) -> bool {
        self.center.distance(&p) <= self.radius
    }
}

/// Simulation truth: the loaded map plus any discs dropped in at run time.
#[derive(Debug, Clone)]
pub struct World {
    static_grid: OccupancyGrid,
    grid: OccupancyGrid,
    pub landmarks: LandmarkMap,
    discs: Vec<Disc>,
}

impl World {
    pub fn new(grid: OccupancyGrid, landmarks: LandmarkMap) -> Self {
        Self {
            static_grid: grid.clone(),
            grid,
            landmarks,
            discs: Vec::new(),
        }
    }

    pub fn from_map_text(text: &str) -> Result<Self, ParseError> {
        let (grid, landmarks) = load_world(text)?;
        Ok(Self::new(grid, landmarks))
    }

    /// Current truth including dynamic obstacles.
    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    /// The map as loaded, without dynamic obstacles.
    pub fn static_grid(&self) -> &OccupancyGrid {
        &self.static_grid
    }

    pub fn discs(&self) -> &[Disc] {
        &self.discs
    }

    /// Marks every cell whose center lies within `radius` of `center` OCCUPIED.
    /// Returns the number of cells covered by the disc.
    pub fn add_obstacle(&mut self, center: Point2, radius: f64) -> Result<usize, WorldError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(WorldError::InvalidRadius(radius));
        }
        if !self.grid.geometry.contains_point(center) {
            return Err(WorldError::OutOfBounds(center));
        }
        let disc = Disc { center, radius };
        let cells = disc_cells(&self.grid.geometry, &disc);
        for &(c, r) in &cells {
            self.grid.set(c, r, CellState::Occupied);
        }
        self.discs.push(disc);
        Ok(cells.len())
    }

    /// Removes every dynamic disc whose center lies within `radius` of `center`
    /// and restores the affected cells. Returns how many discs were removed.
    pub fn remove_obstacle(&mut self, center: Point2, radius: f64) -> Result<usize, WorldError> {
        if !self.grid.geometry.contains_point(center) {
            return Err(WorldError::OutOfBounds(center));
        }
        let tolerance = radius.max(0.0) + 1e-9;
        let (removed, kept): (Vec<Disc>, Vec<Disc>) =
            self.discs.iter().partition(|d| d.center.distance(&center) <= tolerance);
        self.discs = kept;
        for disc in &removed {
            for (c, r) in disc_cells(&self.grid.geometry, disc) {
                let p = self.grid.geometry.cell_center(c, r);
                let state = if self.discs.iter().any(|d| d.contains(p)) {
                    CellState::Occupied
                } else {
                    self.static_grid.get(c, r)
                };
                self.grid.set(c, r, state);
            }
        }
        Ok(removed.len())
    }

    pub fn reset_obstacles(&mut self) {
        self.grid = self.static_grid.clone();
        self.discs.clear();
    }
}

/// In-bounds cells whose centers lie inside the disc.
pub fn disc_cells(geometry: &GridGeometry, disc: &Disc) -> Vec<(usize, usize)> {
    let lo = geometry.world_to_cell_unchecked(Point2::new(disc.center.x - disc.radius, disc.center.y - disc.radius));
    let hi = geometry.world_to_cell_unchecked(Point2::new(disc.center.x + disc.radius, disc.center.y + disc.radius));
    let mut out = Vec::new();
    for row in (lo.1 - 1).max(0)..=(hi.1 + 1).min(geometry.height as i64 - 1) {
        for col in (lo.0 - 1).max(0)..=(hi.0 + 1).min(geometry.width as i64 - 1) {
            let p = geometry.cell_center(col as usize, row as usize);
            if disc.contains(p) {
                out.push((col as usize, row as usize));
            }
        }
    }
    out
}
