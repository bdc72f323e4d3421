//! JSON messages exchanged over the WebSocket. See `docs/protocol.md`.

use gridnav_core::costmap::CellRect;
use gridnav_core::localization::PoseSource;
use gridnav_core::navigator::NavMode;
use gridnav_core::scenario::{Command, Outcome, Simulation};
use gridnav_core::world::{CellState, Disc, OccupancyGrid};
use gridnav_core::{Point2, Pose2D, Twist};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Beams kept per scan in a snapshot.
pub const SCAN_STRIDE: usize = 4;

/// Run-length encodes `values` as `[value, count]` pairs.
pub fn rle_encode(values: &[u8]) -> Vec<[u32; 2]> {
    let mut out: Vec<[u32; 2]> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some(last) if last[0] == v as u32 => last[1] += 1,
            _ => out.push([v as u32, 1]),
        }
    }
    out
}

pub fn rle_decode(runs: &[[u32; 2]]) -> Vec<u8> {
    runs.iter()
        .flat_map(|&[v, n]| std::iter::repeat_n(v as u8, n as usize))
        .collect()
}

/// Block of the local costmap, row-major from its lowest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWindow {
    pub col0: usize,
    pub row0: usize,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    /// World coordinates of the window's lower-left corner.
    pub origin: Point2,
    pub rle: Vec<[u32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub stride: usize,
    /// Relative to the robot heading, radians.
    pub angle_min: f64,
    /// Between kept beams, radians.
    pub angle_increment: f64,
    pub range_max: f64,
    /// NO_RETURN is sent as `range_max`.
    pub ranges: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    #[serde(rename = "type")]
    pub kind: String,
    pub tick: u64,
    pub sim_time: f64,
    pub true_pose: Pose2D,
    pub est_pose: Pose2D,
    pub est_source: PoseSource,
    pub state: NavMode,
    pub outcome: Outcome,
    pub paused: bool,
    pub cmd: Twist,
    pub goal: Option<Pose2D>,
    pub global_path: Vec<[f64; 2]>,
    pub cost_window: CostWindow,
    pub scan: ScanSummary,
    pub obstacles: Vec<Disc>,
    pub events: Vec<String>,
    pub state_hash: String,
}

impl Snapshot {
    pub fn capture(sim: &Simulation, events: Vec<String>, paused: bool) -> Self {
        let nav = sim.navigator();
        let costmap = nav.costmap();
        let g = costmap.geometry;
        let rect = nav.local_costmap().last_window().or_else(|| {
            nav.local_costmap()
                .window
                .cell_rect(&g, sim.estimate().pose.position())
        });
        let cost_window = match rect {
            Some(rect) => window_of(costmap.block(rect), rect, g.resolution, g.origin),
            None => CostWindow {
                col0: 0,
                row0: 0,
                width: 0,
                height: 0,
                resolution: g.resolution,
                origin: g.origin,
                rle: Vec::new(),
            },
        };
        let scan = sim.last_scan();
        Snapshot {
            kind: "snapshot".into(),
            tick: sim.tick_count(),
            sim_time: sim.time(),
            true_pose: sim.truth(),
            est_pose: sim.estimate().pose,
            est_source: sim.estimate().source,
            state: sim.mode(),
            outcome: sim.outcome(),
            paused,
            cmd: sim.last_cmd(),
            goal: nav.goal(),
            global_path: nav
                .path()
                .map(|p| p.waypoints.iter().map(|w| [w.x, w.y]).collect())
                .unwrap_or_default(),
            cost_window,
            scan: ScanSummary {
                stride: SCAN_STRIDE,
                angle_min: scan.angle_min,
                angle_increment: scan.angle_increment * SCAN_STRIDE as f64,
                range_max: scan.range_max,
                ranges: scan.export_ranges().into_iter().step_by(SCAN_STRIDE).collect(),
            },
            obstacles: sim.world().discs().to_vec(),
            events,
            state_hash: sim.state_hash(),
        }
    }
}

fn window_of(costs: Vec<u8>, rect: CellRect, resolution: f64, origin: Point2) -> CostWindow {
    CostWindow {
        col0: rect.col0,
        row0: rect.row0,
        width: rect.width(),
        height: rect.height(),
        resolution,
        origin: Point2::new(
            origin.x + rect.col0 as f64 * resolution,
            origin.y + rect.row0 as f64 * resolution,
        ),
        rle: rle_encode(&costs),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkInfo {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

/// Static map, sent once per connection. Cell codes: 0 free, 1 occupied,
/// 2 unknown, row-major from the lowest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Point2,
    pub cells: Vec<[u32; 2]>,
    pub landmarks: Vec<LandmarkInfo>,
    pub robot_radius: f64,
}

impl MapMessage {
    pub fn capture(sim: &Simulation) -> Self {
        let grid: &OccupancyGrid = sim.world().static_grid();
        let codes: Vec<u8> = grid
            .cells()
            .iter()
            .map(|c| match c {
                CellState::Free => 0,
                CellState::Occupied => 1,
                CellState::Unknown => 2,
            })
            .collect();
        MapMessage {
            kind: "map".into(),
            width: grid.width(),
            height: grid.height(),
            resolution: grid.resolution(),
            origin: grid.geometry.origin,
            cells: rle_encode(&codes),
            landmarks: sim
                .world()
                .landmarks
                .iter()
                .map(|l| LandmarkInfo {
                    id: l.id,
                    x: l.position.x,
                    y: l.position.y,
                })
                .collect(),
            robot_radius: sim.params().robot.radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    #[serde(rename = "type")]
    pub kind: String,
    /// Echo of the command's `id`, if it had one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Reply {
    pub fn ack(id: Option<Value>, command: &str) -> Self {
        Self {
            kind: "ack".into(),
            id,
            command: Some(command.into()),
            message: None,
        }
    }

    pub fn error(id: Option<Value>, message: impl Into<String>) -> Self {
        Self {
            kind: "error".into(),
            id,
            command: None,
            message: Some(message.into()),
        }
    }
}

pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::SetGoal { .. } => "SET_GOAL",
        Command::AddObstacle { .. } => "ADD_OBSTACLE",
        Command::RemoveObstacle { .. } => "REMOVE_OBSTACLE",
        Command::Pause => "PAUSE",
        Command::Resume => "RESUME",
        Command::Reset => "RESET",
        Command::SetParam { .. } => "SET_PARAM",
    }
}

/// Parses an incoming text frame into a command plus its optional `id`.
pub fn parse_command(text: &str) -> Result<(Option<Value>, Command), (Option<Value>, String)> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| (None, format!("invalid JSON: {e}")))?;
    let Some(obj) = value.as_object_mut() else {
        return Err((None, "message must be a JSON object".into()));
    };
    let id = obj.remove("id");
    match obj.remove("type") {
        Some(Value::String(t)) if t == "command" => {}
        Some(other) => return Err((id, format!("unsupported message type {other}"))),
        None => return Err((id, "missing `type`".into())),
    }
    if obj.keys().any(|k| k != "kind" && k != "payload") {
        return Err((id, "unexpected fields in command".into()));
    }
    match serde_json::from_value::<Command>(value) {
        Ok(cmd) => Ok((id, cmd)),
        Err(e) => Err((id, format!("invalid command: {e}"))),
    }
}
