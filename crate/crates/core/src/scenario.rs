//! Scenario files and the closed-loop simulation.
//!
//! Each tick: queued commands are applied, the truth pose integrates the last
//! command with actuation noise, the LiDAR and camera are sampled at the new
//! pose, the localizer updates its estimate, and the navigator produces the
//! next command.

use std::collections::VecDeque;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::costmap::{build_static_costmap, InflationParams, LocalCostmap, LocalWindow};
use crate::error::{CommandError, ConfigError};
use crate::global_planner::{Path, PlannerConfig};
use crate::kinematics::{step, Point2, Pose2D, RobotParams, Twist, TwistNoise};
use crate::local_planner::DwaConfig;
use crate::localization::{observe, CameraParams, EstimatorConfig, Localizer, PoseEstimate, PoseSource};
use crate::navigator::{failure_name, NavMode, Navigator, NavigatorConfig};
use crate::rng::SimRng;
use crate::world::{simulate_scan, LidarParams, LidarScan, World};

/// Every tunable of the stack. Any field may be overridden from a scenario
/// file or at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub robot: RobotParams,
    pub lidar: LidarParams,
    pub camera: CameraParams,
    pub estimator: EstimatorConfig,
    pub inflation: InflationParams,
    pub local_window: LocalWindow,
    pub planner: PlannerConfig,
    pub dwa: DwaConfig,
    pub navigator: NavigatorConfig,
    pub actuation_noise: TwistNoise,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            robot: RobotParams::default(),
            lidar: LidarParams::default(),
            camera: CameraParams::default(),
            estimator: EstimatorConfig::default(),
            inflation: InflationParams::default(),
            local_window: LocalWindow::default(),
            planner: PlannerConfig::default(),
            dwa: DwaConfig::default(),
            navigator: NavigatorConfig::default(),
            actuation_noise: TwistNoise {
                sigma_v: 0.01,
                sigma_omega: 0.01,
            },
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), String> {
        self.robot.validate()?;
        self.lidar.validate()?;
        self.camera.validate()?;
        self.inflation.validate().map_err(|e| e.to_string())?;
        self.dwa.validate()?;
        self.navigator.validate()?;
        if !(self.local_window.side > 0.0) {
            return Err("local_window.side must be > 0".into());
        }
        if !(self.planner.cost_weight >= 0.0) {
            return Err("planner.cost_weight must be >= 0".into());
        }
        if !(self.actuation_noise.sigma_v >= 0.0 && self.actuation_noise.sigma_omega >= 0.0) {
            return Err("actuation_noise sigmas must be >= 0".into());
        }
        Ok(())
    }

    /// Returns a copy with the value at `path` replaced. `path` is dotted
    /// (`dwa.w_path`) or a JSON pointer (`/dwa/w_path`).
    pub fn with_override(&self, path: &str, value: serde_json::Value) -> Result<Params, CommandError> {
        let pointer = if path.starts_with('/') {
            path.to_string()
        } else {
            format!("/{}", path.replace('.', "/"))
        };
        let mut doc = serde_json::to_value(self).map_err(|e| CommandError::InvalidParam(e.to_string()))?;
        let slot = doc
            .pointer_mut(&pointer)
            .ok_or_else(|| CommandError::UnknownParam(path.to_string()))?;
        if slot.is_object() {
            return Err(CommandError::UnknownParam(path.to_string()));
        }
        *slot = value;
        let params: Params = serde_json::from_value(doc).map_err(|e| CommandError::InvalidParam(e.to_string()))?;
        params.validate().map_err(CommandError::InvalidParam)?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleAction {
    #[default]
    Add,
    Remove,
}

/// A disc dropped into (or removed from) the world at simulated time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledObstacle {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    #[serde(default)]
    pub action: ObstacleAction,
}

fn default_duration() -> f64 {
    120.0
}

/// Scenario file contents (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Map file; relative paths resolve against the scenario file's directory.
    pub map: PathBuf,
    /// `[x, y]` or `[x, y, theta]`.
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Simulated-time cap, s.
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub obstacles: Vec<ScheduledObstacle>,
}

fn pose_from(values: &[f64], what: &str) -> Result<Pose2D, ConfigError> {
    match values {
        [x, y] => Ok(Pose2D::new(*x, *y, 0.0)),
        [x, y, theta] => Ok(Pose2D::new(*x, *y, *theta)),
        _ => Err(ConfigError::Invalid(format!("{what} must be [x, y] or [x, y, theta]"))),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Reads a scenario file and resolves its map path.
    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = read(path)?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.map.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.map = dir.join(&cfg.map);
            }
        }
        Ok(cfg)
    }

    pub fn start_pose(&self) -> Result<Pose2D, ConfigError> {
        pose_from(&self.start, "start")
    }

    pub fn goal_pose(&self) -> Result<Pose2D, ConfigError> {
        pose_from(&self.goal, "goal")
    }

    pub fn load_world(&self) -> Result<World, ConfigError> {
        let text = read(&self.map)?;
        Ok(World::from_map_text(&text)?)
    }

    /// Checks everything that does not need the simulation to run.
    pub fn validate(&self, world: &World) -> Result<(), ConfigError> {
        let geom = world.grid().geometry;
        let start = self.start_pose()?;
        let goal = self.goal_pose()?;
        if !geom.contains_point(start.position()) {
            return Err(ConfigError::Invalid("start is outside the map".into()));
        }
        if !geom.contains_point(goal.position()) {
            return Err(ConfigError::Invalid("goal is outside the map".into()));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ConfigError::Invalid("duration must be positive".into()));
        }
        for o in &self.obstacles {
            if !(o.radius > 0.0) || !geom.contains_point(Point2::new(o.x, o.y)) || !(o.t >= 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "obstacle at ({}, {}) t={} is malformed",
                    o.x, o.y, o.t
                )));
            }
        }
        self.params.validate().map_err(ConfigError::Invalid)
    }
}

fn read(path: &FsPath) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runtime command accepted between ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Command {
    SetGoal {
        x: f64,
        y: f64,
        #[serde(default)]
        theta: f64,
    },
    AddObstacle {
        x: f64,
        y: f64,
        radius: f64,
    },
    RemoveObstacle {
        x: f64,
        y: f64,
        #[serde(default)]
        radius: f64,
    },
    Pause,
    Resume,
    Reset,
    SetParam {
        path: String,
        value: serde_json::Value,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub t: f64,
    pub true_pose: Pose2D,
    pub est_pose: Pose2D,
    pub source: PoseSource,
    pub cmd: Twist,
    pub state: NavMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub tick: u64,
    pub t: f64,
    pub path: Path,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Reached,
    Failed,
    Timeout,
    Running,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NavigationLog {
    pub records: Vec<LogRecord>,
    pub paths: Vec<PathRecord>,
    pub events: Vec<(u64, String)>,
}

pub const LOG_HEADER: &str = "t,true_x,true_y,true_theta,est_x,est_y,est_theta,v,omega,state";

impl NavigationLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The first accepted global path.
    pub fn reference(&self) -> Option<&Path> {
        self.paths.first().map(|p| &p.path)
    }

    pub fn final_state(&self) -> Option<NavMode> {
        self.records.last().map(|r| r.state)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(96 * (self.records.len() + 1));
        out.push_str(LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.t,
                r.true_pose.x,
                r.true_pose.y,
                r.true_pose.theta,
                r.est_pose.x,
                r.est_pose.y,
                r.est_pose.theta,
                r.cmd.v,
                r.cmd.omega,
                r.state
            ));
        }
        out
    }

    /// `tick,t,index,x,y` per waypoint of every planned path.
    pub fn paths_csv(&self) -> String {
        let mut out = String::from("tick,t,index,x,y\n");
        for p in &self.paths {
            for (i, w) in p.path.waypoints.iter().enumerate() {
                out.push_str(&format!("{},{},{},{},{}\n", p.tick, p.t, i, w.x, w.y));
            }
        }
        out
    }

    /// SHA-256 of [`NavigationLog::to_csv`], hex encoded.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv().as_bytes()))
    }
}

/// Per-tick output of [`Simulation::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub record: LogRecord,
    pub events: Vec<String>,
    pub new_path: Option<Path>,
}

/// Closed-loop simulation of one scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: ScenarioConfig,
    params: Params,
    world: World,
    truth: Pose2D,
    localizer: Localizer,
    navigator: Navigator,
    rng: SimRng,
    tick: u64,
    time: f64,
    cmd: Twist,
    scan: LidarScan,
    estimate: PoseEstimate,
    queue: VecDeque<Command>,
    next_scheduled: usize,
    outcome: Outcome,
    log: NavigationLog,
    pending_events: Vec<String>,
    /// Mode reported by the last tick, or set by a command since.
    state: NavMode,
}

impl Simulation {
    pub fn new(config: ScenarioConfig, world: World) -> Result<Self, ConfigError> {
        config.validate(&world)?;
        let params = config.params.clone();
        Self::build(config, params, world)
    }

    /// Loads the scenario file and its map.
    pub fn from_file(path: impl AsRef<FsPath>) -> Result<Self, ConfigError> {
        let config = ScenarioConfig::load(path)?;
        let world = config.load_world()?;
        Self::new(config, world)
    }

    fn build(mut config: ScenarioConfig, params: Params, mut world: World) -> Result<Self, ConfigError> {
        world.reset_obstacles();
        config.obstacles.sort_by(|a, b| a.t.total_cmp(&b.t));
        let start = config.start_pose()?;
        let goal = config.goal_pose()?;
        let static_costmap =
            build_static_costmap(world.static_grid(), params.inflation).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let local = LocalCostmap::new(static_costmap, params.local_window);
        let mut navigator = Navigator::new(
            local,
            params.robot.clone(),
            params.dwa.clone(),
            params.planner,
            params.navigator.clone(),
        );
        let state = navigator.set_goal(goal);
        let localizer = Localizer::new(start, params.camera.clone(), params.estimator.clone());
        let estimate = *localizer.current();
        let scan = LidarScan::empty(&params.lidar, start, 0.0);
        Ok(Self {
            rng: SimRng::new(config.seed),
            config,
            params,
            world,
            truth: start,
            localizer,
            navigator,
            tick: 0,
            time: 0.0,
            cmd: Twist::ZERO,
            scan,
            estimate,
            queue: VecDeque::new(),
            next_scheduled: 0,
            outcome: Outcome::Running,
            log: NavigationLog::default(),
            pending_events: Vec::new(),
            state,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn navigator(&self) -> &Navigator {
        &self.navigator
    }

    pub fn truth(&self) -> Pose2D {
        self.truth
    }

    pub fn estimate(&self) -> &PoseEstimate {
        &self.estimate
    }

    pub fn last_scan(&self) -> &LidarScan {
        &self.scan
    }

    pub fn last_cmd(&self) -> Twist {
        self.cmd
    }

    /// Number of completed ticks.
    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn log(&self) -> &NavigationLog {
        &self.log
    }

    pub fn into_log(self) -> NavigationLog {
        self.log
    }

    pub fn is_finished(&self) -> bool {
        self.outcome != Outcome::Running
    }

    /// Mode as reported by the last tick; a command applied since then
    /// (new goal, reset) shows through immediately.
    pub fn mode(&self) -> NavMode {
        self.state
    }

    /// Queues a command for the next tick boundary.
    pub fn enqueue(&mut self, command: Command) {
        self.queue.push_back(command);
    }

    /// Applies a command immediately. `PAUSE` and `RESUME` belong to whoever
    /// drives the loop and are accepted as no-ops here.
    pub fn apply(&mut self, command: Command) -> Result<(), CommandError> {
        match command {
            Command::SetGoal { x, y, theta } => {
                let mode = self.navigator.set_goal(Pose2D::new(x, y, theta));
                self.state = mode;
                if !mode.is_terminal() {
                    self.outcome = Outcome::Running;
                } else {
                    self.outcome = Outcome::Failed;
                }
                self.pending_events.push(format!("set_goal:{x},{y}"));
            }
            Command::AddObstacle { x, y, radius } => {
                self.world.add_obstacle(Point2::new(x, y), radius)?;
                self.pending_events.push(format!("add_obstacle:{x},{y},{radius}"));
            }
            Command::RemoveObstacle { x, y, radius } => {
                self.world.remove_obstacle(Point2::new(x, y), radius)?;
                self.pending_events.push(format!("remove_obstacle:{x},{y}"));
            }
            Command::Pause | Command::Resume => {}
            Command::Reset => {
                let rebuilt = Self::build(self.config.clone(), self.params.clone(), self.world.clone())
                    .map_err(|e| CommandError::InvalidParam(e.to_string()))?;
                *self = rebuilt;
                self.pending_events.push("reset".into());
            }
            Command::SetParam { path, value } => {
                let params = self.params.with_override(&path, value)?;
                self.set_params(params)?;
                self.pending_events.push(format!("set_param:{path}"));
            }
        }
        Ok(())
    }

    fn set_params(&mut self, params: Params) -> Result<(), CommandError> {
        if params.inflation != self.params.inflation || params.local_window != self.params.local_window {
            let costmap = build_static_costmap(self.world.static_grid(), params.inflation)
                .map_err(|e| CommandError::InvalidParam(e.to_string()))?;
            self.navigator.replace_costmap(LocalCostmap::new(costmap, params.local_window));
        }
        self.navigator.robot = params.robot.clone();
        self.navigator.dwa = params.dwa.clone();
        self.navigator.planner = params.planner;
        self.navigator.config = params.navigator.clone();
        self.localizer.camera = params.camera.clone();
        self.localizer.config = params.estimator.clone();
        self.params = params;
        Ok(())
    }

    fn apply_schedule(&mut self) {
        while let Some(o) = self.config.obstacles.get(self.next_scheduled).copied() {
            if o.t > self.time + 1e-9 {
                break;
            }
            self.next_scheduled += 1;
            let center = Point2::new(o.x, o.y);
            let applied = match o.action {
                ObstacleAction::Add => self.world.add_obstacle(center, o.radius).map(|_| "add_obstacle"),
                ObstacleAction::Remove => self.world.remove_obstacle(center, o.radius).map(|_| "remove_obstacle"),
            };
            if let Ok(kind) = applied {
                self.pending_events.push(format!("{kind}:{},{},{}", o.x, o.y, o.radius));
            }
        }
    }

    /// Advances one control period. Returns `None` once the run has finished.
    pub fn step(&mut self) -> Option<TickReport> {
        let mut failed_commands = Vec::new();
        while let Some(command) = self.queue.pop_front() {
            if let Err(e) = self.apply(command) {
                failed_commands.push(format!("command_error:{e}"));
            }
        }
        self.pending_events.extend(failed_commands);
        if self.is_finished() {
            return None;
        }
        self.apply_schedule();

        let dt = self.params.robot.dt;
        let noisy = self.params.actuation_noise.perturb(self.cmd, &mut self.rng.actuation);
        let applied = if self.cmd.is_zero() { Twist::ZERO } else { noisy };
        let next = step(self.truth, applied, dt);
        self.tick += 1;
        self.time = self.tick as f64 * dt;
        if !self.world.grid().geometry.contains_point(next.position()) {
            self.outcome = Outcome::Failed;
            self.pending_events.push("left_map".into());
            return None;
        }
        self.truth = next;

        self.scan = simulate_scan(self.world.grid(), self.truth, &self.params.lidar, self.time, &mut self.rng.lidar)
            .expect("truth pose checked inside the map");
        let observations = observe(
            self.truth,
            &self.world.landmarks,
            self.world.grid(),
            &self.params.camera,
            self.time,
            &mut self.rng.camera,
        );
        self.estimate = self.localizer.track(self.cmd, dt, &observations, &self.world.landmarks);
        self.estimate.stamp = self.time;

        let out = self.navigator.tick(&self.estimate, &self.scan, dt);
        self.cmd = out.cmd;
        self.state = out.mode;

        let record = LogRecord {
            tick: self.tick,
            t: self.time,
            true_pose: self.truth,
            est_pose: self.estimate.pose,
            source: self.estimate.source,
            cmd: out.cmd,
            state: out.mode,
        };
        self.log.records.push(record);
        if let Some(path) = &out.new_path {
            self.log.paths.push(PathRecord {
                tick: self.tick,
                t: self.time,
                path: path.clone(),
            });
        }
        let mut events = std::mem::take(&mut self.pending_events);
        events.extend(out.events);
        for e in &events {
            self.log.events.push((self.tick, e.clone()));
        }

        self.outcome = match out.mode {
            NavMode::Reached => Outcome::Reached,
            NavMode::Failed => Outcome::Failed,
            _ if self.time >= self.config.duration - 1e-9 => Outcome::Timeout,
            _ => Outcome::Running,
        };
        if out.mode == NavMode::Idle {
            self.outcome = Outcome::Running;
        }

        Some(TickReport {
            record,
            events,
            new_path: out.new_path,
        })
    }

    /// Steps until the run finishes.
    pub fn run(&mut self) -> Outcome {
        while self.step().is_some() {}
        self.outcome
    }

    pub fn failure_reason(&self) -> Option<&'static str> {
        self.navigator.failure().map(failure_name)
    }

    /// Hash of the state that evolves between ticks.
    pub fn state_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.tick.to_le_bytes());
        for v in [
            self.truth.x,
            self.truth.y,
            self.truth.theta,
            self.estimate.pose.x,
            self.estimate.pose.y,
            self.estimate.pose.theta,
            self.cmd.v,
            self.cmd.omega,
        ] {
            h.update(v.to_le_bytes());
        }
        h.update(self.navigator.mode().as_str().as_bytes());
        for d in self.world.discs() {
            h.update(d.center.x.to_le_bytes());
            h.update(d.center.y.to_le_bytes());
            h.update(d.radius.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Runs a scenario to completion.
pub fn run_scenario(config: ScenarioConfig, world: World) -> Result<(Outcome, NavigationLog), ConfigError> {
    let mut sim = Simulation::new(config, world)?;
    let outcome = sim.run();
    Ok((outcome, sim.into_log()))
}
