//! Goal-seeking state machine tying the planners, costmaps and pose estimate
//! together.
//!
//! A tick in which the global planner runs reports `PLANNING` with a zero
//! twist; the robot starts following on the next tick. Replanning is triggered
//! periodically and whenever a remaining path cell inside the freshly updated
//! local window reaches [`INSCRIBED`].

use serde::{Deserialize, Serialize};

use crate::costmap::{Costmap, LocalCostmap, INSCRIBED};
use crate::error::{LocalPlanError, PlanError};
use crate::global_planner::{plan, simplify, Path, PlannerConfig};
use crate::kinematics::{Point2, Pose2D, RobotParams, Twist};
use crate::local_planner::{compute_cmd, DwaConfig, DwaInput};
use crate::localization::PoseEstimate;
use crate::world::{CellWalker, LidarScan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NavMode {
    Idle,
    Planning,
    Following,
    Recovery,
    Reached,
    Failed,
}

impl NavMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NavMode::Idle => "IDLE",
            NavMode::Planning => "PLANNING",
            NavMode::Following => "FOLLOWING",
            NavMode::Recovery => "RECOVERY",
            NavMode::Reached => "REACHED",
            NavMode::Failed => "FAILED",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, NavMode::Reached | NavMode::Failed)
    }
}

impl std::fmt::Display for NavMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureReason {
    GoalBlocked,
    GoalOutOfBounds,
    RecoveryExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalTolerance {
    /// m
    pub xy: f64,
    /// rad; `None` ignores the final heading.
    pub yaw: Option<f64>,
}

impl Default for GoalTolerance {
    fn default() -> Self {
        Self { xy: 0.20, yaw: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavigatorConfig {
    pub tolerance: GoalTolerance,
    /// s
    pub replan_period: f64,
    /// s
    pub recovery_duration: f64,
}

impl Default for NavigatorConfig {
    fn default() -> Self {
        Self {
            tolerance: GoalTolerance::default(),
            replan_period: 5.0,
            recovery_duration: 2.0,
        }
    }
}

impl NavigatorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tolerance.xy > 0.0) {
            return Err("navigator.tolerance.xy must be > 0".into());
        }
        if !(self.replan_period > 0.0 && self.recovery_duration > 0.0) {
            return Err("navigator periods must be > 0".into());
        }
        Ok(())
    }
}

/// Result of one [`Navigator::tick`].
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub mode: NavMode,
    pub cmd: Twist,
    pub events: Vec<String>,
    /// Set when this tick produced a new global path.
    pub new_path: Option<Path>,
}

#[derive(Debug, Clone)]
pub struct Navigator {
    pub robot: RobotParams,
    pub dwa: DwaConfig,
    pub planner: PlannerConfig,
    pub config: NavigatorConfig,
    local: LocalCostmap,
    mode: NavMode,
    goal: Option<Pose2D>,
    path: Option<Path>,
    reference: Option<Path>,
    failure: Option<FailureReason>,
    time: f64,
    last_replan: f64,
    last_cmd: Twist,
    recovery_elapsed: f64,
    recovery_pending: bool,
    pending_events: Vec<String>,
}

impl Navigator {
    pub fn new(local: LocalCostmap, robot: RobotParams, dwa: DwaConfig, planner: PlannerConfig, config: NavigatorConfig) -> Self {
        Self {
            robot,
            dwa,
            planner,
            config,
            local,
            mode: NavMode::Idle,
            goal: None,
            path: None,
            reference: None,
            failure: None,
            time: 0.0,
            last_replan: 0.0,
            last_cmd: Twist::ZERO,
            recovery_elapsed: 0.0,
            recovery_pending: false,
            pending_events: Vec::new(),
        }
    }

    pub fn mode(&self) -> NavMode {
        self.mode
    }

    pub fn goal(&self) -> Option<Pose2D> {
        self.goal
    }

    /// The path currently being followed.
    pub fn path(&self) -> Option<&Path> {
        self.path.as_ref()
    }

    /// First path accepted for the current goal.
    pub fn reference(&self) -> Option<&Path> {
        self.reference.as_ref()
    }

    pub fn failure(&self) -> Option<FailureReason> {
        self.failure
    }

    pub fn last_replan(&self) -> f64 {
        self.last_replan
    }

    pub fn local_costmap(&self) -> &LocalCostmap {
        &self.local
    }

    pub fn costmap(&self) -> &Costmap {
        self.local.costmap()
    }

    pub fn last_cmd(&self) -> Twist {
        self.last_cmd
    }

    /// Swaps in a new local costmap, e.g. after inflation parameters change.
    pub fn replace_costmap(&mut self, local: LocalCostmap) {
        self.local = local;
    }

    pub fn set_goal(&mut self, goal: Pose2D) -> NavMode {
        self.goal = Some(goal);
        self.path = None;
        self.reference = None;
        self.failure = None;
        self.recovery_pending = false;
        self.recovery_elapsed = 0.0;
        self.last_cmd = Twist::ZERO;
        let static_map = self.local.static_costmap();
        match static_map.geometry.world_to_cell(goal.position()) {
            None => self.fail(FailureReason::GoalOutOfBounds),
            Some((c, r)) if static_map.cost(c, r) >= INSCRIBED => self.fail(FailureReason::GoalBlocked),
            Some(_) => {
                self.mode = NavMode::Planning;
                self.pending_events.push("goal_set".into());
            }
        }
        self.mode
    }

    /// Drops the goal and all runtime state.
    pub fn reset(&mut self) {
        self.local.reset();
        self.mode = NavMode::Idle;
        self.goal = None;
        self.path = None;
        self.reference = None;
        self.failure = None;
        self.time = 0.0;
        self.last_replan = 0.0;
        self.last_cmd = Twist::ZERO;
        self.recovery_elapsed = 0.0;
        self.recovery_pending = false;
        self.pending_events.clear();
    }

    fn fail(&mut self, reason: FailureReason) {
        self.mode = NavMode::Failed;
        self.failure = Some(reason);
        self.path = None;
        self.pending_events.push(format!("failed:{}", failure_name(reason)));
    }

    pub fn tick(&mut self, estimate: &PoseEstimate, scan: &LidarScan, dt: f64) -> TickOutput {
        debug_assert!(dt > 0.0);
        self.time += dt;
        let pose = estimate.pose;
        self.local.update(scan, pose);
        let mut new_path = None;

        if matches!(self.mode, NavMode::Following | NavMode::Planning) {
            let goal = self.goal.expect("navigating without a goal");
            if pose.position().distance(&goal.position()) <= self.config.tolerance.xy {
                self.mode = NavMode::Reached;
                self.path = None;
                self.pending_events.push("reached".into());
            } else if self.mode == NavMode::Planning {
                // planned below
            } else if self.path_blocked(&pose) {
                self.pending_events.push("replan:blocked".into());
                self.mode = NavMode::Planning;
            } else if self.time - self.last_replan >= self.config.replan_period - 1e-9 {
                self.pending_events.push("replan:periodic".into());
                self.mode = NavMode::Planning;
            }
        }

        let acting = self.mode;
        let cmd = match acting {
            NavMode::Idle | NavMode::Reached | NavMode::Failed => Twist::ZERO,
            NavMode::Planning => {
                new_path = self.run_planner(&pose);
                Twist::ZERO
            }
            NavMode::Following => self.follow(&pose),
            NavMode::Recovery => {
                self.recovery_elapsed += dt;
                if self.recovery_elapsed >= self.config.recovery_duration - 1e-9 {
                    self.mode = NavMode::Planning;
                    self.pending_events.push("recovery_done".into());
                }
                Twist::new(0.0, self.robot.max_omega / 2.0)
            }
        };
        let reported = if acting == NavMode::Following || self.mode == NavMode::Failed {
            self.mode
        } else {
            acting
        };
        self.last_cmd = cmd;
        TickOutput {
            mode: reported,
            cmd,
            events: std::mem::take(&mut self.pending_events),
            new_path,
        }
    }

    fn run_planner(&mut self, pose: &Pose2D) -> Option<Path> {
        let goal = self.goal.expect("planning without a goal");
        self.last_replan = self.time;
        let costmap = self.local.costmap();
        let start = pose.position();
        let result = match plan(costmap, start, goal.position(), &self.planner) {
            Err(PlanError::StartBlocked(cost)) => match escape_point(costmap, start, 2.0 * self.robot.radius) {
                Some(exit) => plan(costmap, exit, goal.position(), &self.planner).map(|mut path| {
                    path.waypoints.insert(0, start);
                    path
                }),
                None => Err(PlanError::StartBlocked(cost)),
            },
            other => other,
        };
        match result {
            Ok(raw) => {
                let path = simplify(&raw, self.local.costmap());
                if self.reference.is_none() {
                    self.reference = Some(path.clone());
                }
                self.path = Some(path.clone());
                self.mode = NavMode::Following;
                self.pending_events.push("plan_ok".into());
                Some(path)
            }
            Err(PlanError::GoalBlocked(_)) | Err(PlanError::GoalOutOfBounds(_)) => {
                self.pending_events.push("plan_failed:goal_blocked".into());
                self.fail(FailureReason::GoalBlocked);
                None
            }
            Err(e) => {
                self.pending_events.push(format!("plan_failed:{}", plan_error_name(&e)));
                self.enter_recovery();
                None
            }
        }
    }

    fn follow(&mut self, pose: &Pose2D) -> Twist {
        let path = self.path.as_ref().expect("following without a path");
        let input = DwaInput {
            pose: *pose,
            twist: self.last_cmd,
            goal: self.goal.expect("following without a goal"),
            path,
            costmap: self.local.costmap(),
        };
        match compute_cmd(&input, &self.robot, &self.dwa) {
            Ok(decision) => {
                self.recovery_pending = false;
                decision.cmd
            }
            Err(LocalPlanError::Blocked) | Err(LocalPlanError::EmptyPath) => {
                self.pending_events.push("dwa_blocked".into());
                self.enter_recovery();
                Twist::ZERO
            }
        }
    }

    fn enter_recovery(&mut self) {
        if self.recovery_pending {
            self.fail(FailureReason::RecoveryExhausted);
            return;
        }
        self.recovery_pending = true;
        self.recovery_elapsed = 0.0;
        self.mode = NavMode::Recovery;
        self.pending_events.push("recovery".into());
    }

    /// True when a remaining path cell inside the last updated window costs
    /// [`INSCRIBED`] or more.
    fn path_blocked(&self, pose: &Pose2D) -> bool {
        let (Some(path), Some(rect)) = (self.path.as_ref(), self.local.last_window()) else {
            return false;
        };
        let costmap = self.local.costmap();
        let remaining = path.remaining_from(pose.position());
        let pts = &remaining.waypoints;
        let check = |c: i64, r: i64| rect.contains(c, r) && costmap.cost_signed(c, r) >= INSCRIBED;
        if pts.len() == 1 {
            let (c, r) = costmap.geometry.world_to_cell_unchecked(pts[0]);
            return check(c, r);
        }
        pts.windows(2)
            .any(|w| CellWalker::segment(&costmap.geometry, w[0], w[1]).any(|(c, r, _)| check(c, r)))
    }
}

/// Center of the nearest cell within `radius` of `p` that costs less than
/// [`INSCRIBED`]; ties go to the lowest row-major index.
fn escape_point(costmap: &Costmap, p: Point2, radius: f64) -> Option<Point2> {
    let g = costmap.geometry;
    let (c0, r0) = g.world_to_cell_unchecked(p);
    let n = (radius / g.resolution).ceil() as i64;
    let mut best: Option<(f64, Point2)> = None;
    for r in r0 - n..=r0 + n {
        for c in c0 - n..=c0 + n {
            if !g.contains_cell(c, r) || costmap.cost(c as usize, r as usize) >= INSCRIBED {
                continue;
            }
            let q = g.cell_center(c as usize, r as usize);
            let d = q.distance(&p);
            if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, q));
            }
        }
    }
    best.map(|(_, q)| q)
}

pub fn failure_name(reason: FailureReason) -> &'static str {
    match reason {
        FailureReason::GoalBlocked => "goal_blocked",
        FailureReason::GoalOutOfBounds => "goal_out_of_bounds",
        FailureReason::RecoveryExhausted => "recovery_exhausted",
    }
}

fn plan_error_name(e: &PlanError) -> &'static str {
    match e {
        PlanError::StartOutOfBounds(_) => "start_out_of_bounds",
        PlanError::GoalOutOfBounds(_) => "goal_out_of_bounds",
        PlanError::StartBlocked(_) => "start_blocked",
        PlanError::GoalBlocked(_) => "goal_blocked",
        PlanError::NoPath => "no_path",
    }
}
