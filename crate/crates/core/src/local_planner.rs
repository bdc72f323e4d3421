//! Dynamic Window Approach.
//!
//! Commands reachable within one control period are sampled on a uniform
//! `nv × nomega` lattice (v-major), each is rolled out with the unicycle model,
//! and the feasible rollouts are ranked by a weighted sum of four terms, each
//! min-max normalized over the feasible set:
//!
//! * path: minus the distance from the rollout endpoint to the global path
//! * goal: minus the distance from the rollout endpoint to the goal
//! * obstacle: the worst clearance proxy `(253 - cost) / 253` along the rollout
//! * velocity: `v / max_v`
//!
//! A rollout is infeasible when any of its poses (the start included) sits on
//! a cell costing [`LETHAL`] or more.

use serde::{Deserialize, Serialize};

use crate::costmap::{Costmap, INSCRIBED, LETHAL};
use crate::error::LocalPlanError;
use crate::global_planner::Path;
use crate::kinematics::{rollout, Pose2D, RobotParams, Twist};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityWindow {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl VelocityWindow {
    pub fn contains(&self, cmd: Twist) -> bool {
        cmd.v >= self.v_min && cmd.v <= self.v_max && cmd.omega >= self.omega_min && cmd.omega <= self.omega_max
    }
}

/// Velocities reachable from `current` within `dt`, intersected with the
/// forward-only limits of the base.
pub fn dynamic_window(current: Twist, params: &RobotParams, dt: f64) -> VelocityWindow {
    let dv = params.accel_v * dt;
    let dw = params.accel_omega * dt;
    VelocityWindow {
        v_min: (current.v - dv).max(0.0).min(params.max_v),
        v_max: (current.v + dv).min(params.max_v).max(0.0),
        omega_min: (current.omega - dw).max(-params.max_omega).min(params.max_omega),
        omega_max: (current.omega + dw).min(params.max_omega).max(-params.max_omega),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DwaConfig {
    pub nv: usize,
    pub nomega: usize,
    /// Rollout length, s.
    pub horizon: f64,
    /// Rollout integration step, s.
    pub sim_dt: f64,
    pub w_path: f64,
    pub w_goal: f64,
    pub w_obstacle: f64,
    pub w_velocity: f64,
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self {
            nv: 11,
            nomega: 21,
            horizon: 2.0,
            sim_dt: 0.1,
            w_path: 0.8,
            w_goal: 0.6,
            w_obstacle: 0.4,
            w_velocity: 0.2,
        }
    }
}

impl DwaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.nv < 2 {
            return Err(format!("dwa.nv must be >= 2, got {}", self.nv));
        }
        if self.nomega < 3 || self.nomega.is_multiple_of(2) {
            return Err(format!("dwa.nomega must be odd and >= 3, got {}", self.nomega));
        }
        if !(self.horizon > 0.0 && self.sim_dt > 0.0) {
            return Err("dwa.horizon and dwa.sim_dt must be positive".into());
        }
        let weights = [self.w_path, self.w_goal, self.w_obstacle, self.w_velocity];
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err("dwa weights must be finite and >= 0".into());
        }
        Ok(())
    }

    pub fn rollout_steps(&self) -> usize {
        ((self.horizon / self.sim_dt).round() as usize).max(1)
    }

    fn weights(&self) -> [f64; 4] {
        [self.w_path, self.w_goal, self.w_obstacle, self.w_velocity]
    }
}

fn lattice(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if k == 0 {
        lo
    } else if k + 1 == n {
        hi
    } else {
        lo + (hi - lo) * (k as f64 / (n - 1) as f64)
    }
}

/// Sample commands in scan order: v-major, then ω ascending.
pub fn sample_commands(window: &VelocityWindow, cfg: &DwaConfig) -> Vec<Twist> {
    let mut out = Vec::with_capacity(cfg.nv * cfg.nomega);
    for i in 0..cfg.nv {
        let v = lattice(window.v_min, window.v_max, cfg.nv, i);
        for j in 0..cfg.nomega {
            out.push(Twist::new(v, lattice(window.omega_min, window.omega_max, cfg.nomega, j)));
        }
    }
    out
}

/// Index order of the four scoring terms.
pub const TERM_PATH: usize = 0;
pub const TERM_GOAL: usize = 1;
pub const TERM_OBSTACLE: usize = 2;
pub const TERM_VELOCITY: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrajectory {
    pub cmd: Twist,
    pub rollout: Vec<Pose2D>,
    /// Weighted normalized score; `-inf` when infeasible.
    pub score: f64,
    pub feasible: bool,
    /// Raw (unnormalized) term values, see `TERM_*`.
    pub terms: [f64; 4],
}

/// Everything the local planner looks at for one decision.
#[derive(Debug, Clone, Copy)]
pub struct DwaInput<'a> {
    pub pose: Pose2D,
    pub twist: Twist,
    pub goal: Pose2D,
    pub path: &'a Path,
    pub costmap: &'a Costmap,
}

/// Scores every sample of `window`. Returns all samples with their
/// feasibility flags, or an empty list when none is feasible.
pub fn evaluate(
    window: &VelocityWindow,
    input: &DwaInput<'_>,
    robot: &RobotParams,
    cfg: &DwaConfig,
) -> Result<Vec<ScoredTrajectory>, LocalPlanError> {
    if input.path.is_empty() {
        return Err(LocalPlanError::EmptyPath);
    }
    let steps = cfg.rollout_steps();
    let goal = input.goal.position();

    let mut samples: Vec<ScoredTrajectory> = sample_commands(window, cfg)
        .into_iter()
        .map(|cmd| {
            let poses = rollout(input.pose, cmd, cfg.sim_dt, steps);
            let mut feasible = true;
            let mut clearance = 1.0f64;
            for p in &poses {
                let cost = input.costmap.cost_at(p.position());
                if cost >= LETHAL {
                    feasible = false;
                }
                let proxy = ((INSCRIBED as f64 - cost as f64) / INSCRIBED as f64).clamp(0.0, 1.0);
                clearance = clearance.min(proxy);
            }
            let end = poses[poses.len() - 1].position();
            let terms = [
                -input.path.distance_to(end),
                -end.distance(&goal),
                clearance,
                cmd.v / robot.max_v,
            ];
            ScoredTrajectory {
                cmd,
                rollout: poses,
                score: f64::NEG_INFINITY,
                feasible,
                terms,
            }
        })
        .collect();

    if !samples.iter().any(|s| s.feasible) {
        return Ok(Vec::new());
    }

    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for s in samples.iter().filter(|s| s.feasible) {
        for k in 0..4 {
            lo[k] = lo[k].min(s.terms[k]);
            hi[k] = hi[k].max(s.terms[k]);
        }
    }
    let weights = cfg.weights();
    for s in samples.iter_mut().filter(|s| s.feasible) {
        let mut score = 0.0;
        for k in 0..4 {
            let normalized = if hi[k] > lo[k] {
                (s.terms[k] - lo[k]) / (hi[k] - lo[k])
            } else {
                0.0
            };
            score += weights[k] * normalized;
        }
        s.score = score;
    }
    Ok(samples)
}

/// Index of the best feasible sample; ties go to the lowest index.
pub fn best_index(samples: &[ScoredTrajectory]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in samples.iter().enumerate() {
        if !s.feasible {
            continue;
        }
        if best.is_none_or(|b| s.score > samples[b].score) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwaDecision {
    pub cmd: Twist,
    pub index: usize,
    pub rollout: Vec<Pose2D>,
}

/// Best command for the current state. Stopping at the goal is the caller's job.
pub fn compute_cmd(input: &DwaInput<'_>, robot: &RobotParams, cfg: &DwaConfig) -> Result<DwaDecision, LocalPlanError> {
    let window = dynamic_window(input.twist, robot, robot.dt);
    let mut samples = evaluate(&window, input, robot, cfg)?;
    let index = best_index(&samples).ok_or(LocalPlanError::Blocked)?;
    let chosen = samples.swap_remove(index);
    Ok(DwaDecision {
        cmd: chosen.cmd,
        index,
        rollout: chosen.rollout,
    })
}
