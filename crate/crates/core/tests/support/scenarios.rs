//! Scripted end-to-end runs shared by the scenario tests and the acceptance run.
#![allow(dead_code)]

use std::path::PathBuf;

use gridnav_core::scenario::{Command, Outcome, ScenarioConfig, Simulation};
use gridnav_core::world::CellState;
use gridnav_core::Point2;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn paper_config(seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::load(fixture("paper_ab.scenario")).unwrap();
    cfg.seed = seed;
    cfg
}

pub fn paper_sim(seed: u64) -> Simulation {
    let cfg = paper_config(seed);
    let world = cfg.load_world().unwrap();
    Simulation::new(cfg, world).unwrap()
}

#[derive(Debug)]
pub struct ObstacleTrial {
    pub outcome: Outcome,
    pub added_at: u64,
    pub replan_at: Option<u64>,
    pub collided: bool,
    pub min_clearance: f64,
    pub path_avoids_disc: bool,
}

impl ObstacleTrial {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Reached
            && !self.collided
            && self.path_avoids_disc
            && self.replan_at.is_some_and(|t| t <= self.added_at + 1)
    }
}

/// Drives the paper scenario for `warmup` ticks, drops a disc of `radius` on
/// the active path `ahead` meters in front of the robot, and runs to the end.
pub fn obstacle_trial(seed: u64, warmup: usize, ahead: f64, radius: f64) -> ObstacleTrial {
    let mut sim = paper_sim(seed);
    for _ in 0..warmup {
        sim.step();
    }
    let path = sim.navigator().path().expect("following a path").clone();
    let here = sim.truth().position();
    let (q, seg, _) = path.closest_point(here).unwrap();
    let b = path.waypoints[(seg + 1).min(path.len() - 1)];
    let d = q.distance(&b).max(1e-9);
    let center = Point2::new(q.x + (b.x - q.x) * ahead / d, q.y + (b.y - q.y) * ahead / d);
    sim.enqueue(Command::AddObstacle {
        x: center.x,
        y: center.y,
        radius,
    });
    // The command is applied at the start of the next tick.
    let added_at = sim.tick_count() + 1;
    let mut replan_at = None;
    let mut collided = false;
    let mut min_clearance = f64::INFINITY;
    let mut path_avoids_disc = true;
    while let Some(report) = sim.step() {
        if replan_at.is_none() && report.events.iter().any(|e| e.starts_with("replan")) {
            replan_at = Some(report.record.tick);
        }
        if let Some(p) = &report.new_path {
            if replan_at.is_some() && p.waypoints.iter().any(|w| w.distance(&center) <= radius) {
                path_avoids_disc = false;
            }
        }
        let t = sim.truth().position();
        if sim.world().grid().state_at(t) == Some(CellState::Occupied) || t.distance(&center) <= radius {
            collided = true;
        }
        min_clearance = min_clearance.min(t.distance(&center) - radius);
    }
    ObstacleTrial {
        outcome: sim.outcome(),
        added_at,
        replan_at,
        collided,
        min_clearance,
        path_avoids_disc,
    }
}
