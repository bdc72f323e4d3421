//! Landmark-based pose source.
//!
//! The visual front end is simulated: the camera reports range and bearing to
//! every landmark it can see, with known ids. Poses are recovered by damped
//! Gauss–Newton on the whitened residuals, and the pipeline falls back to dead
//! reckoning whenever too few landmarks are visible or the solver diverges.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kinematics::{normalize_angle, step, Point2, Pose2D, Twist};
use crate::world::{raycast_unchecked, LandmarkMap, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub landmark_id: u32,
    /// Camera frame, radians.
    pub bearing: f64,
    pub range: f64,
    pub stamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraParams {
    /// Horizontal field of view, degrees.
    pub fov: f64,
    pub range_min: f64,
    pub range_max: f64,
    /// Hz
    pub rate: f64,
    pub bearing_sigma: f64,
    pub range_sigma: f64,
    /// Camera pose in the robot frame.
    pub extrinsic: Pose2D,
}

impl Default for CameraParams {
    fn default() -> Self {
        Self {
            fov: 90.0,
            range_min: 0.02,
            range_max: 20.0,
            rate: 30.0,
            bearing_sigma: 0.01,
            range_sigma: 0.05,
            extrinsic: Pose2D::default(),
        }
    }
}

impl CameraParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fov > 0.0 && self.fov < 360.0) {
            return Err(format!("camera.fov must be in (0, 360), got {}", self.fov));
        }
        if !(self.range_min > 0.0 && self.range_min < self.range_max) {
            return Err("camera range bounds must satisfy 0 < range_min < range_max".into());
        }
        if !(self.bearing_sigma >= 0.0 && self.range_sigma >= 0.0) {
            return Err("camera noise sigmas must be >= 0".into());
        }
        Ok(())
    }

    pub fn half_fov(&self) -> f64 {
        self.fov.to_radians() / 2.0
    }

    /// Camera pose in the map for a robot pose.
    pub fn camera_pose(&self, robot: Pose2D) -> Pose2D {
        robot.compose(&self.extrinsic)
    }
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub min_landmarks: usize,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub max_halvings: usize,
    /// Consecutive residual increases treated as divergence.
    pub divergence_iterations: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            min_landmarks: 3,
            max_iterations: 25,
            step_tolerance: 1e-6,
            max_halvings: 5,
            divergence_iterations: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PoseSource {
    Visual,
    DeadReckoning,
}

/// Why an estimate came from dead reckoning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Fallback {
    TooFewLandmarks,
    Diverged,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: Pose2D,
    /// RMS of the whitened residuals at the solution; 0 for dead reckoning.
    pub residual_rms: f64,
    pub source: PoseSource,
    pub stamp: f64,
    pub landmarks_used: usize,
    pub iterations: usize,
    pub fallback: Option<Fallback>,
}

impl PoseEstimate {
    pub fn dead_reckoning(pose: Pose2D, stamp: f64, fallback: Fallback) -> Self {
        Self {
            pose,
            residual_rms: 0.0,
            source: PoseSource::DeadReckoning,
            stamp,
            landmarks_used: 0,
            iterations: 0,
            fallback: Some(fallback),
        }
    }
}

/// Landmarks the camera sees from `true_pose`, with Gaussian noise. A landmark
/// is hidden when an OCCUPIED cell lies on the sight line short of it.
pub fn observe<R: Rng + ?Sized>(
    true_pose: Pose2D,
    landmarks: &LandmarkMap,
    grid: &OccupancyGrid,
    cam: &CameraParams,
    stamp: f64,
    rng: &mut R,
) -> Vec<Observation> {
    let camera = cam.camera_pose(true_pose);
    let origin = camera.position();
    if !grid.geometry.contains_point(origin) {
        return Vec::new();
    }
    let half_fov = cam.half_fov();
    let tolerance = grid.resolution();
    let mut out = Vec::new();
    for lm in landmarks.iter() {
        let dx = lm.position.x - origin.x;
        let dy = lm.position.y - origin.y;
        let range = dx.hypot(dy);
        if range < cam.range_min || range > cam.range_max {
            continue;
        }
        let world_angle = dy.atan2(dx);
        let bearing = normalize_angle(world_angle - camera.theta);
        if bearing.abs() > half_fov {
            continue;
        }
        if raycast_unchecked(grid, origin, world_angle, range - tolerance).is_some() {
            continue;
        }
        let nb: f64 = rng.sample(StandardNormal);
        let nr: f64 = rng.sample(StandardNormal);
        out.push(Observation {
            landmark_id: lm.id,
            bearing: (bearing + cam.bearing_sigma * nb).clamp(-half_fov, half_fov),
            range: (range + cam.range_sigma * nr).clamp(cam.range_min, cam.range_max),
            stamp,
        });
    }
    out
}

struct Matched {
    landmark: Point2,
    bearing: f64,
    range: f64,
}

fn weighted_sq_error(pose: &Pose2D, obs: &[Matched], cam: &CameraParams) -> f64 {
    obs.iter()
        .map(|o| {
            let dx = o.landmark.x - pose.x;
            let dy = o.landmark.y - pose.y;
            let er = (o.range - dx.hypot(dy)) / cam.range_sigma;
            let eb = normalize_angle(o.bearing - (dy.atan2(dx) - pose.theta)) / cam.bearing_sigma;
            er * er + eb * eb
        })
        .sum()
}

/// Gauss–Newton on the camera pose, then mapped back to the robot frame.
/// Observations of ids missing from `map` are ignored.
pub fn estimate_pose(
    obs: &[Observation],
    map: &LandmarkMap,
    prior: Pose2D,
    cam: &CameraParams,
    cfg: &EstimatorConfig,
    stamp: f64,
) -> PoseEstimate {
    let matched: Vec<Matched> = obs
        .iter()
        .filter_map(|o| {
            map.get(o.landmark_id).map(|lm| Matched {
                landmark: lm.position,
                bearing: o.bearing,
                range: o.range,
            })
        })
        .collect();
    if matched.len() < cfg.min_landmarks.max(1) {
        return PoseEstimate::dead_reckoning(prior, stamp, Fallback::TooFewLandmarks);
    }
    // Zero sigmas would make the weights infinite; treat them as tiny instead.
    let cam_w = CameraParams {
        range_sigma: cam.range_sigma.max(1e-9),
        bearing_sigma: cam.bearing_sigma.max(1e-9),
        ..cam.clone()
    };

    let mut pose = cam.camera_pose(prior);
    let mut cost = weighted_sq_error(&pose, &matched, &cam_w);
    let mut increases = 0usize;
    let mut iterations = 0usize;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        let mut h = Matrix3::<f64>::zeros();
        let mut g = Vector3::<f64>::zeros();
        for o in &matched {
            let dx = o.landmark.x - pose.x;
            let dy = o.landmark.y - pose.y;
            let r2 = (dx * dx + dy * dy).max(1e-12);
            let r = r2.sqrt();
            let er = (o.range - r) / cam_w.range_sigma;
            let jr = Vector3::new(dx / r, dy / r, 0.0) / cam_w.range_sigma;
            let eb = normalize_angle(o.bearing - (dy.atan2(dx) - pose.theta)) / cam_w.bearing_sigma;
            let jb = Vector3::new(-dy / r2, dx / r2, 1.0) / cam_w.bearing_sigma;
            h += jr * jr.transpose() + jb * jb.transpose();
            g += jr * er + jb * eb;
        }
        let Some(chol) = h.cholesky() else {
            return PoseEstimate::dead_reckoning(prior, stamp, Fallback::Degenerate);
        };
        let mut delta = -chol.solve(&g);
        let mut candidate = apply(&pose, &delta);
        let mut candidate_cost = weighted_sq_error(&candidate, &matched, &cam_w);
        let mut halvings = 0;
        while candidate_cost > cost && halvings < cfg.max_halvings {
            delta *= 0.5;
            candidate = apply(&pose, &delta);
            candidate_cost = weighted_sq_error(&candidate, &matched, &cam_w);
            halvings += 1;
        }
        if candidate_cost > cost {
            increases += 1;
            if increases >= cfg.divergence_iterations {
                return PoseEstimate::dead_reckoning(prior, stamp, Fallback::Diverged);
            }
        } else {
            increases = 0;
        }
        pose = candidate;
        cost = candidate_cost;
        if !pose.x.is_finite() || !pose.y.is_finite() || !pose.theta.is_finite() {
            return PoseEstimate::dead_reckoning(prior, stamp, Fallback::Diverged);
        }
        if delta.norm() < cfg.step_tolerance {
            break;
        }
    }

    PoseEstimate {
        pose: pose.compose(&cam.extrinsic.inverse()),
        residual_rms: (cost / (2 * matched.len()) as f64).sqrt(),
        source: PoseSource::Visual,
        stamp,
        landmarks_used: matched.len(),
        iterations,
        fallback: None,
    }
}

fn apply(pose: &Pose2D, delta: &Vector3<f64>) -> Pose2D {
    Pose2D::new(pose.x + delta[0], pose.y + delta[1], pose.theta + delta[2])
}

/// Predicts with the commanded twist, then corrects with the observations.
pub fn track(
    previous: &PoseEstimate,
    cmd: Twist,
    dt: f64,
    obs: &[Observation],
    map: &LandmarkMap,
    cam: &CameraParams,
    cfg: &EstimatorConfig,
) -> PoseEstimate {
    let prior = step(previous.pose, cmd, dt);
    estimate_pose(obs, map, prior, cam, cfg, previous.stamp + dt)
}

/// Holds the running estimate between ticks.
#[derive(Debug, Clone)]
pub struct Localizer {
    pub camera: CameraParams,
    pub config: EstimatorConfig,
    current: PoseEstimate,
}

impl Localizer {
    pub fn new(initial: Pose2D, camera: CameraParams, config: EstimatorConfig) -> Self {
        Self {
            camera,
            config,
            current: PoseEstimate {
                pose: initial,
                residual_rms: 0.0,
                source: PoseSource::DeadReckoning,
                stamp: 0.0,
                landmarks_used: 0,
                iterations: 0,
                fallback: None,
            },
        }
    }

    pub fn current(&self) -> &PoseEstimate {
        &self.current
    }

    pub fn track(&mut self, cmd: Twist, dt: f64, obs: &[Observation], map: &LandmarkMap) -> PoseEstimate {
        self.current = track(&self.current, cmd, dt, obs, map, &self.camera, &self.config);
        self.current
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{CellState, GridGeometry, Landmark};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn open_grid() -> OccupancyGrid {
        let g = GridGeometry {
            width: 200,
            height: 200,
            resolution: 0.05,
            origin: Point2::new(-5.0, -5.0),
        };
        OccupancyGrid::filled(g, CellState::Free).unwrap()
    }

    fn ring(n: usize, radius: f64) -> LandmarkMap {
        LandmarkMap::from_landmarks((0..n).map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            Landmark {
                id: i as u32,
                position: Point2::new(radius * a.cos(), radius * a.sin()),
            }
        }))
        .unwrap()
    }

    fn exact(map: &LandmarkMap, pose: Pose2D) -> Vec<Observation> {
        map.iter()
            .map(|lm| {
                let dx = lm.position.x - pose.x;
                let dy = lm.position.y - pose.y;
                Observation {
                    landmark_id: lm.id,
                    bearing: normalize_angle(dy.atan2(dx) - pose.theta),
                    range: dx.hypot(dy),
                    stamp: 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn dead_ahead_landmark() {
        let map = LandmarkMap::from_landmarks([Landmark {
            id: 7,
            position: Point2::new(1.0, 0.0),
        }])
        .unwrap();
        let cam = CameraParams {
            bearing_sigma: 0.0,
            range_sigma: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let obs = observe(Pose2D::default(), &map, &open_grid(), &cam, 0.0, &mut rng);
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].bearing, 0.0);
        assert_eq!(obs[0].range, 1.0);
    }

    #[test]
    fn out_of_fov_and_range_are_dropped() {
        let map = LandmarkMap::from_landmarks([
            Landmark {
                id: 1,
                position: Point2::new(-1.0, 0.0),
            },
            Landmark {
                id: 2,
                position: Point2::new(1.0, 1.01),
            },
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let obs = observe(Pose2D::default(), &map, &open_grid(), &CameraParams::default(), 0.0, &mut rng);
        assert!(obs.is_empty());
    }

    #[test]
    fn wall_occludes() {
        let mut grid = open_grid();
        for row in 0..200 {
            grid.set(110, row, CellState::Occupied);
        }
        let map = LandmarkMap::from_landmarks([Landmark {
            id: 1,
            position: Point2::new(1.0, 0.0),
        }])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(observe(Pose2D::default(), &map, &grid, &CameraParams::default(), 0.0, &mut rng).is_empty());
    }

    #[test]
    fn fixed_point_single_iteration() {
        let map = ring(8, 3.0);
        let truth = Pose2D::new(0.4, -0.2, 0.3);
        let est = estimate_pose(
            &exact(&map, truth),
            &map,
            truth,
            &CameraParams::default(),
            &EstimatorConfig::default(),
            0.0,
        );
        assert_eq!(est.source, PoseSource::Visual);
        assert_eq!(est.iterations, 1);
        assert!(est.residual_rms < 1e-9);
        assert!((est.pose.x - truth.x).abs() < 1e-12);
    }

    #[test]
    fn converges_from_perturbed_prior() {
        let map = ring(6, 3.0);
        let truth = Pose2D::new(0.1, 0.2, -0.4);
        let prior = Pose2D::new(0.4, 0.5, -0.2);
        let est = estimate_pose(
            &exact(&map, truth),
            &map,
            prior,
            &CameraParams::default(),
            &EstimatorConfig::default(),
            0.0,
        );
        assert_eq!(est.source, PoseSource::Visual);
        assert!(est.pose.position().distance(&truth.position()) < 1e-6);
        assert!(normalize_angle(est.pose.theta - truth.theta).abs() < 1e-6);
    }

    #[test]
    fn extrinsic_is_undone() {
        let map = ring(8, 3.0);
        let cam = CameraParams {
            extrinsic: Pose2D::new(0.1, 0.05, 0.2),
            ..Default::default()
        };
        let truth = Pose2D::new(-0.3, 0.2, 1.0);
        let obs = exact(&map, cam.camera_pose(truth));
        let est = estimate_pose(&obs, &map, Pose2D::new(-0.2, 0.1, 0.9), &cam, &EstimatorConfig::default(), 0.0);
        assert!(est.pose.position().distance(&truth.position()) < 1e-6);
        assert!(normalize_angle(est.pose.theta - truth.theta).abs() < 1e-6);
    }

    #[test]
    fn too_few_landmarks_keeps_prior() {
        let map = ring(8, 3.0);
        let prior = Pose2D::new(1.0, 1.0, 1.0);
        let obs = exact(&map, Pose2D::default());
        let est = estimate_pose(&obs[..1], &map, prior, &CameraParams::default(), &EstimatorConfig::default(), 0.0);
        assert_eq!(est.source, PoseSource::DeadReckoning);
        assert_eq!(est.fallback, Some(Fallback::TooFewLandmarks));
        assert_eq!(est.pose, prior);
    }

    #[test]
    fn stationary_without_landmarks_is_constant() {
        let mut loc = Localizer::new(Pose2D::new(1.0, 2.0, 0.5), CameraParams::default(), EstimatorConfig::default());
        let map = LandmarkMap::new();
        for _ in 0..10 {
            loc.track(Twist::ZERO, 0.1, &[], &map);
        }
        assert_eq!(loc.current().pose, Pose2D::new(1.0, 2.0, 0.5));
    }
}
