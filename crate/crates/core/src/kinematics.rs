//! Unicycle model of the differential-drive base.
//!
//! The simulator truth and every DWA rollout go through [`step`], an explicit
//! Euler discretization of `x' = v cos θ`, `y' = v sin θ`, `θ' = ω`: position is
//! advanced with the heading at the start of the interval, then the heading is
//! advanced.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// A point in the map frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Planar pose `(x, y, θ)` with `θ` kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// `self ∘ other`: `other` expressed in `self`'s frame, lifted to the parent frame.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2D {
        let (s, c) = self.theta.sin_cos();
        Pose2D::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )
    }

    /// Maps a point from this pose's local frame into the parent frame.
    pub fn transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)
    }

    /// Maps a parent-frame point into this pose's local frame.
    pub fn inverse_transform_point(&self, p: Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Velocity command: linear `v` (m/s) and angular `omega` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub v: f64,
    pub omega: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { v: 0.0, omega: 0.0 };

    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn is_zero(&self) -> bool {
        self.v == 0.0 && self.omega == 0.0
    }
}

/// Physical limits of the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotParams {
    /// m/s
    pub max_v: f64,
    /// rad/s
    pub max_omega: f64,
    /// Footprint radius, m.
    pub radius: f64,
    pub wheel_radius: f64,
    /// Distance between wheel contact points. Only used for wheel-speed output.
    pub track_width: f64,
    /// m/s²
    pub accel_v: f64,
    /// rad/s²
    pub accel_omega: f64,
    /// Control period, s.
    pub dt: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            max_v: 0.30,
            max_omega: 0.20,
            radius: 0.22,
            wheel_radius: 0.03,
            track_width: 0.36,
            accel_v: 0.5,
            accel_omega: 1.0,
            dt: 0.1,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("max_v", self.max_v),
            ("max_omega", self.max_omega),
            ("radius", self.radius),
            ("wheel_radius", self.wheel_radius),
            ("track_width", self.track_width),
            ("accel_v", self.accel_v),
            ("accel_omega", self.accel_omega),
            ("dt", self.dt),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("robot.{name} must be strictly positive, got {value}"));
            }
        }
        Ok(())
    }

    /// Left and right wheel angular speeds (rad/s) realizing `cmd`.
    pub fn wheel_speeds(&self, cmd: Twist) -> (f64, f64) {
        let half = 0.5 * self.track_width * cmd.omega;
        (
            (cmd.v - half) / self.wheel_radius,
            (cmd.v + half) / self.wheel_radius,
        )
    }
}

/// One Euler step of the unicycle model.
pub fn step(pose: Pose2D, cmd: Twist, dt: f64) -> Pose2D {
    debug_assert!(dt > 0.0, "dt must be positive");
    let (s, c) = pose.theta.sin_cos();
    Pose2D::new(
        pose.x + cmd.v * dt * c,
        pose.y + cmd.v * dt * s,
        pose.theta + cmd.omega * dt,
    )
}

/// `steps + 1` poses starting at `pose`, each one [`step`] from the previous.
pub fn rollout(pose: Pose2D, cmd: Twist, dt: f64, steps: usize) -> Vec<Pose2D> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(pose);
    let mut current = pose;
    for _ in 0..steps {
        current = step(current, cmd, dt);
        out.push(current);
    }
    out
}

/// Standard deviations of the velocity perturbation used by [`dead_reckon`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwistNoise {
    pub sigma_v: f64,
    pub sigma_omega: f64,
}

impl TwistNoise {
    /// Draws both components even when a sigma is zero so the stream position
    /// does not depend on the noise configuration.
    pub fn perturb<R: Rng + ?Sized>(&self, cmd: Twist, rng: &mut R) -> Twist {
        let nv: f64 = rng.sample(StandardNormal);
        let nw: f64 = rng.sample(StandardNormal);
        Twist::new(cmd.v + self.sigma_v * nv, cmd.omega + self.sigma_omega * nw)
    }
}

/// Integrates a noisy copy of `cmd`.
pub fn dead_reckon<R: Rng + ?Sized>(
    pose_estimate: Pose2D,
    cmd: Twist,
    dt: f64,
    noise: TwistNoise,
    rng: &mut R,
) -> Pose2D {
    step(pose_estimate, noise.perturb(cmd, rng), dt)
}
