//! Deterministic 2D navigation stack for an indoor differential-drive robot.
//!
//! The pieces mirror a classic navigation stack: a landmark-based pose source
//! feeds a navigator that plans globally with A* over an inflated static
//! costmap and locally with the Dynamic Window Approach over a LiDAR-updated
//! local costmap. [`scenario`] closes the loop against a simulated world.

pub mod costmap;
pub mod error;
pub mod global_planner;
pub mod kinematics;
pub mod local_planner;
pub mod localization;
pub mod metrics;
pub mod navigator;
pub mod rng;
pub mod scenario;
pub mod world;

pub use error::{CommandError, ConfigError, CostmapError, LocalPlanError, MetricsError, ParseError, PlanError, WorldError};
pub use kinematics::{Point2, Pose2D, RobotParams, Twist};
