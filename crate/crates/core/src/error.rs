use thiserror::Error;

use crate::kinematics::Point2;

/// Map document parse failure, 1-based position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("point ({}, {}) is outside the map", .0.x, .0.y)]
    OutOfBounds(Point2),
    #[error("resolution must be positive, got {0}")]
    InvalidResolution(f64),
    #[error("grid has {actual} cells, expected {expected}")]
    CellCount { expected: usize, actual: usize },
    #[error("duplicate landmark id {0}")]
    DuplicateLandmark(u32),
    #[error("obstacle radius must be positive, got {0}")]
    InvalidRadius(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostmapError {
    #[error("inflation radii must satisfy inflation_radius >= inscribed_radius >= 0 (got inscribed {inscribed}, inflation {inflation})")]
    InvalidRadii { inscribed: f64, inflation: f64 },
    #[error("decay must be non-negative, got {0}")]
    InvalidDecay(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("start ({}, {}) is outside the map", .0.x, .0.y)]
    StartOutOfBounds(Point2),
    #[error("goal ({}, {}) is outside the map", .0.x, .0.y)]
    GoalOutOfBounds(Point2),
    #[error("start cell is in lethal or inscribed space (cost {0})")]
    StartBlocked(u8),
    #[error("goal cell is in lethal or inscribed space (cost {0})")]
    GoalBlocked(u8),
    #[error("no path exists between start and goal")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalPlanError {
    #[error("every sampled trajectory collides")]
    Blocked,
    #[error("reference path is empty")]
    EmptyPath,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("navigation log is empty")]
    EmptyLog,
    #[error("reference path is empty")]
    EmptyReference,
    #[error("error series is empty")]
    EmptySeries,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario syntax: {0}")]
    Syntax(String),
    #[error("map: {0}")]
    Map(#[from] ParseError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

/// A runtime command that could not be applied; the simulation is unchanged.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("invalid parameter value: {0}")]
    InvalidParam(String),
}
