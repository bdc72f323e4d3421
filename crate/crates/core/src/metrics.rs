//! Error series computed from a navigation log.

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::global_planner::Path;
use crate::kinematics::normalize_angle;
use crate::scenario::NavigationLog;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub t: Vec<f64>,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub e_norm: Vec<f64>,
    /// Heading error; all zero for tracking error.
    pub etheta: Vec<f64>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn push(&mut self, t: f64, ex: f64, ey: f64, etheta: f64) {
        self.t.push(t);
        self.ex.push(ex);
        self.ey.push(ey);
        self.e_norm.push(ex.hypot(ey));
        self.etheta.push(etheta);
    }

    /// Whitespace-free CSV with a header, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,ex,ey,e_norm,etheta\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.t[i], self.ex[i], self.ey[i], self.e_norm[i], self.etheta[i]
            ));
        }
        out
    }
}

/// Deviation of each true pose from its nearest point on `reference`
/// (true minus nearest).
pub fn tracking_error(log: &NavigationLog, reference: &Path) -> Result<ErrorSeries, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let mut series = ErrorSeries::default();
    for r in &log.records {
        let p = r.true_pose.position();
        let (q, _, _) = reference.closest_point(p).expect("reference is non-empty");
        series.push(r.t, p.x - q.x, p.y - q.y, 0.0);
    }
    Ok(series)
}

/// Estimated minus true pose per tick, heading wrapped.
pub fn localization_error(log: &NavigationLog) -> Result<ErrorSeries, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let mut series = ErrorSeries::default();
    for r in &log.records {
        series.push(
            r.t,
            r.est_pose.x - r.true_pose.x,
            r.est_pose.y - r.true_pose.y,
            normalize_angle(r.est_pose.theta - r.true_pose.theta),
        );
    }
    Ok(series)
}

/// `max` is the largest absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ColumnStats {
    pub max: f64,
    pub rms: f64,
    pub mean: f64,
}

impl ColumnStats {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        Self {
            max: values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            rms: (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
            mean: values.iter().sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub samples: usize,
    pub ex: ColumnStats,
    pub ey: ColumnStats,
    pub e_norm: ColumnStats,
    pub etheta: ColumnStats,
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("column,max,rms,mean\n");
        for (name, c) in [("ex", self.ex), ("ey", self.ey), ("e_norm", self.e_norm), ("etheta", self.etheta)] {
            out.push_str(&format!("{name},{},{},{}\n", c.max, c.rms, c.mean));
        }
        out
    }
}

pub fn summarize(series: &ErrorSeries) -> Result<Summary, MetricsError> {
    if series.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    Ok(Summary {
        samples: series.len(),
        ex: ColumnStats::of(&series.ex),
        ey: ColumnStats::of(&series.ey),
        e_norm: ColumnStats::of(&series.e_norm),
        etheta: ColumnStats::of(&series.etheta),
    })
}
