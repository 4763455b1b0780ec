use thiserror::Error;

use crate::physics::WorldState;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("angle is not finite: {0}")]
    NonFinite(f64),
    #[error("bearing requested between coincident points")]
    CoincidentPoints,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation diverged at t = {time:.3} s")]
    Diverged {
        time: f64,
        /// Last state before the non-finite update.
        last_valid: Box<WorldState>,
    },
    #[error("robot {robot_id} interpenetrates the box (penetration {penetration:.4} m > radius); timestep too large")]
    Interpenetration { robot_id: usize, penetration: f64 },
    #[error("expected {expected} commands, got {got}")]
    CommandCount { expected: usize, got: usize },
    #[error("timestep must be positive, got {0}")]
    BadTimestep(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum FormationError {
    #[error("unsupported team size {0}; expected 4 or 6")]
    TeamSize(usize),
    #[error("corner offset {delta} m must be below half the box length ({half_length} m)")]
    InvalidPlacement { delta: f64, half_length: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("robot {robot_id} did not finish repositioning phase {phase} within {timeout_s} s")]
    RepositionStuck {
        robot_id: usize,
        phase: &'static str,
        timeout_s: f64,
    },
    #[error("robot {robot_id} navigation timed out")]
    NavigationTimeout { robot_id: usize },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("record line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
