use serde::{Deserialize, Serialize};

/// Unicycle command emitted by a robot controller each control step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub v: f64,
    pub omega: f64,
    /// Broadcast request for every peer to halt.
    pub stop_flag: bool,
}

impl ControlCommand {
    pub const STOP: Self = Self {
        v: 0.0,
        omega: 0.0,
        stop_flag: false,
    };

    pub fn new(v: f64, omega: f64) -> Self {
        Self {
            v,
            omega,
            stop_flag: false,
        }
    }

    pub fn flagged(mut self, flag: bool) -> Self {
        self.stop_flag = flag;
        self
    }
}
