//! Three-phase corrective maneuver returning a drifted robot to its slot:
//! turn parallel to the edge, drive to the slot, turn back to face the box.

use serde::{Deserialize, Serialize};

use super::Observation;
use crate::command::ControlCommand;
use crate::formation::FormationSlot;
use crate::geometry::{angle_diff, bearing_to, to_box_frame, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepositionPhase {
    AlignParallel,
    Translate,
    ReorientPerpendicular,
}

impl RepositionPhase {
    pub fn name(self) -> &'static str {
        match self {
            RepositionPhase::AlignParallel => "align-parallel",
            RepositionPhase::Translate => "translate",
            RepositionPhase::ReorientPerpendicular => "reorient-perpendicular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepositionParams {
    /// Heading P-gain, 1/s.
    pub heading_gain: f64,
    /// Distance P-gain while translating, 1/s.
    pub drive_gain: f64,
    /// Slowest translate speed, m/s.
    pub min_speed: f64,
    pub phase_heading_tol: f64,
    pub phase_pos_tol: f64,
    /// Per-phase time budget, s.
    pub phase_timeout: f64,
}

impl Default for RepositionParams {
    fn default() -> Self {
        Self {
            heading_gain: 3.0,
            drive_gain: 1.5,
            min_speed: 0.03,
            phase_heading_tol: 0.03,
            phase_pos_tol: 0.01,
            phase_timeout: 30.0,
        }
    }
}

/// Whether the robot has drifted from its slot in the box frame.
pub fn check_reposition(obs: &Observation, slot: &FormationSlot, pos_tol: f64, heading_tol: f64) -> bool {
    let local = to_box_frame(&obs.box_pose, obs.self_pose.position());
    let pos_err = (local.as_vec() - slot.coord.as_vec()).norm();
    let heading_err = angle_diff(obs.self_pose.theta, obs.box_pose.theta + slot.heading).abs();
    pos_err > pos_tol || heading_err > heading_tol
}

/// Edge-parallel heading pointing along the needed travel, or the one
/// nearest the current heading when no travel along the edge is needed.
fn parallel_heading(obs: &Observation, slot: &FormationSlot, pos_tol: f64) -> f64 {
    let inward = obs.box_pose.theta + slot.heading;
    let left = inward + std::f64::consts::FRAC_PI_2;
    let tangent = Vec2::new(left.cos(), left.sin());
    let along = (slot.world_position(&obs.box_pose) - obs.self_pose.position()).dot(&tangent);
    if along > pos_tol {
        left
    } else if along < -pos_tol {
        left + std::f64::consts::PI
    } else if angle_diff(left, obs.self_pose.theta).abs() <= std::f64::consts::FRAC_PI_2 {
        left
    } else {
        left + std::f64::consts::PI
    }
}

pub(crate) struct ManeuverLimits {
    pub v_max: f64,
    pub omega_max: f64,
}

/// One control step of the maneuver. Returns the command and the phase to
/// use next step (`None` once complete).
pub(crate) fn maneuver_step(
    phase: RepositionPhase,
    obs: &Observation,
    slot: &FormationSlot,
    params: &RepositionParams,
    limits: &ManeuverLimits,
) -> (ControlCommand, Option<RepositionPhase>) {
    let turn = |target: f64| {
        let err = angle_diff(target, obs.self_pose.theta);
        (err, (params.heading_gain * err).clamp(-limits.omega_max, limits.omega_max))
    };
    match phase {
        RepositionPhase::AlignParallel => {
            let at_slot =
                (slot.world_position(&obs.box_pose) - obs.self_pose.position()).norm() < params.phase_pos_tol;
            let (err, omega) = turn(parallel_heading(obs, slot, params.phase_pos_tol));
            if at_slot || err.abs() < params.phase_heading_tol {
                maneuver_step(RepositionPhase::Translate, obs, slot, params, limits)
            } else {
                (ControlCommand::new(0.0, omega), Some(phase))
            }
        }
        RepositionPhase::Translate => {
            let goal = slot.world_position(&obs.box_pose);
            let here = obs.self_pose.position();
            let dist = (goal - here).norm();
            if dist < params.phase_pos_tol {
                return maneuver_step(RepositionPhase::ReorientPerpendicular, obs, slot, params, limits);
            }
            let bearing = bearing_to(here, goal).unwrap_or(obs.self_pose.theta);
            let forward = angle_diff(bearing, obs.self_pose.theta);
            // Reverse when the goal is behind, so the heading stays edge-parallel.
            let (dir, err) = if forward.abs() <= std::f64::consts::FRAC_PI_2 {
                (1.0, forward)
            } else {
                (-1.0, angle_diff(bearing + std::f64::consts::PI, obs.self_pose.theta))
            };
            let speed = (params.drive_gain * dist).clamp(params.min_speed, limits.v_max) * err.cos().max(0.0);
            let omega = (params.heading_gain * err).clamp(-limits.omega_max, limits.omega_max);
            (ControlCommand::new(dir * speed, omega), Some(phase))
        }
        RepositionPhase::ReorientPerpendicular => {
            let (err, omega) = turn(obs.box_pose.theta + slot.heading);
            if err.abs() < params.phase_heading_tol {
                (ControlCommand::STOP, None)
            } else {
                (ControlCommand::new(0.0, omega), Some(phase))
            }
        }
    }
}
