//! Decentralized R2P2 robot controller.
//!
//! Each robot runs its own [`R2p2Controller`] on an [`Observation`] snapshot:
//! own pose, box pose and twist, the current target, and peer stop flags.
//! No peer pose is ever visible to it.

mod laws;
mod reposition;
mod roles;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use laws::{
    prevent_velocity, push_velocity, support_tracking_velocity, support_velocity, SpinSign, SupportSign,
};
pub use reposition::{check_reposition, RepositionParams, RepositionPhase};
pub use roles::{assign_role, select_primitive, yaw_error, BoxPrimitive, Role, YawErrorMode};

pub(crate) use reposition::{maneuver_step, ManeuverLimits};

use crate::command::ControlCommand;
use crate::error::ControlError;
use crate::formation::{BoxDims, FormationSlot};
use crate::geometry::{bearing_to, Pose2D, Twist2D, Vec2};
use crate::physics::closest_point_on_box;

/// Everything a robot is allowed to observe.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub self_pose: Pose2D,
    pub box_pose: Pose2D,
    pub box_twist: Twist2D,
    pub target: Vec2,
    pub peer_stop_flags: BTreeMap<usize, bool>,
}

impl Observation {
    pub fn any_peer_stopped(&self) -> bool {
        self.peer_stop_flags.values().any(|&f| f)
    }
}

/// How a robot flagged for repositioning gets back to its slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepositionMode {
    /// Drive the three-phase maneuver.
    #[default]
    Maneuver,
    /// Snap to the slot and charge a fixed time penalty (sensitivity study).
    Teleport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Rotation gain, the reciprocal of the rotation `k_p`.
    pub k_rot: f64,
    /// Translation gain, the reciprocal of the translation `k_p`.
    pub k_trans: f64,
    pub v_min: f64,
    /// Largest box speed prevent robots yield to, m/s.
    pub v_max_box: f64,
    pub v_max_hw: f64,
    pub omega_max_hw: f64,
    /// Primitive switching tolerance, rad.
    pub eps_primitive: f64,
    /// Role-rule margin beyond the long edges, m.
    pub eps_width: f64,
    /// Control steps between slot-drift checks.
    pub reposition_check_interval: u32,
    pub reposition_pos_tol: f64,
    pub reposition_heading_tol: f64,
    pub yaw_error: YawErrorMode,
    pub support_sign: SupportSign,
    pub spin_sign: SpinSign,
    pub reposition_mode: RepositionMode,
    pub reposition: RepositionParams,
    /// Controller period, s.
    pub control_dt: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            k_rot: 0.125,
            k_trans: 0.3,
            v_min: 0.15,
            v_max_box: 0.22,
            v_max_hw: crate::physics::DEFAULT_V_MAX,
            omega_max_hw: crate::physics::DEFAULT_OMEGA_MAX,
            eps_primitive: 0.2,
            eps_width: 0.02,
            reposition_check_interval: 25,
            reposition_pos_tol: 0.05,
            reposition_heading_tol: 10f64.to_radians(),
            yaw_error: YawErrorMode::Shortest,
            support_sign: SupportSign::Tracking,
            spin_sign: SpinSign::CoRotate,
            reposition_mode: RepositionMode::Maneuver,
            reposition: RepositionParams::default(),
            control_dt: 0.05,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let gains = [
            ("k_rot", self.k_rot),
            ("k_trans", self.k_trans),
            ("v_min", self.v_min),
            ("v_max_box", self.v_max_box),
            ("eps_primitive", self.eps_primitive),
            ("control_dt", self.control_dt),
        ];
        for (name, value) in gains {
            if !(value > 0.0) {
                return Err(format!("{name} must be positive, got {value}"));
            }
        }
        if !(self.v_min < self.v_max_hw) {
            return Err(format!(
                "v_min {} must be below the hardware limit {}",
                self.v_min, self.v_max_hw
            ));
        }
        if self.reposition_check_interval == 0 {
            return Err("reposition_check_interval must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Active,
    Repositioning(RepositionPhase),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotControllerState {
    pub robot_id: usize,
    pub slot: FormationSlot,
    pub mode: Mode,
    pub steps_since_check: u32,
    /// Control steps spent in the current reposition phase.
    pub phase_steps: u32,
}

impl RobotControllerState {
    pub fn new(robot_id: usize, slot: FormationSlot) -> Self {
        Self {
            robot_id,
            slot,
            mode: Mode::Active,
            steps_since_check: 0,
            phase_steps: 0,
        }
    }

    pub fn stop_flag(&self) -> bool {
        matches!(self.mode, Mode::Repositioning(_))
    }
}

/// Command plus the decision that produced it, for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOutput {
    pub command: ControlCommand,
    pub primitive: Option<BoxPrimitive>,
    pub role: Option<Role>,
}

impl CycleOutput {
    fn hold(flag: bool) -> Self {
        Self {
            command: ControlCommand::STOP.flagged(flag),
            primitive: None,
            role: None,
        }
    }
}

/// Snapshot-in, command-out robot controller.
pub trait RobotController: Send {
    fn cycle(&mut self, obs: &Observation) -> Result<CycleOutput, ControlError>;
    fn slot(&self) -> &FormationSlot;
    fn is_repositioning(&self) -> bool;
    /// Ends a pending reposition as if the maneuver had completed.
    fn complete_reposition(&mut self);
}

/// Lever arm from the box centre to the robot's contact point.
pub fn contact_lever(obs: &Observation, dims: BoxDims) -> f64 {
    let b = crate::physics::BoxBody::new(obs.box_pose, dims.length, dims.width, 1.0);
    closest_point_on_box(&b, obs.self_pose.position()).norm()
}

/// Velocity command for an active robot under a given primitive and role.
pub fn role_command(
    obs: &Observation,
    primitive: BoxPrimitive,
    role: Role,
    config: &ControllerConfig,
    dims: BoxDims,
) -> (f64, f64) {
    match role {
        Role::Push => {
            let (error, gain) = if primitive.is_rotation() {
                let required = bearing_to(obs.box_pose.position(), obs.target).unwrap_or(obs.box_pose.theta);
                (yaw_error(obs.box_pose.theta, required, config.yaw_error), config.k_rot)
            } else {
                ((obs.box_pose.position() - obs.target).norm(), config.k_trans)
            };
            push_velocity(error, 1.0 / gain, config.v_min, config.v_max_hw)
        }
        Role::Prevent => prevent_velocity(&obs.box_twist, contact_lever(obs, dims), config.v_max_box, config.spin_sign),
        Role::Support if config.support_sign == SupportSign::Tracking => support_tracking_velocity(
            &obs.box_twist,
            obs.box_pose.position(),
            &obs.self_pose,
            config.v_max_hw,
            config.omega_max_hw,
        ),
        Role::Support => support_velocity(
            &obs.box_twist,
            contact_lever(obs, dims),
            config.support_sign,
            config.spin_sign,
            config.v_max_hw,
            config.omega_max_hw,
        ),
    }
}

fn reposition_cycle(
    phase: RepositionPhase,
    obs: &Observation,
    state: &mut RobotControllerState,
    config: &ControllerConfig,
) -> Result<CycleOutput, ControlError> {
    let limits = ManeuverLimits {
        v_max: config.v_max_hw,
        omega_max: config.omega_max_hw,
    };
    let (command, next) = maneuver_step(phase, obs, &state.slot, &config.reposition, &limits);
    match next {
        None => {
            state.mode = Mode::Active;
            state.phase_steps = 0;
            state.steps_since_check = 0;
            Ok(CycleOutput::hold(false))
        }
        Some(next_phase) => {
            if next_phase == phase {
                state.phase_steps += 1;
                if f64::from(state.phase_steps) * config.control_dt > config.reposition.phase_timeout {
                    return Err(ControlError::RepositionStuck {
                        robot_id: state.robot_id,
                        phase: phase.name(),
                        timeout_s: config.reposition.phase_timeout,
                    });
                }
            } else {
                state.phase_steps = 0;
            }
            state.mode = Mode::Repositioning(next_phase);
            Ok(CycleOutput {
                command: command.flagged(true),
                primitive: None,
                role: None,
            })
        }
    }
}

/// One decision cycle of the R2P2 flow.
///
/// A robot mid-maneuver keeps maneuvering. An active robot halts while any
/// peer flag is up, with its check counter frozen. Otherwise it counts
/// toward the next drift check, possibly starting a maneuver, and else
/// selects the primitive, assigns itself a role and applies that role's law.
pub fn control_cycle(
    obs: &Observation,
    state: &mut RobotControllerState,
    config: &ControllerConfig,
    dims: BoxDims,
) -> Result<CycleOutput, ControlError> {
    if let Mode::Repositioning(phase) = state.mode {
        return reposition_cycle(phase, obs, state, config);
    }
    if obs.any_peer_stopped() {
        return Ok(CycleOutput::hold(false));
    }
    state.steps_since_check += 1;
    if state.steps_since_check >= config.reposition_check_interval {
        state.steps_since_check = 0;
        if check_reposition(obs, &state.slot, config.reposition_pos_tol, config.reposition_heading_tol) {
            state.phase_steps = 0;
            state.mode = Mode::Repositioning(RepositionPhase::AlignParallel);
            if config.reposition_mode == RepositionMode::Teleport {
                return Ok(CycleOutput::hold(true));
            }
            return reposition_cycle(RepositionPhase::AlignParallel, obs, state, config);
        }
    }
    let primitive = select_primitive(&obs.box_pose, obs.target, config.eps_primitive);
    let role = assign_role(&obs.self_pose, &obs.box_pose, obs.target, primitive, dims, config.eps_width);
    let (v, omega) = role_command(obs, primitive, role, config, dims);
    Ok(CycleOutput {
        command: ControlCommand::new(v, omega),
        primitive: Some(primitive),
        role: Some(role),
    })
}

#[derive(Debug, Clone)]
pub struct R2p2Controller {
    pub config: ControllerConfig,
    pub dims: BoxDims,
    pub state: RobotControllerState,
}

impl R2p2Controller {
    pub fn new(robot_id: usize, slot: FormationSlot, config: ControllerConfig, dims: BoxDims) -> Self {
        Self {
            config,
            dims,
            state: RobotControllerState::new(robot_id, slot),
        }
    }
}

impl RobotController for R2p2Controller {
    fn cycle(&mut self, obs: &Observation) -> Result<CycleOutput, ControlError> {
        control_cycle(obs, &mut self.state, &self.config, self.dims)
    }

    fn slot(&self) -> &FormationSlot {
        &self.state.slot
    }

    fn is_repositioning(&self) -> bool {
        self.state.stop_flag()
    }

    fn complete_reposition(&mut self) {
        self.state.mode = Mode::Active;
        self.state.phase_steps = 0;
        self.state.steps_since_check = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::initial_placement;
    use approx::assert_abs_diff_eq;

    fn dims() -> BoxDims {
        BoxDims::new(1.35, 0.35)
    }

    fn slot(id: usize) -> FormationSlot {
        initial_placement(dims(), 6, 0.175, 0.105).unwrap()[id]
    }

    fn obs_at_slot(id: usize, box_pose: Pose2D, target: Vec2) -> Observation {
        Observation {
            self_pose: slot(id).world_pose(&box_pose),
            box_pose,
            box_twist: Twist2D::default(),
            target,
            peer_stop_flags: BTreeMap::new(),
        }
    }

    #[test]
    fn raised_peer_flag_halts_active_robot() {
        let mut o = obs_at_slot(4, Pose2D::default(), Vec2::new(1.0, 0.0));
        o.peer_stop_flags.insert(2, true);
        let mut st = RobotControllerState::new(4, slot(4));
        st.steps_since_check = 7;
        let out = control_cycle(&o, &mut st, &ControllerConfig::default(), dims()).unwrap();
        assert_eq!(out.command, ControlCommand::STOP);
        assert_eq!(st.steps_since_check, 7, "counter frozen while flagged");
    }

    #[test]
    fn push_robot_follows_proportional_law() {
        let o = obs_at_slot(4, Pose2D::default(), Vec2::new(0.8, 0.0));
        let mut st = RobotControllerState::new(4, slot(4));
        let cfg = ControllerConfig {
            k_trans: 0.3,
            v_min: 0.1,
            ..ControllerConfig::default()
        };
        let out = control_cycle(&o, &mut st, &cfg, dims()).unwrap();
        assert_eq!(out.role, Some(Role::Push));
        assert_eq!(out.primitive, Some(BoxPrimitive::StraightMotion));
        let (expected, _) = push_velocity(0.8, 1.0 / 0.3, 0.1, 0.22);
        assert_abs_diff_eq!(out.command.v, expected);
        assert_abs_diff_eq!(out.command.v, 0.22);
    }

    #[test]
    fn drift_check_starts_maneuver_and_raises_flag() {
        let mut o = obs_at_slot(0, Pose2D::default(), Vec2::new(1.0, 0.0));
        o.self_pose.y += 0.08;
        let mut st = RobotControllerState::new(0, slot(0));
        let cfg = ControllerConfig::default();
        for _ in 0..cfg.reposition_check_interval - 1 {
            let out = control_cycle(&o, &mut st, &cfg, dims()).unwrap();
            assert!(!out.command.stop_flag);
        }
        let out = control_cycle(&o, &mut st, &cfg, dims()).unwrap();
        assert!(out.command.stop_flag);
        assert!(st.stop_flag());
    }

    #[test]
    fn check_reposition_examples() {
        let s = slot(1);
        let o = obs_at_slot(1, Pose2D::new(0.2, 0.1, 0.4), Vec2::new(1.0, 0.0));
        assert!(!check_reposition(&o, &s, 0.05, 10f64.to_radians()));
        let mut off = o.clone();
        let tangent = crate::geometry::unit(o.box_pose.theta + std::f64::consts::FRAC_PI_2);
        off.self_pose.x += 0.08 * tangent.x;
        off.self_pose.y += 0.08 * tangent.y;
        assert!(check_reposition(&off, &s, 0.05, 10f64.to_radians()));
        let mut turned = o.clone();
        turned.self_pose.theta += 12f64.to_radians();
        assert!(check_reposition(&turned, &s, 0.05, 10f64.to_radians()));
    }

    #[test]
    fn maneuver_at_slot_completes_immediately() {
        let o = obs_at_slot(3, Pose2D::new(0.5, 0.5, 1.0), Vec2::new(3.0, 3.0));
        let mut st = RobotControllerState::new(3, slot(3));
        st.mode = Mode::Repositioning(RepositionPhase::AlignParallel);
        let out = control_cycle(&o, &mut st, &ControllerConfig::default(), dims()).unwrap();
        assert_eq!(st.mode, Mode::Active);
        assert_eq!(out.command, ControlCommand::STOP);
    }

    #[test]
    fn teleport_mode_only_raises_flag() {
        let mut o = obs_at_slot(0, Pose2D::default(), Vec2::new(1.0, 0.0));
        o.self_pose.y += 0.2;
        let mut st = RobotControllerState::new(0, slot(0));
        st.steps_since_check = 24;
        let cfg = ControllerConfig {
            reposition_mode: RepositionMode::Teleport,
            ..ControllerConfig::default()
        };
        let out = control_cycle(&o, &mut st, &cfg, dims()).unwrap();
        assert_eq!(out.command, ControlCommand::STOP.flagged(true));
        assert!(st.stop_flag());
    }
}
