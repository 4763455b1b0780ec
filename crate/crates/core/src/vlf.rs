//! Virtual-leader-follower baseline. The box centroid leads; each follower
//! tracks its formation slot rotated about the centroid, open loop with
//! respect to how the box actually responds.

use serde::{Deserialize, Serialize};

use crate::command::ControlCommand;
use crate::controller::{
    check_reposition, maneuver_step, select_primitive, BoxPrimitive, ControllerConfig, CycleOutput,
    ManeuverLimits, Observation, RepositionPhase, RobotController,
};
use crate::error::ControlError;
use crate::formation::FormationSlot;
use crate::geometry::{angle_diff, bearing_to, rotation, Vec2};

/// Desired follower position: `c + R(θ)(r − c)`.
pub fn vlf_desired_position(center: Vec2, robot: Vec2, theta: f64) -> Vec2 {
    center + rotation(theta) * (robot - center)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VlfConfig {
    /// Constant translation speed, m/s.
    pub v_const: f64,
    /// Follower cruise speed while re-forming, m/s.
    pub nav_speed: f64,
    pub heading_gain: f64,
    /// Heading error above which a follower turns in place, rad.
    pub turn_in_place: f64,
    /// Follower arrival tolerance, m.
    pub arrive_tol: f64,
    pub heading_tol: f64,
    /// Slack added to each planned rotation phase, s.
    pub plan_margin: f64,
}

impl Default for VlfConfig {
    fn default() -> Self {
        Self {
            v_const: 0.15,
            nav_speed: 0.15,
            heading_gain: 2.0,
            turn_in_place: 0.3,
            arrive_tol: 0.01,
            heading_tol: 0.03,
            plan_margin: 1.0,
        }
    }
}

impl VlfConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("v_const", self.v_const),
            ("nav_speed", self.nav_speed),
            ("heading_gain", self.heading_gain),
            ("arrive_tol", self.arrive_tol),
            ("heading_tol", self.heading_tol),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VlfPhase {
    RotateFormation,
    Translate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NavStage {
    Face,
    Drive,
    Orient,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RotationPlan {
    target: Vec2,
    final_heading: f64,
    stage: NavStage,
    steps_left: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlfState {
    pub robot_id: usize,
    pub slot: FormationSlot,
    /// Radius of every slot about the box centre, shared by the team.
    pub formation_radii: Vec<f64>,
    pub phase: VlfPhase,
    pub steps_since_check: u32,
    plan: Option<RotationPlan>,
    reposition: Option<RepositionPhase>,
    phase_steps: u32,
}

#[derive(Debug, Clone)]
pub struct VlfController {
    pub config: VlfConfig,
    /// Shared check cadence, tolerances, limits and reposition parameters.
    pub base: ControllerConfig,
    pub state: VlfState,
}

impl VlfController {
    pub fn new(
        robot_id: usize,
        slot: FormationSlot,
        formation: &[FormationSlot],
        config: VlfConfig,
        base: ControllerConfig,
    ) -> Self {
        Self {
            config,
            base,
            state: VlfState {
                robot_id,
                slot,
                formation_radii: formation.iter().map(|s| s.coord.norm()).collect(),
                phase: VlfPhase::RotateFormation,
                steps_since_check: 0,
                plan: None,
                reposition: None,
                phase_steps: 0,
            },
        }
    }

    /// Control steps every robot allots to a formation rotation of `angle`.
    fn plan_steps(&self, angle: f64) -> u32 {
        let chord = self
            .state
            .formation_radii
            .iter()
            .map(|r| 2.0 * r * (0.5 * angle.abs()).sin())
            .fold(0.0, f64::max);
        // Half-turn under a saturated P-law: slew at the rate cap, then decay.
        let k = self.config.heading_gain;
        let knee = self.base.omega_max_hw / k;
        let turn = (std::f64::consts::PI - knee).max(0.0) / self.base.omega_max_hw
            + (knee.min(std::f64::consts::PI) / self.config.heading_tol).ln().max(0.0) / k;
        let settle = (self.config.nav_speed / k / self.config.arrive_tol).ln().max(0.0) / k;
        let secs = chord / self.config.nav_speed + settle + 2.0 * turn + self.config.plan_margin;
        (secs / self.base.control_dt).ceil() as u32
    }

    fn turn(&self, obs: &Observation, heading: f64) -> (f64, f64) {
        let err = angle_diff(heading, obs.self_pose.theta);
        let w = self.base.omega_max_hw;
        (err, (self.config.heading_gain * err).clamp(-w, w))
    }

    fn navigate(&self, obs: &Observation, plan: &mut RotationPlan) -> ControlCommand {
        let here = obs.self_pose.position();
        loop {
            match plan.stage {
                NavStage::Face => {
                    if (plan.target - here).norm() < self.config.arrive_tol {
                        plan.stage = NavStage::Orient;
                        continue;
                    }
                    let bearing = bearing_to(here, plan.target).unwrap_or(obs.self_pose.theta);
                    let (err, omega) = self.turn(obs, bearing);
                    if err.abs() < self.config.heading_tol {
                        plan.stage = NavStage::Drive;
                        continue;
                    }
                    return ControlCommand::new(0.0, omega);
                }
                NavStage::Drive => {
                    let dist = (plan.target - here).norm();
                    if dist < self.config.arrive_tol {
                        plan.stage = NavStage::Orient;
                        continue;
                    }
                    let bearing = bearing_to(here, plan.target).unwrap_or(obs.self_pose.theta);
                    let (err, omega) = self.turn(obs, bearing);
                    if err.abs() > std::f64::consts::FRAC_PI_2 {
                        // Overshot.
                        plan.stage = NavStage::Face;
                        continue;
                    }
                    let v = (self.config.heading_gain * dist).min(self.config.nav_speed) * err.cos();
                    return ControlCommand::new(v, omega);
                }
                NavStage::Orient => {
                    let (err, omega) = self.turn(obs, plan.final_heading);
                    if err.abs() < self.config.heading_tol {
                        plan.stage = NavStage::Hold;
                        continue;
                    }
                    return ControlCommand::new(0.0, omega);
                }
                NavStage::Hold => return ControlCommand::STOP,
            }
        }
    }

    fn start_reposition(&mut self, obs: &Observation) -> Result<CycleOutput, ControlError> {
        self.state.phase_steps = 0;
        self.state.reposition = Some(RepositionPhase::AlignParallel);
        self.reposition_cycle(RepositionPhase::AlignParallel, obs)
    }

    fn reposition_cycle(&mut self, phase: RepositionPhase, obs: &Observation) -> Result<CycleOutput, ControlError> {
        if self.base.reposition_mode == crate::controller::RepositionMode::Teleport {
            return Ok(flag_output(ControlCommand::STOP));
        }
        let limits = ManeuverLimits {
            v_max: self.base.v_max_hw,
            omega_max: self.base.omega_max_hw,
        };
        let (command, next) = maneuver_step(phase, obs, &self.state.slot, &self.base.reposition, &limits);
        match next {
            None => {
                self.complete_reposition();
                Ok(hold_output(None))
            }
            Some(p) => {
                if p == phase {
                    self.state.phase_steps += 1;
                    if f64::from(self.state.phase_steps) * self.base.control_dt > self.base.reposition.phase_timeout {
                        return Err(ControlError::RepositionStuck {
                            robot_id: self.state.robot_id,
                            phase: phase.name(),
                            timeout_s: self.base.reposition.phase_timeout,
                        });
                    }
                } else {
                    self.state.phase_steps = 0;
                }
                self.state.reposition = Some(p);
                Ok(flag_output(command))
            }
        }
    }

    fn deviated(&self, obs: &Observation) -> bool {
        check_reposition(
            obs,
            &self.state.slot,
            self.base.reposition_pos_tol,
            self.base.reposition_heading_tol,
        )
    }

    fn translate(&mut self, obs: &Observation) -> Result<CycleOutput, ControlError> {
        self.state.steps_since_check += 1;
        if self.state.steps_since_check >= self.base.reposition_check_interval {
            self.state.steps_since_check = 0;
            if self.deviated(obs) {
                return self.start_reposition(obs);
            }
        }
        let heading = bearing_to(obs.box_pose.position(), obs.target).unwrap_or(obs.box_pose.theta);
        let (err, omega) = self.turn(obs, heading);
        let v = if err.abs() > self.config.turn_in_place {
            0.0
        } else {
            self.config.v_const
        };
        Ok(CycleOutput {
            command: ControlCommand::new(v, omega),
            primitive: Some(BoxPrimitive::StraightMotion),
            role: None,
        })
    }
}

fn flag_output(command: ControlCommand) -> CycleOutput {
    CycleOutput {
        command: command.flagged(true),
        primitive: None,
        role: None,
    }
}

fn hold_output(primitive: Option<BoxPrimitive>) -> CycleOutput {
    CycleOutput {
        command: ControlCommand::STOP,
        primitive,
        role: None,
    }
}

impl RobotController for VlfController {
    fn cycle(&mut self, obs: &Observation) -> Result<CycleOutput, ControlError> {
        if let Some(phase) = self.state.reposition {
            return self.reposition_cycle(phase, obs);
        }
        if obs.any_peer_stopped() {
            return Ok(hold_output(None));
        }
        let primitive = select_primitive(&obs.box_pose, obs.target, self.base.eps_primitive);
        match self.state.phase {
            VlfPhase::RotateFormation => {
                if let Some(mut plan) = self.state.plan {
                    let command = self.navigate(obs, &mut plan);
                    plan.steps_left = plan.steps_left.saturating_sub(1);
                    self.state.plan = (plan.steps_left > 0).then_some(plan);
                    return Ok(CycleOutput {
                        command,
                        primitive: Some(primitive),
                        role: None,
                    });
                }
                if primitive.is_rotation() {
                    let required = bearing_to(obs.box_pose.position(), obs.target).unwrap_or(obs.box_pose.theta);
                    let angle = angle_diff(required, obs.box_pose.theta);
                    let center = obs.box_pose.position();
                    let slot_pos = self.state.slot.world_position(&obs.box_pose);
                    let mut plan = RotationPlan {
                        target: vlf_desired_position(center, slot_pos, angle),
                        final_heading: obs.box_pose.theta + self.state.slot.heading + angle,
                        stage: NavStage::Face,
                        steps_left: self.plan_steps(angle),
                    };
                    let command = self.navigate(obs, &mut plan);
                    plan.steps_left -= 1;
                    self.state.plan = Some(plan);
                    return Ok(CycleOutput {
                        command,
                        primitive: Some(primitive),
                        role: None,
                    });
                }
                self.state.phase = VlfPhase::Translate;
                self.state.steps_since_check = 0;
                if self.deviated(obs) {
                    return self.start_reposition(obs);
                }
                self.translate(obs)
            }
            VlfPhase::Translate => {
                if primitive.is_rotation() {
                    self.state.phase = VlfPhase::RotateFormation;
                    self.state.plan = None;
                    return self.cycle(obs);
                }
                self.translate(obs)
            }
        }
    }

    fn slot(&self) -> &FormationSlot {
        &self.state.slot
    }

    fn is_repositioning(&self) -> bool {
        self.state.reposition.is_some()
    }

    fn complete_reposition(&mut self) {
        self.state.reposition = None;
        self.state.phase_steps = 0;
        self.state.steps_since_check = 0;
    }
}
