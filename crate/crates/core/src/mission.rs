//! Mission loop: waypoint sequencing, outcome classification and recording.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::command::ControlCommand;
use crate::config::RunConfig;
use crate::controller::{BoxPrimitive, ControllerConfig, Observation, RobotController, Role};
use crate::error::{ControlError, SimError};
use crate::formation::{check_caging, BoxDims};
use crate::geometry::{Pose2D, Twist2D, Vec2};
use crate::physics::WorldState;

/// Version of the record layout, written into every log and CSV.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    R2p2,
    Vlf,
}

impl ControllerKind {
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::R2p2 => "r2p2",
            ControllerKind::Vlf => "vlf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    /// Ordered targets; the last one is the goal.
    pub waypoints: Vec<Vec2>,
    pub goal_tolerance: f64,
    pub waypoint_tolerance: f64,
    /// Simulated-time ceiling, s.
    pub max_time: f64,
    pub controller: ControllerKind,
}

impl MissionSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.waypoints.is_empty() {
            return Err("at least one waypoint is required".into());
        }
        if !(self.goal_tolerance > 0.0) || !(self.waypoint_tolerance > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.max_time >= 0.0) {
            return Err(format!("max time must be non-negative, got {}", self.max_time));
        }
        Ok(())
    }

    pub fn goal(&self) -> Vec2 {
        *self.waypoints.last().expect("validated spec has a goal")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureBReason {
    BoxSlippedOut,
    InterRobotCollision,
    RepositionStuck,
    /// A robot was driven through the box footprint while the box was
    /// pinned against other robots.
    BoxJammed,
    /// Numerical divergence; the diagnostic carries the details.
    PhysicsFault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "reason")]
pub enum Outcome {
    Success,
    FailureA,
    FailureB(FailureBReason),
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }

    /// One- or two-letter label: S, F-A, F-B.
    pub fn code(self) -> &'static str {
        match self {
            Outcome::Success => "S",
            Outcome::FailureA => "F-A",
            Outcome::FailureB(_) => "F-B",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::FailureA => "failure_a:time_ceiling",
            Outcome::FailureB(FailureBReason::BoxSlippedOut) => "failure_b:box_slipped_out",
            Outcome::FailureB(FailureBReason::InterRobotCollision) => "failure_b:inter_robot_collision",
            Outcome::FailureB(FailureBReason::RepositionStuck) => "failure_b:reposition_stuck",
            Outcome::FailureB(FailureBReason::BoxJammed) => "failure_b:box_jammed",
            Outcome::FailureB(FailureBReason::PhysicsFault) => "failure_b:physics_fault",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSample {
    pub pose: Pose2D,
    pub role: Option<Role>,
    pub v: f64,
    pub omega: f64,
    pub flag: bool,
}

/// State at the start of one control step plus the commands issued in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub box_pose: Pose2D,
    pub box_twist: Twist2D,
    pub primitive: Option<BoxPrimitive>,
    pub waypoint: usize,
    pub caged: bool,
    pub robots: Vec<RobotSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub seed: u64,
    pub config: Option<RunConfig>,
    pub outcome: Outcome,
    /// Control steps × control period, s.
    pub mission_time: f64,
    pub control_steps: u64,
    pub samples: Vec<Sample>,
    pub diagnostic: Option<String>,
}

impl RunRecord {
    pub fn final_box_pose(&self) -> Option<Pose2D> {
        self.samples.last().map(|s| s.box_pose)
    }
}

/// Harness-side knobs that are not part of the mission itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionOptions {
    pub physics_dt: f64,
    pub control_dt: f64,
    pub box_dims: BoxDims,
    pub robot_radius: f64,
    /// Box speed that counts as a runaway, m/s.
    pub runaway_speed: f64,
    /// Consecutive out-of-formation control steps before slip-out.
    pub slip_steps: u32,
    /// Snap repositioning robots to their slot and charge this many seconds.
    pub teleport_penalty: Option<f64>,
    pub record_samples: bool,
}

impl MissionOptions {
    pub fn new(box_dims: BoxDims, robot_radius: f64, controller: &ControllerConfig) -> Self {
        Self {
            physics_dt: crate::physics::DEFAULT_DT,
            control_dt: controller.control_dt,
            box_dims,
            robot_radius,
            runaway_speed: 2.0 * controller.v_max_hw,
            slip_steps: 10,
            teleport_penalty: None,
            record_samples: true,
        }
    }
}

/// Tracks the out-of-formation streak for the slip-out predicate.
#[derive(Debug, Clone, Copy, Default)]
pub struct SlipMonitor {
    pub streak: u32,
}

impl SlipMonitor {
    /// Updates the streak and reports whether the box has left the formation.
    pub fn update(&mut self, world: &WorldState, options: &MissionOptions) -> bool {
        if world.box_body.twist.speed() > options.runaway_speed {
            return true;
        }
        if out_of_formation(world, options.robot_radius) {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= options.slip_steps
    }
}

/// Box centroid farther from the formation centroid than half-diagonal plus
/// two radii.
pub fn out_of_formation(world: &WorldState, robot_radius: f64) -> bool {
    let n = world.robots.len() as f64;
    if n == 0.0 {
        return false;
    }
    let centroid = world.robots.iter().map(|r| r.pose.position()).sum::<Vec2>() / n;
    let limit = world.box_body.half_diagonal() + 2.0 * robot_radius;
    (world.box_body.pose.position() - centroid).norm() > limit
}

/// Outcome at a step boundary, or `None` while the mission is ongoing.
/// Success is checked first, then the F-B conditions, then the ceiling.
pub fn classify_outcome(
    world: &WorldState,
    spec: &MissionSpec,
    elapsed: f64,
    slip: &mut SlipMonitor,
    options: &MissionOptions,
) -> Option<Outcome> {
    if (world.box_body.pose.position() - spec.goal()).norm() <= spec.goal_tolerance {
        return Some(Outcome::Success);
    }
    if !world.robot_collisions().is_empty() {
        return Some(Outcome::FailureB(FailureBReason::InterRobotCollision));
    }
    if slip.update(world, options) {
        return Some(Outcome::FailureB(FailureBReason::BoxSlippedOut));
    }
    if elapsed >= spec.max_time {
        return Some(Outcome::FailureA);
    }
    None
}

fn sample(
    world: &WorldState,
    t: f64,
    waypoint: usize,
    options: &MissionOptions,
    outputs: &[(ControlCommand, Option<Role>)],
    primitive: Option<BoxPrimitive>,
) -> Sample {
    let positions: Vec<Vec2> = world.robots.iter().map(|r| r.pose.position()).collect();
    let caged = check_caging(&positions, &world.box_body.pose, options.box_dims, options.robot_radius).caged;
    Sample {
        t,
        box_pose: world.box_body.pose,
        box_twist: world.box_body.twist,
        primitive,
        waypoint,
        caged,
        robots: world
            .robots
            .iter()
            .zip(outputs)
            .map(|(r, (cmd, role))| RobotSample {
                pose: r.pose,
                role: *role,
                v: cmd.v,
                omega: cmd.omega,
                flag: cmd.stop_flag,
            })
            .collect(),
    }
}

/// Runs one mission to an outcome.
///
/// Each control step: classify, advance the waypoint, give every robot its
/// snapshot (peer flags as published at the previous boundary), then step
/// the physics for one control period. Samples and mission time use the
/// control-step counter; teleport penalties add idle steps.
pub fn run_mission(
    mut world: WorldState,
    spec: &MissionSpec,
    mut controllers: Vec<Box<dyn RobotController>>,
    options: &MissionOptions,
    seed: u64,
) -> RunRecord {
    assert_eq!(controllers.len(), world.robots.len(), "one controller per robot");
    let n = world.robots.len();
    let substeps = (options.control_dt / options.physics_dt).round().max(1.0) as u64;
    let mut flags = vec![false; n];
    let mut waypoint = 0usize;
    let mut steps: u64 = 0;
    let mut slip = SlipMonitor::default();
    let mut samples = Vec::new();
    let mut diagnostic = None;
    let idle = vec![(ControlCommand::STOP, None); n];

    let outcome = loop {
        let t = steps as f64 * options.control_dt;
        if let Some(outcome) = classify_outcome(&world, spec, t, &mut slip, options) {
            if options.record_samples {
                samples.push(sample(&world, t, waypoint, options, &idle, None));
            }
            break outcome;
        }
        let box_pos = world.box_body.pose.position();
        if waypoint + 1 < spec.waypoints.len() && (box_pos - spec.waypoints[waypoint]).norm() <= spec.waypoint_tolerance {
            waypoint += 1;
        }

        let mut outputs = Vec::with_capacity(n);
        let mut primitive = None;
        let mut fault: Option<ControlError> = None;
        for (i, ctrl) in controllers.iter_mut().enumerate() {
            let obs = Observation {
                self_pose: world.robots[i].pose,
                box_pose: world.box_body.pose,
                box_twist: world.box_body.twist,
                target: spec.waypoints[waypoint],
                peer_stop_flags: (0..n).filter(|&j| j != i).map(|j| (j, flags[j])).collect::<BTreeMap<_, _>>(),
            };
            match ctrl.cycle(&obs) {
                Ok(out) => {
                    primitive = primitive.or(out.primitive);
                    outputs.push((out.command, out.role));
                }
                Err(e) => {
                    fault = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = fault {
            diagnostic = Some(e.to_string());
            if options.record_samples {
                samples.push(sample(&world, t, waypoint, options, &idle, None));
            }
            break Outcome::FailureB(FailureBReason::RepositionStuck);
        }

        if let Some(penalty) = options.teleport_penalty {
            let mut teleported = false;
            for (i, ctrl) in controllers.iter_mut().enumerate() {
                if ctrl.is_repositioning() {
                    world.robots[i].pose = ctrl.slot().world_pose(&world.box_body.pose);
                    ctrl.complete_reposition();
                    outputs[i].0 = ControlCommand::STOP;
                    teleported = true;
                }
            }
            if teleported {
                steps += (penalty / options.control_dt).round() as u64;
            }
        }

        if options.record_samples {
            samples.push(sample(&world, t, waypoint, options, &outputs, primitive));
        }
        let commands: Vec<ControlCommand> = outputs.iter().map(|(c, _)| *c).collect();
        flags = commands.iter().map(|c| c.stop_flag).collect();

        let mut sim_fault: Option<SimError> = None;
        for _ in 0..substeps {
            if let Err(e) = world.step(&commands, options.physics_dt) {
                sim_fault = Some(e);
                break;
            }
        }
        steps += 1;
        if let Some(e) = sim_fault {
            diagnostic = Some(e.to_string());
            let reason = match e {
                SimError::Interpenetration { .. } => FailureBReason::BoxJammed,
                _ => FailureBReason::PhysicsFault,
            };
            break Outcome::FailureB(reason);
        }
    };

    RunRecord {
        schema_version: SCHEMA_VERSION,
        seed,
        config: None,
        outcome,
        mission_time: steps as f64 * options.control_dt,
        control_steps: steps,
        samples,
        diagnostic,
    }
}
