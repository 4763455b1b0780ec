//! TOML run configuration. One file fully determines one run.
//!
//! Values keep the units named in their keys; conversion to radians and
//! internal structs happens in the builders.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{
    ControllerConfig, R2p2Controller, RepositionMode, RepositionParams, RobotController, SpinSign, SupportSign,
    YawErrorMode,
};
use crate::error::ConfigError;
use crate::formation::{initial_placement, BoxDims, FormationSlot};
use crate::geometry::{Pose2D, Vec2};
use crate::mission::{run_mission, ControllerKind, MissionOptions, MissionSpec, RunRecord};
use crate::physics::{BoxBody, ContactParams, RobotBody, TerrainParams, WorldState};
use crate::vlf::{VlfConfig, VlfController};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainKind {
    Flat,
    Uphill,
    Downhill,
}

impl TerrainKind {
    pub const ALL: [TerrainKind; 3] = [TerrainKind::Flat, TerrainKind::Uphill, TerrainKind::Downhill];

    pub fn label(self) -> &'static str {
        match self {
            TerrainKind::Flat => "flat",
            TerrainKind::Uphill => "uphill",
            TerrainKind::Downhill => "downhill",
        }
    }
}

impl std::str::FromStr for TerrainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat" => Ok(TerrainKind::Flat),
            "uphill" => Ok(TerrainKind::Uphill),
            "downhill" => Ok(TerrainKind::Downhill),
            other => Err(format!("unknown terrain `{other}` (expected flat, uphill or downhill)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TerrainSection {
    pub kind: TerrainKind,
    pub incline_deg: f64,
    pub mu_static: f64,
    pub mu_dynamic: f64,
    pub gravity_mps2: f64,
    /// Downhill direction; defaults to along (downhill) or against (uphill)
    /// the start-to-goal direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub downhill_heading_deg: Option<f64>,
}

impl Default for TerrainSection {
    fn default() -> Self {
        Self {
            kind: TerrainKind::Flat,
            incline_deg: 5.0,
            mu_static: 0.9,
            mu_dynamic: 0.1,
            gravity_mps2: crate::physics::STANDARD_GRAVITY,
            downhill_heading_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoxSection {
    pub length_m: f64,
    pub width_m: f64,
    pub mass_kg: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub heading_deg: f64,
}

impl Default for BoxSection {
    fn default() -> Self {
        Self {
            length_m: 1.35,
            width_m: 0.35,
            mass_kg: 2.0,
            x_m: 0.0,
            y_m: 0.0,
            heading_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotsSection {
    pub count: usize,
    pub radius_m: f64,
    pub v_max_mps: f64,
    pub omega_max_radps: f64,
    /// Corner-slot offset from each box end along the long edge.
    pub contact_placement_m: f64,
    /// Uniform spawn perturbation drawn from the run seed.
    pub spawn_jitter_m: f64,
}

impl Default for RobotsSection {
    fn default() -> Self {
        Self {
            count: 6,
            radius_m: crate::physics::DEFAULT_ROBOT_RADIUS,
            v_max_mps: crate::physics::DEFAULT_V_MAX,
            omega_max_radps: crate::physics::DEFAULT_OMEGA_MAX,
            contact_placement_m: 0.175,
            spawn_jitter_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactSection {
    pub stiffness_npm: f64,
    pub damping_nspm: f64,
    pub mu_robot_box: f64,
    pub tangential_damping_nspm: f64,
}

impl Default for ContactSection {
    fn default() -> Self {
        let c = ContactParams::default();
        Self {
            stiffness_npm: c.stiffness,
            damping_nspm: c.damping,
            mu_robot_box: c.mu_robot_box,
            tangential_damping_nspm: c.tangential_damping,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub physics_dt_s: f64,
    pub control_dt_s: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            physics_dt_s: crate::physics::DEFAULT_DT,
            control_dt_s: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub k_rot: f64,
    pub k_trans: f64,
    pub v_min_mps: f64,
    pub v_max_box_mps: f64,
    pub eps_primitive_deg: f64,
    pub eps_width_m: f64,
    pub reposition_check_steps: u32,
    pub reposition_pos_tol_m: f64,
    pub reposition_heading_tol_deg: f64,
    pub yaw_error: YawErrorMode,
    pub support_sign: SupportSign,
    pub spin_sign: SpinSign,
    pub reposition_mode: RepositionMode,
    pub maneuver_heading_gain: f64,
    pub maneuver_drive_gain: f64,
    pub maneuver_min_speed_mps: f64,
    pub maneuver_heading_tol_deg: f64,
    pub maneuver_pos_tol_m: f64,
    pub maneuver_phase_timeout_s: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        let r = RepositionParams::default();
        Self {
            k_rot: c.k_rot,
            k_trans: c.k_trans,
            v_min_mps: c.v_min,
            v_max_box_mps: c.v_max_box,
            eps_primitive_deg: c.eps_primitive.to_degrees(),
            eps_width_m: c.eps_width,
            reposition_check_steps: c.reposition_check_interval,
            reposition_pos_tol_m: c.reposition_pos_tol,
            reposition_heading_tol_deg: 10.0,
            yaw_error: c.yaw_error,
            support_sign: c.support_sign,
            spin_sign: c.spin_sign,
            reposition_mode: c.reposition_mode,
            maneuver_heading_gain: r.heading_gain,
            maneuver_drive_gain: r.drive_gain,
            maneuver_min_speed_mps: r.min_speed,
            maneuver_heading_tol_deg: r.phase_heading_tol.to_degrees(),
            maneuver_pos_tol_m: r.phase_pos_tol,
            maneuver_phase_timeout_s: r.phase_timeout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VlfSection {
    pub v_const_mps: f64,
    pub nav_speed_mps: f64,
    pub heading_gain: f64,
    pub turn_in_place_deg: f64,
    pub arrive_tol_m: f64,
    pub heading_tol_deg: f64,
    pub plan_margin_s: f64,
}

impl Default for VlfSection {
    fn default() -> Self {
        let v = VlfConfig::default();
        Self {
            v_const_mps: v.v_const,
            nav_speed_mps: v.nav_speed,
            heading_gain: v.heading_gain,
            turn_in_place_deg: v.turn_in_place.to_degrees(),
            arrive_tol_m: v.arrive_tol,
            heading_tol_deg: v.heading_tol.to_degrees(),
            plan_margin_s: v.plan_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionSection {
    pub controller: ControllerKind,
    pub waypoints_m: Vec<[f64; 2]>,
    pub goal_tolerance_m: f64,
    pub waypoint_tolerance_m: f64,
    pub max_time_s: f64,
}

impl Default for MissionSection {
    fn default() -> Self {
        let bearing = 45f64.to_radians();
        Self {
            controller: ControllerKind::R2p2,
            waypoints_m: vec![[bearing.cos(), bearing.sin()]],
            goal_tolerance_m: 0.2,
            waypoint_tolerance_m: 0.15,
            max_time_s: 1500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    /// Time charged per teleported reposition.
    pub teleport_penalty_s: f64,
    pub taguchi_ceiling_s: f64,
    pub taguchi_goal_tolerance_m: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            teleport_penalty_s: 5.0,
            taguchi_ceiling_s: 600.0,
            taguchi_goal_tolerance_m: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: String,
    pub terrain: TerrainSection,
    #[serde(rename = "box")]
    pub box_: BoxSection,
    pub robots: RobotsSection,
    pub contact: ContactSection,
    pub sim: SimSection,
    pub controller: ControllerSection,
    pub vlf: VlfSection,
    pub mission: MissionSection,
    pub study: StudySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: "out".into(),
            terrain: TerrainSection::default(),
            box_: BoxSection::default(),
            robots: RobotsSection::default(),
            contact: ContactSection::default(),
            sim: SimSection::default(),
            controller: ControllerSection::default(),
            vlf: VlfSection::default(),
            mission: MissionSection::default(),
            study: StudySection::default(),
        }
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

fn positive(key: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive, got {value}")))
    }
}

fn non_negative(key: &'static str, value: f64) -> Result<(), ConfigError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be non-negative, got {value}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.terrain;
        non_negative("terrain.incline_deg", t.incline_deg)?;
        if t.incline_deg >= 90.0 {
            return Err(invalid("terrain.incline_deg", "must be below 90"));
        }
        non_negative("terrain.mu_static", t.mu_static)?;
        non_negative("terrain.mu_dynamic", t.mu_dynamic)?;
        if t.mu_dynamic > t.mu_static {
            return Err(invalid("terrain.mu_dynamic", "must not exceed terrain.mu_static"));
        }
        positive("terrain.gravity_mps2", t.gravity_mps2)?;
        let b = &self.box_;
        positive("box.length_m", b.length_m)?;
        positive("box.width_m", b.width_m)?;
        positive("box.mass_kg", b.mass_kg)?;
        if b.width_m > b.length_m {
            return Err(invalid("box.width_m", "must not exceed box.length_m"));
        }
        let r = &self.robots;
        if r.count != 4 && r.count != 6 {
            return Err(invalid("robots.count", format!("must be 4 or 6, got {}", r.count)));
        }
        positive("robots.radius_m", r.radius_m)?;
        positive("robots.v_max_mps", r.v_max_mps)?;
        positive("robots.omega_max_radps", r.omega_max_radps)?;
        non_negative("robots.contact_placement_m", r.contact_placement_m)?;
        if r.contact_placement_m >= 0.5 * b.length_m {
            return Err(invalid("robots.contact_placement_m", "must be below half the box length"));
        }
        non_negative("robots.spawn_jitter_m", r.spawn_jitter_m)?;
        let c = &self.contact;
        positive("contact.stiffness_npm", c.stiffness_npm)?;
        non_negative("contact.damping_nspm", c.damping_nspm)?;
        non_negative("contact.mu_robot_box", c.mu_robot_box)?;
        non_negative("contact.tangential_damping_nspm", c.tangential_damping_nspm)?;
        positive("sim.physics_dt_s", self.sim.physics_dt_s)?;
        positive("sim.control_dt_s", self.sim.control_dt_s)?;
        if self.sim.control_dt_s < self.sim.physics_dt_s {
            return Err(invalid("sim.control_dt_s", "must be at least sim.physics_dt_s"));
        }
        let k = &self.controller;
        positive("controller.k_rot", k.k_rot)?;
        positive("controller.k_trans", k.k_trans)?;
        positive("controller.v_min_mps", k.v_min_mps)?;
        if k.v_min_mps > r.v_max_mps {
            return Err(invalid("controller.v_min_mps", "must not exceed robots.v_max_mps"));
        }
        positive("controller.v_max_box_mps", k.v_max_box_mps)?;
        positive("controller.eps_primitive_deg", k.eps_primitive_deg)?;
        non_negative("controller.eps_width_m", k.eps_width_m)?;
        if k.reposition_check_steps == 0 {
            return Err(invalid("controller.reposition_check_steps", "must be at least 1"));
        }
        positive("controller.reposition_pos_tol_m", k.reposition_pos_tol_m)?;
        positive("controller.reposition_heading_tol_deg", k.reposition_heading_tol_deg)?;
        positive("controller.maneuver_heading_gain", k.maneuver_heading_gain)?;
        positive("controller.maneuver_drive_gain", k.maneuver_drive_gain)?;
        positive("controller.maneuver_min_speed_mps", k.maneuver_min_speed_mps)?;
        positive("controller.maneuver_heading_tol_deg", k.maneuver_heading_tol_deg)?;
        positive("controller.maneuver_pos_tol_m", k.maneuver_pos_tol_m)?;
        positive("controller.maneuver_phase_timeout_s", k.maneuver_phase_timeout_s)?;
        let v = &self.vlf;
        positive("vlf.v_const_mps", v.v_const_mps)?;
        positive("vlf.nav_speed_mps", v.nav_speed_mps)?;
        positive("vlf.heading_gain", v.heading_gain)?;
        positive("vlf.turn_in_place_deg", v.turn_in_place_deg)?;
        positive("vlf.arrive_tol_m", v.arrive_tol_m)?;
        positive("vlf.heading_tol_deg", v.heading_tol_deg)?;
        non_negative("vlf.plan_margin_s", v.plan_margin_s)?;
        let m = &self.mission;
        if m.waypoints_m.is_empty() {
            return Err(invalid("mission.waypoints_m", "needs at least one waypoint"));
        }
        if m.waypoints_m.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("mission.waypoints_m", "coordinates must be finite"));
        }
        positive("mission.goal_tolerance_m", m.goal_tolerance_m)?;
        positive("mission.waypoint_tolerance_m", m.waypoint_tolerance_m)?;
        non_negative("mission.max_time_s", m.max_time_s)?;
        non_negative("study.teleport_penalty_s", self.study.teleport_penalty_s)?;
        positive("study.taguchi_ceiling_s", self.study.taguchi_ceiling_s)?;
        positive("study.taguchi_goal_tolerance_m", self.study.taguchi_goal_tolerance_m)?;
        Ok(())
    }

    pub fn box_dims(&self) -> BoxDims {
        BoxDims::new(self.box_.length_m, self.box_.width_m)
    }

    pub fn box_pose(&self) -> Pose2D {
        Pose2D::new(self.box_.x_m, self.box_.y_m, self.box_.heading_deg.to_radians())
    }

    pub fn terrain_params(&self) -> TerrainParams {
        let t = &self.terrain;
        let mut params = match t.kind {
            TerrainKind::Flat => TerrainParams::flat(t.mu_static, t.mu_dynamic),
            TerrainKind::Uphill | TerrainKind::Downhill => {
                let dir = match t.downhill_heading_deg {
                    Some(deg) => crate::geometry::unit(deg.to_radians()),
                    None => {
                        let start = self.box_pose().position();
                        let goal = self.mission_spec().goal();
                        let d = goal - start;
                        let along = if d.norm() > 0.0 { d / d.norm() } else { Vec2::new(1.0, 0.0) };
                        if t.kind == TerrainKind::Uphill {
                            -along
                        } else {
                            along
                        }
                    }
                };
                TerrainParams::inclined(t.incline_deg.to_radians(), dir, t.mu_static, t.mu_dynamic)
            }
        };
        params.gravity = t.gravity_mps2;
        params
    }

    pub fn contact_params(&self) -> ContactParams {
        let c = &self.contact;
        ContactParams {
            stiffness: c.stiffness_npm,
            damping: c.damping_nspm,
            mu_robot_box: c.mu_robot_box,
            tangential_damping: c.tangential_damping_nspm,
        }
    }

    pub fn controller_config(&self) -> ControllerConfig {
        let k = &self.controller;
        ControllerConfig {
            k_rot: k.k_rot,
            k_trans: k.k_trans,
            v_min: k.v_min_mps,
            v_max_box: k.v_max_box_mps,
            v_max_hw: self.robots.v_max_mps,
            omega_max_hw: self.robots.omega_max_radps,
            eps_primitive: k.eps_primitive_deg.to_radians(),
            eps_width: k.eps_width_m,
            reposition_check_interval: k.reposition_check_steps,
            reposition_pos_tol: k.reposition_pos_tol_m,
            reposition_heading_tol: k.reposition_heading_tol_deg.to_radians(),
            yaw_error: k.yaw_error,
            support_sign: k.support_sign,
            spin_sign: k.spin_sign,
            reposition_mode: k.reposition_mode,
            reposition: RepositionParams {
                heading_gain: k.maneuver_heading_gain,
                drive_gain: k.maneuver_drive_gain,
                min_speed: k.maneuver_min_speed_mps,
                phase_heading_tol: k.maneuver_heading_tol_deg.to_radians(),
                phase_pos_tol: k.maneuver_pos_tol_m,
                phase_timeout: k.maneuver_phase_timeout_s,
            },
            control_dt: self.sim.control_dt_s,
        }
    }

    pub fn vlf_config(&self) -> VlfConfig {
        let v = &self.vlf;
        VlfConfig {
            v_const: v.v_const_mps,
            nav_speed: v.nav_speed_mps,
            heading_gain: v.heading_gain,
            turn_in_place: v.turn_in_place_deg.to_radians(),
            arrive_tol: v.arrive_tol_m,
            heading_tol: v.heading_tol_deg.to_radians(),
            plan_margin: v.plan_margin_s,
        }
    }

    pub fn mission_spec(&self) -> MissionSpec {
        let m = &self.mission;
        MissionSpec {
            waypoints: m.waypoints_m.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
            goal_tolerance: m.goal_tolerance_m,
            waypoint_tolerance: m.waypoint_tolerance_m,
            max_time: m.max_time_s,
            controller: m.controller,
        }
    }

    pub fn mission_options(&self) -> MissionOptions {
        let mut o = MissionOptions::new(self.box_dims(), self.robots.radius_m, &self.controller_config());
        o.physics_dt = self.sim.physics_dt_s;
        if self.controller.reposition_mode == RepositionMode::Teleport {
            o.teleport_penalty = Some(self.study.teleport_penalty_s);
        }
        o
    }

    pub fn formation(&self) -> Vec<FormationSlot> {
        initial_placement(
            self.box_dims(),
            self.robots.count,
            self.robots.contact_placement_m,
            self.robots.radius_m,
        )
        .expect("validated config yields a formation")
    }

    /// Box at rest with every robot on its slot, perturbed by the seeded jitter.
    pub fn build_world(&self) -> WorldState {
        let pose = self.box_pose();
        let body = BoxBody::new(pose, self.box_.length_m, self.box_.width_m, self.box_.mass_kg);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let jitter = self.robots.spawn_jitter_m;
        let robots = self
            .formation()
            .iter()
            .map(|slot| {
                let mut p = slot.world_pose(&pose);
                if jitter > 0.0 {
                    let inward = crate::geometry::unit(p.theta);
                    let along = Vec2::new(-inward.y, inward.x);
                    // Only slide along the edge and back off, never into the box.
                    let s = rng.gen_range(-jitter..=jitter);
                    let back = rng.gen_range(0.0..=jitter);
                    let q = p.position() + along * s - inward * back;
                    p = Pose2D::new(q.x, q.y, p.theta);
                }
                RobotBody::new(p, self.robots.radius_m, self.robots.v_max_mps, self.robots.omega_max_radps)
            })
            .collect();
        WorldState::new(body, robots, self.terrain_params(), self.contact_params())
    }

    pub fn build_controllers(&self) -> Vec<Box<dyn RobotController>> {
        let slots = self.formation();
        let base = self.controller_config();
        slots
            .iter()
            .enumerate()
            .map(|(i, slot)| -> Box<dyn RobotController> {
                match self.mission.controller {
                    ControllerKind::R2p2 => Box::new(R2p2Controller::new(i, *slot, base, self.box_dims())),
                    ControllerKind::Vlf => Box::new(VlfController::new(i, *slot, &slots, self.vlf_config(), base)),
                }
            })
            .collect()
    }

    /// Runs the mission this file describes; the record carries the config.
    pub fn run(&self) -> RunRecord {
        self.run_with(true)
    }

    pub fn run_with(&self, record_samples: bool) -> RunRecord {
        let mut options = self.mission_options();
        options.record_samples = record_samples;
        let mut record = run_mission(
            self.build_world(),
            &self.mission_spec(),
            self.build_controllers(),
            &options,
            self.seed,
        );
        record.config = Some(self.clone());
        record
    }
}
