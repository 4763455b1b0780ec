//! Fixed-timestep planar dynamics: one rigid box sliding on a (possibly
//! inclined) plane, pushed by kinematic differential-drive disks.
//!
//! Contact damping and the viscous part of contact friction are integrated
//! implicitly so very light boxes stay stable at a 1 ms step; springs, slope
//! gravity and ground friction are explicit (semi-implicit Euler overall).

mod bodies;
mod contact;
mod friction;

pub use bodies::{
    BoxBody, RobotBody, TerrainParams, DEFAULT_OMEGA_MAX, DEFAULT_ROBOT_RADIUS, DEFAULT_V_MAX,
    STANDARD_GRAVITY,
};
pub use contact::{
    closest_boundary_point, closest_point_on_box, contact_forces, contact_wrench,
    detect_robot_collisions, ContactParams, ContactReport,
};
pub use friction::{
    ground_friction_wrench, FrictionMode, GroundFriction, Wrench, STICK_SPEED, STICK_SPIN,
};

use nalgebra::{Matrix3, Vector3};

use crate::command::ControlCommand;
use crate::error::SimError;
use crate::geometry::{cross, Twist2D, Vec2};

/// Default physics step, s.
pub const DEFAULT_DT: f64 = 1e-3;
/// Overlap tolerance for robot–robot collision detection, m.
pub const COLLISION_TOLERANCE: f64 = 1e-6;

/// The single mutable simulation object.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub box_body: BoxBody,
    pub robots: Vec<RobotBody>,
    pub terrain: TerrainParams,
    pub contact: ContactParams,
    /// Contacts evaluated at the start of the last step.
    pub last_contacts: Vec<ContactReport>,
}

impl WorldState {
    pub fn new(
        box_body: BoxBody,
        robots: Vec<RobotBody>,
        terrain: TerrainParams,
        contact: ContactParams,
    ) -> Self {
        Self {
            time: 0.0,
            box_body,
            robots,
            terrain,
            contact,
            last_contacts: Vec::new(),
        }
    }

    /// Advances the world by `dt` under one command per robot.
    pub fn step(&mut self, commands: &[ControlCommand], dt: f64) -> Result<(), SimError> {
        if commands.len() != self.robots.len() {
            return Err(SimError::CommandCount {
                expected: self.robots.len(),
                got: commands.len(),
            });
        }
        if !(dt > 0.0) {
            return Err(SimError::BadTimestep(dt));
        }
        let snapshot = self.clone();
        for (robot, cmd) in self.robots.iter_mut().zip(commands) {
            robot.set_command(cmd.v, cmd.omega);
        }

        let contacts = contact_forces(&self.box_body, &self.robots, &self.contact)?;
        self.box_body.twist = integrate_box(&self.box_body, &self.robots, &contacts, &self.terrain, &self.contact, dt);
        let t = self.box_body.twist;
        self.box_body.pose = self.box_body.pose.advanced(t.vx * dt, t.vy * dt, t.omega * dt);
        for robot in &mut self.robots {
            *robot = robot_integrate(robot, dt);
        }
        self.time += dt;
        self.last_contacts = contacts;

        if !self.is_finite() {
            return Err(SimError::Diverged {
                time: snapshot.time,
                last_valid: Box::new(snapshot),
            });
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        let b = &self.box_body;
        let box_ok = [b.pose.x, b.pose.y, b.pose.theta, b.twist.vx, b.twist.vy, b.twist.omega]
            .iter()
            .all(|v| v.is_finite());
        box_ok
            && self
                .robots
                .iter()
                .all(|r| r.pose.x.is_finite() && r.pose.y.is_finite() && r.pose.theta.is_finite())
    }

    pub fn robot_collisions(&self) -> Vec<(usize, usize)> {
        detect_robot_collisions(&self.robots, COLLISION_TOLERANCE)
    }
}

/// Unicycle update with the pre-step heading.
pub fn robot_integrate(robot: &RobotBody, dt: f64) -> RobotBody {
    let mut next = robot.clone();
    let (s, c) = robot.pose.theta.sin_cos();
    next.pose = robot
        .pose
        .advanced(robot.v_cmd * c * dt, robot.v_cmd * s * dt, robot.omega_cmd * dt);
    next
}

/// Generalized row `[dx, dy, r × d]` mapping box twist to the velocity of a
/// body point along `d`.
fn jacobian_row(r: Vec2, d: Vec2) -> Vector3<f64> {
    Vector3::new(d.x, d.y, cross(r, d))
}

fn integrate_box(
    body: &BoxBody,
    robots: &[RobotBody],
    contacts: &[ContactReport],
    terrain: &TerrainParams,
    params: &ContactParams,
    dt: f64,
) -> Twist2D {
    let u = Vector3::new(body.twist.vx, body.twist.vy, body.twist.omega);
    let mass = Matrix3::from_diagonal(&Vector3::new(body.mass, body.mass, body.inertia));
    let center = body.pose.position();

    let gravity = terrain.slope_accel() * body.mass;
    let mut lhs = mass;
    let mut rhs = mass * u + Vector3::new(gravity.x, gravity.y, 0.0) * dt;
    for c in contacts {
        let r = c.point - center;
        let robot_vel = robots[c.robot_id].velocity();
        let jn = jacobian_row(r, c.normal);
        // Spring part of the normal force is explicit; damping implicit.
        // Contacts whose damped force would go negative stay explicit so the
        // unilateral clamp is respected.
        let spring = params.stiffness * c.penetration;
        let closing_robot = robot_vel.dot(&c.normal);
        if c.normal_force > 0.0 && spring + params.damping * (closing_robot - jn.dot(&u)) > 0.0 {
            lhs += jn * jn.transpose() * (params.damping * dt);
            rhs += jn * ((spring + params.damping * closing_robot) * dt);
        } else {
            rhs += jn * (c.normal_force * dt);
        }
        let t = c.tangent();
        let jt = jacobian_row(r, t);
        if c.tangential_viscous {
            lhs += jt * jt.transpose() * (params.tangential_damping * dt);
            rhs += jt * (params.tangential_damping * robot_vel.dot(&t) * dt);
        } else {
            rhs += jt * (c.tangential_force * dt);
        }
    }
    let u_pre = lhs
        .lu()
        .solve(&rhs)
        .unwrap_or_else(|| Vector3::repeat(f64::NAN));

    let applied_gen = mass * (u_pre - u) / dt;
    let applied = Wrench::new(applied_gen.x, applied_gen.y, applied_gen.z);
    let friction = ground_friction_wrench(body, terrain, &applied);

    let v_pre = Vec2::new(u_pre.x, u_pre.y);
    let v_new = match friction.linear {
        FrictionMode::Stick => Vec2::zeros(),
        FrictionMode::Slip => {
            let v = v_pre + friction.wrench.force * (dt / body.mass);
            if v.dot(&v_pre) <= 0.0 {
                Vec2::zeros()
            } else {
                v
            }
        }
    };
    let omega_new = match friction.angular {
        FrictionMode::Stick => 0.0,
        FrictionMode::Slip => {
            let w = u_pre.z + friction.wrench.torque * (dt / body.inertia);
            if w * u_pre.z <= 0.0 {
                0.0
            } else {
                w
            }
        }
    };
    Twist2D::new(v_new.x, v_new.y, omega_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn lone_box(terrain: TerrainParams) -> WorldState {
        WorldState::new(
            BoxBody::new(Pose2D::default(), 1.35, 0.35, 2.0),
            Vec::new(),
            terrain,
            ContactParams::default(),
        )
    }

    #[test]
    fn integrate_examples() {
        let mut r = RobotBody::new(Pose2D::default(), 0.105, 0.22, 2.84);
        r.set_command(0.22, 0.0);
        let n = robot_integrate(&r, 1.0);
        assert_abs_diff_eq!(n.pose.x, 0.22);
        assert_abs_diff_eq!(n.pose.y, 0.0);

        let mut r = RobotBody::new(Pose2D::new(0.0, 0.0, FRAC_PI_2), 0.105, 0.22, 4.0);
        r.set_command(0.1, 0.0);
        let n = robot_integrate(&r, 1.0);
        assert_abs_diff_eq!(n.pose.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n.pose.y, 0.1);

        let mut r = RobotBody::new(Pose2D::default(), 0.105, 0.22, 4.0);
        r.set_command(0.0, PI);
        let n = robot_integrate(&r, 0.5);
        assert_abs_diff_eq!(n.pose.theta, FRAC_PI_2);
        assert_eq!((n.pose.x, n.pose.y), (0.0, 0.0));
    }

    #[test]
    fn commands_are_clamped() {
        let mut r = RobotBody::new(Pose2D::default(), 0.105, 0.22, 2.84);
        r.set_command(1.0, -10.0);
        assert_eq!(r.v_cmd, 0.22);
        assert_eq!(r.omega_cmd, -2.84);
    }

    #[test]
    fn resting_box_on_flat_stays_put() {
        let mut w = lone_box(TerrainParams::flat(0.9, 0.1));
        for _ in 0..1000 {
            w.step(&[], DEFAULT_DT).unwrap();
        }
        assert_eq!(w.box_body.pose, Pose2D::default());
    }

    #[test]
    fn static_cone_holds_on_incline() {
        let t = TerrainParams::inclined(5f64.to_radians(), Vec2::new(1.0, 0.0), 0.9, 0.1);
        let mut w = lone_box(t);
        for _ in 0..1000 {
            w.step(&[], DEFAULT_DT).unwrap();
        }
        assert_eq!(w.box_body.pose, Pose2D::default());
    }

    #[test]
    fn slippery_incline_accelerates_downhill() {
        let alpha = 5f64.to_radians();
        let t = TerrainParams::inclined(alpha, Vec2::new(1.0, 0.0), 0.05, 0.05);
        let mut w = lone_box(t);
        for _ in 0..1000 {
            w.step(&[], DEFAULT_DT).unwrap();
        }
        let a = 9.81 * (alpha.sin() - 0.05 * alpha.cos());
        assert_abs_diff_eq!(w.box_body.twist.vx, a * 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.box_body.twist.vy, 0.0);
    }

    #[test]
    fn wrong_command_count_is_rejected() {
        let mut w = lone_box(TerrainParams::flat(0.9, 0.1));
        assert!(matches!(
            w.step(&[ControlCommand::STOP], DEFAULT_DT),
            Err(SimError::CommandCount { .. })
        ));
        assert!(matches!(w.step(&[], 0.0), Err(SimError::BadTimestep(_))));
    }

    #[test]
    fn divergence_reports_last_valid_state() {
        let mut w = lone_box(TerrainParams::flat(0.9, 0.1));
        w.box_body.twist.vx = f64::NAN;
        match w.step(&[], DEFAULT_DT) {
            Err(SimError::Diverged { last_valid, .. }) => assert_eq!(last_valid.time, 0.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
