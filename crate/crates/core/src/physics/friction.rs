//! Box–ground Coulomb friction with a stick/slip switch.
//!
//! Spin friction uses the uniform-pressure pad model `(2/3)·μ·N·r_eff` with
//! `r_eff` equal to half the box diagonal.

use super::bodies::{BoxBody, TerrainParams};
use crate::geometry::Vec2;

/// Linear speed below which the box may stick, m/s.
pub const STICK_SPEED: f64 = 1e-4;
/// Spin rate below which the box may stick; also the width of the smooth
/// sign used for kinetic spin friction, rad/s.
pub const STICK_SPIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrictionMode {
    Stick,
    Slip,
}

/// Planar force and z-moment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec2,
    pub torque: f64,
}

impl Wrench {
    pub fn new(fx: f64, fy: f64, torque: f64) -> Self {
        Self {
            force: Vec2::new(fx, fy),
            torque,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundFriction {
    pub wrench: Wrench,
    pub linear: FrictionMode,
    pub angular: FrictionMode,
}

/// Ground reaction on the box given the wrench applied by everything else
/// (robot contacts and slope gravity).
pub fn ground_friction_wrench(
    body: &BoxBody,
    terrain: &TerrainParams,
    applied: &Wrench,
) -> GroundFriction {
    let normal = body.mass * terrain.normal_accel();
    let r_eff = body.half_diagonal();
    let velocity = body.twist.linear();
    let speed = velocity.norm();

    let (force, linear) = if speed < STICK_SPEED {
        let applied_mag = applied.force.norm();
        if applied_mag <= terrain.mu_static * normal {
            (-applied.force, FrictionMode::Stick)
        } else {
            (
                -applied.force * (terrain.mu_dynamic * normal / applied_mag),
                FrictionMode::Slip,
            )
        }
    } else {
        (
            -velocity * (terrain.mu_dynamic * normal / speed),
            FrictionMode::Slip,
        )
    };

    let spin = body.twist.omega;
    let spin_static = 2.0 / 3.0 * terrain.mu_static * normal * r_eff;
    let spin_kinetic = 2.0 / 3.0 * terrain.mu_dynamic * normal * r_eff;
    let (torque, angular) = if spin.abs() < STICK_SPIN && applied.torque.abs() <= spin_static {
        (-applied.torque, FrictionMode::Stick)
    } else if spin == 0.0 {
        // Breakaway from rest: oppose the applied moment.
        (-spin_kinetic * applied.torque.signum(), FrictionMode::Slip)
    } else {
        let s = (spin / STICK_SPIN).clamp(-1.0, 1.0);
        (-spin_kinetic * s, FrictionMode::Slip)
    };

    GroundFriction {
        wrench: Wrench { force, torque },
        linear,
        angular,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use approx::assert_abs_diff_eq;

    fn body(mass: f64) -> BoxBody {
        BoxBody::new(Pose2D::default(), 1.35, 0.35, mass)
    }

    #[test]
    fn resting_box_without_load_feels_nothing() {
        let f = ground_friction_wrench(&body(2.0), &TerrainParams::flat(0.9, 0.1), &Wrench::default());
        assert_eq!(f.wrench.force, Vec2::zeros());
        assert_eq!(f.wrench.torque, 0.0);
        assert_eq!(f.linear, FrictionMode::Stick);
    }

    #[test]
    fn sliding_box_gets_mu_m_g() {
        let mut b = body(2.0);
        b.twist.vx = 1.0;
        let f = ground_friction_wrench(&b, &TerrainParams::flat(0.9, 0.1), &Wrench::default());
        assert_abs_diff_eq!(f.wrench.force.x, -1.962, epsilon = 1e-12);
        assert_abs_diff_eq!(f.wrench.force.y, 0.0);
        assert_eq!(f.linear, FrictionMode::Slip);
    }

    #[test]
    fn terminal_slide_balances_gravity() {
        let alpha = 5f64.to_radians();
        let terrain = TerrainParams::inclined(alpha, Vec2::new(1.0, 0.0), 0.9, alpha.tan());
        let mut b = body(3.0);
        b.twist.vx = 0.4;
        let gravity = terrain.slope_accel() * b.mass;
        let f = ground_friction_wrench(&b, &terrain, &Wrench { force: gravity, torque: 0.0 });
        assert_abs_diff_eq!((gravity + f.wrench.force).x, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn static_cone_holds_on_gentle_slope() {
        let alpha = 5f64.to_radians();
        let terrain = TerrainParams::inclined(alpha, Vec2::new(0.0, -1.0), 0.9, 0.01);
        let b = body(6.0);
        let gravity = terrain.slope_accel() * b.mass;
        let f = ground_friction_wrench(&b, &terrain, &Wrench { force: gravity, torque: 0.0 });
        assert_eq!(f.linear, FrictionMode::Stick);
        assert_abs_diff_eq!((gravity + f.wrench.force).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn breakaway_opposes_applied_force() {
        let alpha = 5f64.to_radians();
        let terrain = TerrainParams::inclined(alpha, Vec2::new(1.0, 0.0), 0.05, 0.05);
        let b = body(1.0);
        let gravity = terrain.slope_accel() * b.mass;
        let f = ground_friction_wrench(&b, &terrain, &Wrench { force: gravity, torque: 0.0 });
        assert_eq!(f.linear, FrictionMode::Slip);
        assert_abs_diff_eq!(f.wrench.force.x, -0.05 * 9.81 * alpha.cos(), epsilon = 1e-12);
    }

    #[test]
    fn spinning_box_gets_opposing_torque() {
        let mut b = body(2.0);
        b.twist.omega = 0.5;
        let f = ground_friction_wrench(&b, &TerrainParams::flat(0.9, 0.1), &Wrench::default());
        let expected = 2.0 / 3.0 * 0.1 * 2.0 * 9.81 * b.half_diagonal();
        assert_abs_diff_eq!(f.wrench.torque, -expected, epsilon = 1e-12);
    }
}
