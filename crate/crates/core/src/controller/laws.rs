//! Role velocity laws. Every law returns a `(v, ω)` unicycle command.

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2D, Twist2D, Vec2};

/// Sign convention of the support law's rotational lever term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportSign {
    /// `v = −(‖v_b‖ + ω_b r)`, matching the prevent law.
    #[default]
    Consistent,
    /// `v = −‖v_b‖ + ω_b r`, as printed.
    PaperLiteral,
    /// Drive at the heading component of the velocity the robot's own
    /// position would have if rigidly attached to the box.
    Tracking,
}

/// Angular term of the prevent and support laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinSign {
    /// `ω = +ω_b`: turn with the box, keeping the heading normal to the edge.
    #[default]
    CoRotate,
    /// `ω = −ω_b`, as printed.
    Counter,
}

impl SpinSign {
    pub fn apply(self, omega_b: f64) -> f64 {
        match self {
            SpinSign::CoRotate => omega_b,
            SpinSign::Counter => -omega_b,
        }
    }
}

/// Proportional push: `v = min(max(e / k_p, v_min), v_max_hw)`, `ω = 0`.
pub fn push_velocity(error: f64, k_p: f64, v_min: f64, v_max_hw: f64) -> (f64, f64) {
    ((error / k_p).max(v_min).min(v_max_hw), 0.0)
}

/// Prevent: back off at the contact-point speed, capped at the allowed box
/// speed: `v = −min(‖v_b‖ + ω_b r, v_max_box)`, `ω = ∓ω_b` per `spin`.
pub fn prevent_velocity(box_twist: &Twist2D, r: f64, v_max_box: f64, spin: SpinSign) -> (f64, f64) {
    let v = -(box_twist.speed() + box_twist.omega * r).min(v_max_box);
    (v, spin.apply(box_twist.omega))
}

/// Support: trace the box. Magnitudes are clamped to the hardware limits.
pub fn support_velocity(
    box_twist: &Twist2D,
    r: f64,
    sign: SupportSign,
    spin: SpinSign,
    v_max_hw: f64,
    omega_max_hw: f64,
) -> (f64, f64) {
    let speed = box_twist.speed();
    let v = match sign {
        SupportSign::Consistent => -(speed + box_twist.omega * r),
        SupportSign::PaperLiteral => -speed + box_twist.omega * r,
        SupportSign::Tracking => panic!("tracking support needs poses; use support_tracking_velocity"),
    };
    (
        v.clamp(-v_max_hw, v_max_hw),
        spin.apply(box_twist.omega).clamp(-omega_max_hw, omega_max_hw),
    )
}

/// Tracking support: `v = ĥ·(v_b + ω_b ẑ × (p − c))`, `ω = ω_b`, clamped.
pub fn support_tracking_velocity(
    box_twist: &Twist2D,
    box_center: Vec2,
    robot: &Pose2D,
    v_max_hw: f64,
    omega_max_hw: f64,
) -> (f64, f64) {
    let rel = robot.position() - box_center;
    let carried = box_twist.linear() + Vec2::new(-rel.y, rel.x) * box_twist.omega;
    (
        carried.dot(&robot.heading()).clamp(-v_max_hw, v_max_hw),
        box_twist.omega.clamp(-omega_max_hw, omega_max_hw),
    )
}
