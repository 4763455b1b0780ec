//! Box-primitive selection and per-robot role self-assignment.
//!
//! Both are pure functions of quantities every robot observes, so all robots
//! reach the same primitive without exchanging messages.

use serde::{Deserialize, Serialize};

use crate::formation::BoxDims;
use crate::geometry::{angle_diff, bearing_to, cross, to_box_frame, Pose2D, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoxPrimitive {
    TurnAnticlockwise,
    TurnClockwise,
    StraightMotion,
}

impl BoxPrimitive {
    /// Desired torque sign, `None` for translation.
    pub fn torque_sign(self) -> Option<f64> {
        match self {
            BoxPrimitive::TurnAnticlockwise => Some(1.0),
            BoxPrimitive::TurnClockwise => Some(-1.0),
            BoxPrimitive::StraightMotion => None,
        }
    }

    pub fn is_rotation(self) -> bool {
        self != BoxPrimitive::StraightMotion
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Push,
    Prevent,
    Support,
}

/// How the yaw error fed to the push law is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YawErrorMode {
    /// `|wrap(θ_R − θ_c)|`.
    #[default]
    Shortest,
    /// `||θ_c| − |θ_R||`, as printed; discontinuous across zero heading.
    PaperLiteral,
}

pub fn yaw_error(box_heading: f64, required: f64, mode: YawErrorMode) -> f64 {
    match mode {
        YawErrorMode::Shortest => angle_diff(required, box_heading).abs(),
        YawErrorMode::PaperLiteral => (box_heading.abs() - required.abs()).abs(),
    }
}

/// Rotate toward the target bearing until it is within `eps` of the box
/// heading, then translate. A target at the box centre needs no rotation.
pub fn select_primitive(box_pose: &Pose2D, target: Vec2, eps: f64) -> BoxPrimitive {
    let Ok(required) = bearing_to(box_pose.position(), target) else {
        return BoxPrimitive::StraightMotion;
    };
    let diff = angle_diff(required, box_pose.theta);
    if diff > eps {
        BoxPrimitive::TurnAnticlockwise
    } else if diff < -eps {
        BoxPrimitive::TurnClockwise
    } else {
        BoxPrimitive::StraightMotion
    }
}

/// Role rule for one robot given its own pose.
///
/// Robots beyond the long edges' reach (`|w| > L/2 + ε`) support. Otherwise
/// translation splits on `s = f̂·d̂` and rotation on `τ = (r − c) × f̂`
/// against the desired torque sign; exact zeros support.
pub fn assign_role(
    robot: &Pose2D,
    box_pose: &Pose2D,
    target: Vec2,
    primitive: BoxPrimitive,
    dims: BoxDims,
    eps_width: f64,
) -> Role {
    let local = to_box_frame(box_pose, robot.position());
    if local.w.abs() > 0.5 * dims.length + eps_width {
        return Role::Support;
    }
    let heading = robot.heading();
    let score = match primitive.torque_sign() {
        None => {
            let d = target - box_pose.position();
            let n = d.norm();
            if n == 0.0 {
                return Role::Support;
            }
            heading.dot(&(d / n))
        }
        Some(sign) => cross(robot.position() - box_pose.position(), heading) * sign,
    };
    if score > 0.0 {
        Role::Push
    } else if score < 0.0 {
        Role::Prevent
    } else {
        Role::Support
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::initial_placement;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn primitive_examples() {
        let b = Pose2D::default();
        assert_eq!(select_primitive(&b, Vec2::new(1.0, 1.0), 0.2), BoxPrimitive::TurnAnticlockwise);
        assert_eq!(select_primitive(&b, Vec2::new(1.0, 0.0), 0.2), BoxPrimitive::StraightMotion);
        assert_eq!(select_primitive(&b, Vec2::new(1.0, -1.0), 0.2), BoxPrimitive::TurnClockwise);
    }

    #[test]
    fn primitive_compares_across_the_wrap() {
        let b = Pose2D::new(0.0, 0.0, 3.1);
        // Target bearing -3.1 rad is 0.083 rad anticlockwise of 3.1 rad.
        let t = Vec2::new((-3.1f64).cos(), (-3.1f64).sin());
        assert_eq!(select_primitive(&b, t, 0.2), BoxPrimitive::StraightMotion);
        assert_eq!(select_primitive(&b, t, 0.05), BoxPrimitive::TurnAnticlockwise);
    }

    fn nominal_roles(primitive: BoxPrimitive, target: Vec2) -> Vec<Role> {
        let dims = BoxDims::new(1.35, 0.35);
        let b = Pose2D::default();
        initial_placement(dims, 6, 0.175, 0.105)
            .unwrap()
            .iter()
            .map(|s| assign_role(&s.world_pose(&b), &b, target, primitive, dims, 0.02))
            .collect()
    }

    #[test]
    fn straight_motion_roles() {
        use Role::*;
        // Slots: front-left, front-right, right end, rear-right, rear-left, left end.
        let roles = nominal_roles(BoxPrimitive::StraightMotion, Vec2::new(1.0, 0.0));
        assert_eq!(roles, vec![Prevent, Prevent, Support, Push, Push, Support]);
    }

    #[test]
    fn anticlockwise_roles() {
        use Role::*;
        let roles = nominal_roles(BoxPrimitive::TurnAnticlockwise, Vec2::new(1.0, 1.0));
        assert_eq!(roles, vec![Push, Prevent, Support, Push, Prevent, Support]);
    }

    #[test]
    fn sideways_heading_supports() {
        let dims = BoxDims::new(1.35, 0.35);
        let b = Pose2D::default();
        let robot = Pose2D::new(-0.28, 0.2, FRAC_PI_2);
        let role = assign_role(&robot, &b, Vec2::new(1.0, 0.0), BoxPrimitive::StraightMotion, dims, 0.02);
        // cos(π/2) is 6e-17, not zero; use an exactly orthogonal goal instead.
        assert_eq!(role, Role::Push);
        let robot = Pose2D::new(-0.28, 0.2, 0.0);
        let role = assign_role(&robot, &b, Vec2::new(0.0, 1.0), BoxPrimitive::StraightMotion, dims, 0.02);
        assert_eq!(role, Role::Support);
    }

    #[test]
    fn yaw_error_modes() {
        assert!((yaw_error(0.1, -0.1, YawErrorMode::Shortest) - 0.2).abs() < 1e-15);
        assert_eq!(yaw_error(0.1, -0.1, YawErrorMode::PaperLiteral), 0.0);
        assert!((yaw_error(0.0, FRAC_PI_4, YawErrorMode::PaperLiteral) - FRAC_PI_4).abs() < 1e-15);
    }
}
