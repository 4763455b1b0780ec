//! Penalty contact between robot disks and the box rectangle.

use serde::{Deserialize, Serialize};

use super::bodies::{BoxBody, RobotBody};
use crate::error::SimError;
use crate::geometry::{cross, from_box_frame, rotation, to_box_frame, BoxFrameCoord, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Normal spring stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping on closing speed, N·s/m.
    pub damping: f64,
    /// Robot–box Coulomb coefficient.
    pub mu_robot_box: f64,
    /// Viscous slope of the regularized tangential friction, N·s/m.
    pub tangential_damping: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            stiffness: 5000.0,
            damping: 50.0,
            mu_robot_box: 0.3,
            tangential_damping: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactReport {
    pub robot_id: usize,
    pub penetration: f64,
    /// Unit normal pointing into the box.
    pub normal: Vec2,
    /// World-frame contact point on the box boundary.
    pub point: Vec2,
    pub normal_force: f64,
    /// Signed tangential force on the box along `tangent()`.
    pub tangential_force: f64,
    /// Whether the tangential force is in its viscous (unsaturated) regime.
    pub tangential_viscous: bool,
}

impl ContactReport {
    /// Tangent direction, normal rotated 90° anticlockwise.
    pub fn tangent(&self) -> Vec2 {
        Vec2::new(-self.normal.y, self.normal.x)
    }

    /// Total force exerted on the box.
    pub fn force(&self) -> Vec2 {
        self.normal * self.normal_force + self.tangent() * self.tangential_force
    }
}

/// Closest point of the box rectangle to a world point, in the box frame.
pub fn closest_point_on_box(body: &BoxBody, point: Vec2) -> BoxFrameCoord {
    let p = to_box_frame(&body.pose, point);
    let he = 0.5 * body.width;
    let hw = 0.5 * body.length;
    BoxFrameCoord::new(p.ell.clamp(-he, he), p.w.clamp(-hw, hw))
}

/// Closest point on the box boundary, even when `point` lies inside.
pub fn closest_boundary_point(body: &BoxBody, point: Vec2) -> BoxFrameCoord {
    let p = to_box_frame(&body.pose, point);
    let he = 0.5 * body.width;
    let hw = 0.5 * body.length;
    if p.ell.abs() <= he && p.w.abs() <= hw {
        if he - p.ell.abs() < hw - p.w.abs() {
            BoxFrameCoord::new(he.copysign(p.ell), p.w)
        } else {
            BoxFrameCoord::new(p.ell, hw.copysign(p.w))
        }
    } else {
        BoxFrameCoord::new(p.ell.clamp(-he, he), p.w.clamp(-hw, hw))
    }
}

/// Evaluates every robot–box penalty contact, sorted by robot id.
pub fn contact_forces(
    body: &BoxBody,
    robots: &[RobotBody],
    params: &ContactParams,
) -> Result<Vec<ContactReport>, SimError> {
    let mut out = Vec::new();
    let rot = rotation(body.pose.theta);
    for (id, robot) in robots.iter().enumerate() {
        let center = robot.pose.position();
        let local = to_box_frame(&body.pose, center);
        let q_local = closest_point_on_box(body, center);
        let offset = rot * (local.as_vec() - q_local.as_vec());
        let dist = offset.norm();
        if dist == 0.0 {
            return Err(SimError::Interpenetration {
                robot_id: id,
                penetration: robot.radius
                    + (0.5 * body.width - local.ell.abs()).min(0.5 * body.length - local.w.abs()),
            });
        }
        if dist >= robot.radius {
            continue;
        }
        let penetration = robot.radius - dist;
        let normal = -offset / dist;
        let point = from_box_frame(&body.pose, q_local);
        let rel = robot.velocity() - body.point_velocity(point);
        let closing = rel.dot(&normal);
        let normal_force = (params.stiffness * penetration + params.damping * closing).max(0.0);

        let tangent = Vec2::new(-normal.y, normal.x);
        let slip = rel.dot(&tangent);
        let limit = params.mu_robot_box * normal_force;
        let viscous = params.tangential_damping * slip;
        let (tangential_force, tangential_viscous) = if viscous.abs() <= limit {
            (viscous, true)
        } else {
            (limit.copysign(slip), false)
        };
        out.push(ContactReport {
            robot_id: id,
            penetration,
            normal,
            point,
            normal_force,
            tangential_force,
            tangential_viscous,
        });
    }
    Ok(out)
}

/// Net force and z-moment about the box center from a contact set.
pub fn contact_wrench(body: &BoxBody, contacts: &[ContactReport]) -> (Vec2, f64) {
    let c = body.pose.position();
    contacts.iter().fold((Vec2::zeros(), 0.0), |(f, m), report| {
        let force = report.force();
        (f + force, m + cross(report.point - c, force))
    })
}

/// All robot pairs whose disks overlap by more than `tolerance`.
pub fn detect_robot_collisions(robots: &[RobotBody], tolerance: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..robots.len() {
        for j in (i + 1)..robots.len() {
            let reach = robots[i].radius + robots[j].radius - tolerance;
            let d = (robots[i].pose.position() - robots[j].pose.position()).norm();
            if d < reach {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use approx::assert_abs_diff_eq;

    fn paper_box() -> BoxBody {
        BoxBody::new(Pose2D::default(), 1.35, 0.35, 2.0)
    }

    fn robot_at(x: f64, y: f64, theta: f64) -> RobotBody {
        RobotBody::new(Pose2D::new(x, y, theta), 0.105, 0.22, 2.84)
    }

    #[test]
    fn separated_robot_has_no_contact() {
        let b = paper_box();
        let robots = [robot_at(-0.175 - 0.2, 0.0, 0.0)];
        assert!(contact_forces(&b, &robots, &ContactParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn one_millimetre_penetration_gives_linear_spring_force() {
        let b = paper_box();
        let robots = [robot_at(-0.175 - 0.105 + 0.001, 0.2, 0.0)];
        let c = contact_forces(&b, &robots, &ContactParams::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_abs_diff_eq!(c[0].penetration, 0.001, epsilon = 1e-12);
        assert_abs_diff_eq!(c[0].normal_force, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c[0].normal.x, 1.0, epsilon = 1e-12);
        assert_eq!(c[0].tangential_force, 0.0);
    }

    #[test]
    fn symmetric_push_cancels() {
        let b = paper_box();
        let pen = 0.002;
        let robots = [
            robot_at(-0.28 + pen, 0.3, 0.0),
            robot_at(0.28 - pen, -0.3, std::f64::consts::PI),
            robot_at(-0.28 + pen, -0.3, 0.0),
            robot_at(0.28 - pen, 0.3, std::f64::consts::PI),
        ];
        let c = contact_forces(&b, &robots, &ContactParams::default()).unwrap();
        assert_eq!(c.len(), 4);
        let (f, m) = contact_wrench(&b, &c);
        assert_abs_diff_eq!(f.norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn centre_inside_box_is_a_fault() {
        let b = paper_box();
        let robots = [robot_at(0.0, 0.0, 0.0)];
        assert!(matches!(
            contact_forces(&b, &robots, &ContactParams::default()),
            Err(SimError::Interpenetration { robot_id: 0, .. })
        ));
    }

    #[test]
    fn sliding_contact_respects_friction_cone() {
        let mut b = paper_box();
        b.twist.vy = 0.5;
        let robots = [robot_at(-0.28 + 0.003, 0.0, 0.0)];
        let c = contact_forces(&b, &robots, &ContactParams::default()).unwrap();
        assert!(!c[0].tangential_viscous);
        assert!(c[0].tangential_force.abs() <= 0.3 * c[0].normal_force + 1e-9);
        // The stationary robot drags the box back against its motion.
        assert!(c[0].force().y < 0.0);
    }

    #[test]
    fn collision_pairs() {
        let far = [robot_at(0.0, 0.0, 0.0), robot_at(1.0, 0.0, 0.0)];
        assert!(detect_robot_collisions(&far, 1e-6).is_empty());
        let near = [robot_at(0.0, 0.0, 0.0), robot_at(0.15, 0.0, 0.0)];
        assert_eq!(detect_robot_collisions(&near, 1e-6), vec![(0, 1)]);
        let three = [
            robot_at(0.0, 0.0, 0.0),
            robot_at(0.1, 0.0, 0.0),
            robot_at(0.05, 0.05, 0.0),
        ];
        assert_eq!(
            detect_robot_collisions(&three, 1e-6),
            vec![(0, 1), (0, 2), (1, 2)]
        );
    }
}
