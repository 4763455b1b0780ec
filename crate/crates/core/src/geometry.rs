//! Planar pose algebra and box-frame transforms.
//!
//! All angles are radians. Headings are kept in `(-π, π]`.
//!
//! The box frame has its `ell` axis along the box heading and its `w` axis
//! 90° anticlockwise from it. The box heading is the broadside travel
//! direction: it is normal to the two long edges, so the long edges sit at
//! `ell = ±width/2` and the short ends at `w = ±length/2`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// World-frame planar vector (meters, or m/s for velocities).
pub type Vec2 = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    /// Builds a pose, normalizing the heading.
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle_unchecked(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Unit vector along the heading.
    pub fn heading(&self) -> Vec2 {
        unit(self.theta)
    }

    /// Pose displaced by a world-frame offset and rotated by `dtheta`.
    pub fn advanced(&self, dx: f64, dy: f64, dtheta: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.theta + dtheta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist2D {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Twist2D {
    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn linear(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// Coordinates of a point in the box-aligned frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoxFrameCoord {
    /// Along the box heading.
    pub ell: f64,
    /// Along the long edges, anticlockwise from the heading.
    pub w: f64,
}

impl BoxFrameCoord {
    pub fn new(ell: f64, w: f64) -> Self {
        Self { ell, w }
    }

    pub fn as_vec(&self) -> Vec2 {
        Vec2::new(self.ell, self.w)
    }

    pub fn norm(&self) -> f64 {
        self.ell.hypot(self.w)
    }
}

/// Rotation matrix `R(θ)`.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

pub fn unit(theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c, s)
}

/// z-component of the planar cross product.
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Normalizes an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> Result<f64, GeometryError> {
    if !theta.is_finite() {
        return Err(GeometryError::NonFinite(theta));
    }
    Ok(wrap_angle_unchecked(theta))
}

pub(crate) fn wrap_angle_unchecked(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest signed rotation taking heading `from` onto heading `to`.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    wrap_angle_unchecked(to - from)
}

/// `R(θ_b)ᵀ (r − c)`: world point expressed in the box frame.
pub fn to_box_frame(box_pose: &Pose2D, point: Vec2) -> BoxFrameCoord {
    let p = rotation(box_pose.theta).transpose() * (point - box_pose.position());
    BoxFrameCoord::new(p.x, p.y)
}

/// Inverse of [`to_box_frame`].
pub fn from_box_frame(box_pose: &Pose2D, coord: BoxFrameCoord) -> Vec2 {
    box_pose.position() + rotation(box_pose.theta) * coord.as_vec()
}

/// `atan2(to.y − from.y, to.x − from.x)`.
pub fn bearing_to(from: Vec2, to: Vec2) -> Result<f64, GeometryError> {
    let d = to - from;
    if d.x == 0.0 && d.y == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    // atan2 returns -π for (-x, -0.0); fold it onto +π.
    Ok(wrap_angle_unchecked(d.y.atan2(d.x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI).unwrap(), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-3.5 * PI).unwrap(), 0.5 * PI, epsilon = 1e-12);
        assert_eq!(wrap_angle(-PI).unwrap(), PI);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn box_frame_examples() {
        let p = to_box_frame(&Pose2D::new(0.0, 0.0, 0.0), Vec2::new(0.5, 0.0));
        assert_abs_diff_eq!(p.ell, 0.5);
        assert_abs_diff_eq!(p.w, 0.0);

        let p = to_box_frame(&Pose2D::new(1.0, 1.0, FRAC_PI_2), Vec2::new(1.0, 2.0));
        assert_abs_diff_eq!(p.ell, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.w, 0.0, epsilon = 1e-12);

        let p = to_box_frame(&Pose2D::new(0.0, 0.0, FRAC_PI_4), Vec2::new(1.0, 0.0));
        let h = 2f64.sqrt() / 2.0;
        assert_abs_diff_eq!(p.ell, h, epsilon = 1e-12);
        assert_abs_diff_eq!(p.w, -h, epsilon = 1e-12);
    }

    #[test]
    fn bearing_examples() {
        let o = Vec2::zeros();
        assert_abs_diff_eq!(bearing_to(o, Vec2::new(1.0, 1.0)).unwrap(), FRAC_PI_4);
        assert_eq!(bearing_to(o, Vec2::new(-1.0, 0.0)).unwrap(), PI);
        assert_eq!(bearing_to(o, Vec2::new(-1.0, -0.0)).unwrap(), PI);
        assert_abs_diff_eq!(
            bearing_to(Vec2::new(2.0, 3.0), Vec2::new(2.0, 4.0)).unwrap(),
            FRAC_PI_2
        );
        assert!(matches!(
            bearing_to(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)),
            Err(GeometryError::CoincidentPoints)
        ));
    }

    #[test]
    fn pose_constructor_normalizes() {
        let p = Pose2D::new(0.0, 0.0, 5.0 * PI);
        assert_abs_diff_eq!(p.theta, PI, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn wrap_lands_in_half_open_interval(theta in -1e4f64..1e4) {
            let w = wrap_angle(theta).unwrap();
            prop_assert!(w > -PI && w <= PI);
            let k = ((theta - w) / TAU).round();
            prop_assert!((theta - w - k * TAU).abs() < 1e-9);
        }

        #[test]
        fn rotation_is_orthonormal(theta in -20.0f64..20.0) {
            let r = rotation(theta);
            let e = r.transpose() * r - Matrix2::identity();
            prop_assert!(e.abs().max() < 1e-12);
        }

        #[test]
        fn bearing_reverses_by_pi(ax in -5.0f64..5.0, ay in -5.0f64..5.0, bx in -5.0f64..5.0, by in -5.0f64..5.0) {
            let a = Vec2::new(ax, ay);
            let b = Vec2::new(bx, by);
            prop_assume!((a - b).norm() > 1e-9);
            let fwd = bearing_to(a, b).unwrap();
            let back = wrap_angle(bearing_to(b, a).unwrap() + PI).unwrap();
            prop_assert!(angle_diff(fwd, back).abs() < 1e-12);
        }

        #[test]
        fn angle_diff_is_shortest(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let d = angle_diff(a, b);
            prop_assert!(d > -PI && d <= PI);
            prop_assert!(angle_diff(b + d, a).abs() < 1e-9);
        }
    }
}
