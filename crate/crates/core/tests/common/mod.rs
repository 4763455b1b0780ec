//! Independent re-derivations shared by the invariant and acceptance suites.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use r2p2_core::controller::{
    assign_role, prevent_velocity, push_velocity, support_velocity, BoxPrimitive, Role, SpinSign, SupportSign,
};
use r2p2_core::formation::BoxDims;
use r2p2_core::geometry::{from_box_frame, to_box_frame};
use r2p2_core::vlf::vlf_desired_position;
use r2p2_core::{Pose2D, Twist2D, Vec2};
use std::f64::consts::PI;

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Points whose box-frame round trip misses by more than 1e-9 m.
pub fn round_trip_failures(n: usize) -> usize {
    let mut r = rng();
    (0..n)
        .filter(|_| {
            let pose = Pose2D::new(r.gen_range(-50.0..50.0), r.gen_range(-50.0..50.0), r.gen_range(-10.0..10.0));
            let p = Vec2::new(r.gen_range(-50.0..50.0), r.gen_range(-50.0..50.0));
            (from_box_frame(&pose, to_box_frame(&pose, p)) - p).norm() >= 1e-9
        })
        .count()
}

pub fn push_mismatches(n: usize) -> usize {
    let mut r = rng();
    (0..n)
        .filter(|_| {
            let e = r.gen_range(0.0..4.0);
            let kp = r.gen_range(0.05..5.0);
            let vmin = r.gen_range(0.0..0.3);
            let vmax = r.gen_range(0.05..0.5);
            let mut expect = e / kp;
            if expect < vmin {
                expect = vmin;
            }
            if expect > vmax {
                expect = vmax;
            }
            let (v, w) = push_velocity(e, kp, vmin, vmax);
            !(close(v, expect, 1e-12) && w == 0.0)
        })
        .count()
}

fn random_twist(r: &mut ChaCha8Rng) -> Twist2D {
    Twist2D::new(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5), r.gen_range(-1.0..1.0))
}

pub fn prevent_mismatches(n: usize) -> usize {
    let mut r = rng();
    (0..n)
        .filter(|_| {
            let t = random_twist(&mut r);
            let lever = r.gen_range(0.0..1.0);
            let cap = r.gen_range(0.01..0.4);
            let speed = (t.vx * t.vx + t.vy * t.vy).sqrt();
            let raw = speed + t.omega * lever;
            let expect_v = -(if raw < cap { raw } else { cap });
            let (v, w) = prevent_velocity(&t, lever, cap, SpinSign::Counter);
            let (v2, w2) = prevent_velocity(&t, lever, cap, SpinSign::CoRotate);
            !(close(v, expect_v, 1e-12) && close(w, -t.omega, 1e-12) && close(v2, expect_v, 1e-12) && close(w2, t.omega, 1e-12))
        })
        .count()
}

pub fn support_mismatches(n: usize) -> usize {
    let mut r = rng();
    (0..n)
        .filter(|_| {
            let t = random_twist(&mut r);
            let lever = r.gen_range(0.0..1.0);
            let vmax = r.gen_range(0.05..0.5);
            let wmax = r.gen_range(0.1..3.0);
            let speed = t.vx.hypot(t.vy);
            let sat = |x: f64, m: f64| if x > m { m } else if x < -m { -m } else { x };
            let (v, w) = support_velocity(&t, lever, SupportSign::Consistent, SpinSign::Counter, vmax, wmax);
            let (v2, _) = support_velocity(&t, lever, SupportSign::PaperLiteral, SpinSign::Counter, vmax, wmax);
            !(close(v, sat(-speed - t.omega * lever, vmax), 1e-12)
                && close(w, sat(-t.omega, wmax), 1e-12)
                && close(v2, sat(-speed + t.omega * lever, vmax), 1e-12))
        })
        .count()
}

/// Rotated targets off by more than 1e-12, or not at the original radius.
pub fn formation_rotation_mismatches(n: usize) -> usize {
    let mut r = rng();
    (0..n)
        .filter(|_| {
            let c = Vec2::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
            let p = Vec2::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
            let th: f64 = r.gen_range(-7.0..7.0);
            let (dx, dy) = (p.x - c.x, p.y - c.y);
            let ex = c.x + th.cos() * dx - th.sin() * dy;
            let ey = c.y + th.sin() * dx + th.cos() * dy;
            let got = vlf_desired_position(c, p, th);
            !(close(got.x, ex, 1e-12) && close(got.y, ey, 1e-12) && close((got - c).norm(), (p - c).norm(), 1e-12))
        })
        .count()
}

/// The role rule written out long-hand from the edge and sign predicates.
pub fn role_oracle(robot: &Pose2D, bx: &Pose2D, target: Vec2, prim: BoxPrimitive, dims: BoxDims, eps: f64) -> Role {
    let (dx, dy) = (robot.x - bx.x, robot.y - bx.y);
    // Width coordinate: component along the box's long axis.
    let w = -bx.theta.sin() * dx + bx.theta.cos() * dy;
    if w.abs() > dims.length / 2.0 + eps {
        return Role::Support;
    }
    let (fx, fy) = (robot.theta.cos(), robot.theta.sin());
    let score = match prim {
        BoxPrimitive::StraightMotion => {
            let (gx, gy) = (target.x - bx.x, target.y - bx.y);
            let n = (gx * gx + gy * gy).sqrt();
            if n == 0.0 {
                return Role::Support;
            }
            (fx * gx + fy * gy) / n
        }
        BoxPrimitive::TurnAnticlockwise => dx * fy - dy * fx,
        BoxPrimitive::TurnClockwise => -(dx * fy - dy * fx),
    };
    if score > 0.0 {
        Role::Push
    } else if score < 0.0 {
        Role::Prevent
    } else {
        Role::Support
    }
}

/// Random placements where the role rule and the oracle disagree, plus
/// the number of distinct roles the sample produced.
pub fn role_mismatches(n: usize) -> (usize, usize) {
    let mut r = rng();
    let dims = BoxDims::new(1.35, 0.35);
    let prims = [
        BoxPrimitive::StraightMotion,
        BoxPrimitive::TurnAnticlockwise,
        BoxPrimitive::TurnClockwise,
    ];
    let mut mismatches = 0;
    let mut seen = std::collections::HashSet::new();
    for i in 0..n {
        let bx = Pose2D::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-PI..PI));
        let robot = Pose2D::new(
            bx.x + r.gen_range(-1.2..1.2),
            bx.y + r.gen_range(-1.2..1.2),
            r.gen_range(-PI..PI),
        );
        let target = Vec2::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let prim = prims[i % 3];
        let got = assign_role(&robot, &bx, target, prim, dims, 0.02);
        seen.insert(format!("{got:?}"));
        if got != role_oracle(&robot, &bx, target, prim, dims, 0.02) {
            mismatches += 1;
        }
    }
    (mismatches, seen.len())
}
