//! Initial robot slots around the box, the caging predicate, and the
//! force-moment diagnostic used to justify corner-offset placement.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::FormationError;
use crate::geometry::{cross, from_box_frame, to_box_frame, BoxFrameCoord, Pose2D, Vec2};

/// Box side a slot is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeId {
    /// Long edge at `ell = +width/2`.
    Front,
    /// Long edge at `ell = -width/2`.
    Rear,
    /// Short end at `w = +length/2`.
    LeftEnd,
    /// Short end at `w = -length/2`.
    RightEnd,
}

impl EdgeId {
    pub fn is_long(self) -> bool {
        matches!(self, EdgeId::Front | EdgeId::Rear)
    }

    /// Edges sharing a corner.
    pub fn is_adjacent(self, other: EdgeId) -> bool {
        self.is_long() != other.is_long()
    }

    /// Inward normal heading in the box frame.
    pub fn inward_heading(self) -> f64 {
        match self {
            EdgeId::Front => PI,
            EdgeId::Rear => 0.0,
            EdgeId::LeftEnd => -FRAC_PI_2,
            EdgeId::RightEnd => FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormationSlot {
    pub id: usize,
    /// Robot centre in the box frame.
    pub coord: BoxFrameCoord,
    /// Heading relative to the box heading; always the edge's inward normal.
    pub heading: f64,
    pub edge: EdgeId,
}

impl FormationSlot {
    pub fn world_position(&self, box_pose: &Pose2D) -> Vec2 {
        from_box_frame(box_pose, self.coord)
    }

    pub fn world_pose(&self, box_pose: &Pose2D) -> Pose2D {
        let p = self.world_position(box_pose);
        Pose2D::new(p.x, p.y, box_pose.theta + self.heading)
    }
}

/// Box dimensions as used by the formation and role logic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub length: f64,
    pub width: f64,
}

impl BoxDims {
    pub fn new(length: f64, width: f64) -> Self {
        Self { length, width }
    }
}

/// Slots touching the box for a team of 4 or 6.
///
/// Long-edge slots sit `delta` in from each corner; with six robots the two
/// extra slots take the centres of the short ends. Ordering (0-based):
/// front-left, front-right, [right end], rear-right, rear-left, [left end].
pub fn initial_placement(
    dims: BoxDims,
    n_robots: usize,
    delta: f64,
    radius: f64,
) -> Result<Vec<FormationSlot>, FormationError> {
    if n_robots != 4 && n_robots != 6 {
        return Err(FormationError::TeamSize(n_robots));
    }
    let half_length = 0.5 * dims.length;
    if !(delta >= 0.0 && delta < half_length) {
        return Err(FormationError::InvalidPlacement { delta, half_length });
    }
    let standoff = 0.5 * dims.width + radius;
    let along = half_length - delta;
    let long = |edge: EdgeId, w: f64| {
        let ell = if edge == EdgeId::Front { standoff } else { -standoff };
        (BoxFrameCoord::new(ell, w), edge)
    };
    let end = |edge: EdgeId| {
        let w = if edge == EdgeId::LeftEnd {
            half_length + radius
        } else {
            -(half_length + radius)
        };
        (BoxFrameCoord::new(0.0, w), edge)
    };
    let layout = if n_robots == 6 {
        vec![
            long(EdgeId::Front, along),
            long(EdgeId::Front, -along),
            end(EdgeId::RightEnd),
            long(EdgeId::Rear, -along),
            long(EdgeId::Rear, along),
            end(EdgeId::LeftEnd),
        ]
    } else {
        vec![
            long(EdgeId::Front, along),
            long(EdgeId::Front, -along),
            long(EdgeId::Rear, -along),
            long(EdgeId::Rear, along),
        ]
    };
    Ok(layout
        .into_iter()
        .enumerate()
        .map(|(id, (coord, edge))| FormationSlot {
            id,
            coord,
            heading: edge.inward_heading(),
            edge,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CagingCheck {
    pub caged: bool,
    /// First consecutive pair (by perimeter order) breaking the predicate.
    pub violating_pair: Option<(usize, usize)>,
}

/// Edge a box-frame point is closest to, with its perimeter parameter
/// measured anticlockwise from the front-right corner.
fn perimeter_position(dims: BoxDims, p: BoxFrameCoord) -> (EdgeId, f64) {
    let he = 0.5 * dims.width;
    let hw = 0.5 * dims.length;
    let excess_ell = p.ell.abs() - he;
    let excess_w = p.w.abs() - hw;
    // Points inside or outside: the side with the larger excess wins.
    let edge = if excess_ell >= excess_w {
        if p.ell >= 0.0 {
            EdgeId::Front
        } else {
            EdgeId::Rear
        }
    } else if p.w >= 0.0 {
        EdgeId::LeftEnd
    } else {
        EdgeId::RightEnd
    };
    let w = p.w.clamp(-hw, hw);
    let ell = p.ell.clamp(-he, he);
    let s = match edge {
        EdgeId::Front => w + hw,
        EdgeId::LeftEnd => dims.length + (he - ell),
        EdgeId::Rear => dims.length + dims.width + (hw - w),
        EdgeId::RightEnd => 2.0 * dims.length + dims.width + (ell + he),
    };
    (edge, s)
}

/// Caging predicate on live robot positions.
///
/// Robots are ordered around the perimeter. Each consecutive pair on the same
/// edge must be closer than that edge's length; each consecutive pair on
/// adjacent edges must be closer than `min(length, width) + 2·radius`.
/// Pairs on opposite edges are unconstrained.
pub fn check_caging(
    positions: &[Vec2],
    box_pose: &Pose2D,
    dims: BoxDims,
    radius: f64,
) -> CagingCheck {
    let mut order: Vec<(usize, EdgeId, f64)> = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (edge, s) = perimeter_position(dims, to_box_frame(box_pose, *p));
            (i, edge, s)
        })
        .collect();
    order.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));

    let n = order.len();
    if n < 2 {
        return CagingCheck {
            caged: true,
            violating_pair: None,
        };
    }
    let adjacent_limit = dims.length.min(dims.width) + 2.0 * radius;
    let pairs = if n == 2 { 1 } else { n };
    for k in 0..pairs {
        let (i, ei, _) = order[k];
        let (j, ej, _) = order[(k + 1) % n];
        let sep = (positions[i] - positions[j]).norm();
        let limit = if ei == ej {
            if ei.is_long() {
                dims.length
            } else {
                dims.width
            }
        } else if ei.is_adjacent(ej) {
            adjacent_limit
        } else {
            continue;
        };
        if sep >= limit {
            return CagingCheck {
                caged: false,
                violating_pair: Some((i.min(j), i.max(j))),
            };
        }
    }
    CagingCheck {
        caged: true,
        violating_pair: None,
    }
}

/// `Σ (rᵢ − c) × Fᵢ`, the z-moment of a force set about `center`.
pub fn net_moment(positions: &[Vec2], forces: &[Vec2], center: Vec2) -> f64 {
    assert_eq!(positions.len(), forces.len(), "one force per position");
    positions
        .iter()
        .zip(forces)
        .map(|(p, f)| cross(p - center, *f))
        .sum()
}
