//! Object footprints, overlap detection and clearance.
//!
//! Rectangles are tested with the separating-axis theorem, circles by
//! center distance, and the mixed case via the rectangle's closest point to
//! the circle center. Overlaps are reported with a penetration depth and
//! never resolved.

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Pose};

/// Footprint of a simulator object, centered on its pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectShape {
    /// Oriented rectangle; `length` runs along the heading.
    Rectangle { length: f64, width: f64 },
    Circle { radius: f64 },
}

impl ObjectShape {
    pub fn rectangle(length: f64, width: f64) -> Self {
        ObjectShape::Rectangle { length, width }
    }

    pub fn circle(radius: f64) -> Self {
        ObjectShape::Circle { radius }
    }

    /// Checks that every dimension is finite and strictly positive.
    pub fn validate(&self) -> Result<(), String> {
        let dims: &[(&str, f64)] = match self {
            ObjectShape::Rectangle { length, width } => &[("length", *length), ("width", *width)],
            ObjectShape::Circle { radius } => &[("radius", *radius)],
        };
        for (name, v) in dims {
            if !(v.is_finite() && *v > 0.0) {
                return Err(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Radius of the smallest circle around the center enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            ObjectShape::Rectangle { length, width } => (length / 2.0).hypot(width / 2.0),
            ObjectShape::Circle { radius } => radius,
        }
    }

    /// Half extent along the heading direction.
    pub fn half_length(&self) -> f64 {
        match *self {
            ObjectShape::Rectangle { length, .. } => length / 2.0,
            ObjectShape::Circle { radius } => radius,
        }
    }
}

/// World-frame corners of a rectangle, counterclockwise.
pub fn rectangle_corners(pose: &Pose, length: f64, width: f64) -> [Point; 4] {
    let c = pose.position();
    let fwd = pose.direction() * (length / 2.0);
    let left = pose.direction().perp() * (width / 2.0);
    [c + fwd - left, c + fwd + left, c - fwd + left, c - fwd - left]
}

fn project(corners: &[Point; 4], axis: Point) -> (f64, f64) {
    corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

fn rect_rect_depth(a: &[Point; 4], b: &[Point; 4]) -> Option<f64> {
    let axes = [a[1] - a[0], a[3] - a[0], b[1] - b[0], b[3] - b[0]];
    let mut depth = f64::INFINITY;
    for axis in axes {
        let n = axis.norm();
        if n == 0.0 {
            continue;
        }
        let axis = axis * (1.0 / n);
        let (amin, amax) = project(a, axis);
        let (bmin, bmax) = project(b, axis);
        let overlap = amax.min(bmax) - amin.max(bmin);
        if overlap <= 0.0 {
            return None;
        }
        depth = depth.min(overlap);
    }
    Some(depth)
}

/// Closest point on a rectangle (in its local frame) to a local point.
fn clamp_local(p: Point, length: f64, width: f64) -> Point {
    Point::new(
        p.x.clamp(-length / 2.0, length / 2.0),
        p.y.clamp(-width / 2.0, width / 2.0),
    )
}

fn rect_circle_depth(rect: &Pose, length: f64, width: f64, center: Point, radius: f64) -> Option<f64> {
    let local = rect.to_local(center);
    let closest = clamp_local(local, length, width);
    let d = local.distance(closest);
    let depth = if d > 0.0 {
        radius - d
    } else {
        radius + (length / 2.0 - local.x.abs()).min(width / 2.0 - local.y.abs())
    };
    (depth > 0.0).then_some(depth)
}

/// Penetration depth of two placed shapes, `None` if they do not overlap.
pub fn overlap_depth(a: (&Pose, &ObjectShape), b: (&Pose, &ObjectShape)) -> Option<f64> {
    use ObjectShape::*;
    match (*a.1, *b.1) {
        (Rectangle { length: la, width: wa }, Rectangle { length: lb, width: wb }) => rect_rect_depth(
            &rectangle_corners(a.0, la, wa),
            &rectangle_corners(b.0, lb, wb),
        ),
        (Circle { radius: ra }, Circle { radius: rb }) => {
            let depth = ra + rb - a.0.position().distance(b.0.position());
            (depth > 0.0).then_some(depth)
        }
        (Rectangle { length, width }, Circle { radius }) => {
            rect_circle_depth(a.0, length, width, b.0.position(), radius)
        }
        (Circle { radius }, Rectangle { length, width }) => {
            rect_circle_depth(b.0, length, width, a.0.position(), radius)
        }
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) };
    p.distance(a + ab * t)
}

/// Clearance between two placed shapes; 0 when they touch or overlap.
pub fn clearance(a: (&Pose, &ObjectShape), b: (&Pose, &ObjectShape)) -> f64 {
    use ObjectShape::*;
    if overlap_depth(a, b).is_some() {
        return 0.0;
    }
    let gap = match (*a.1, *b.1) {
        (Rectangle { length: la, width: wa }, Rectangle { length: lb, width: wb }) => {
            let ca = rectangle_corners(a.0, la, wa);
            let cb = rectangle_corners(b.0, lb, wb);
            let mut best = f64::INFINITY;
            for (p, other) in ca.iter().map(|p| (p, &cb)).chain(cb.iter().map(|p| (p, &ca))) {
                for i in 0..4 {
                    best = best.min(point_segment_distance(*p, other[i], other[(i + 1) % 4]));
                }
            }
            best
        }
        (Circle { radius: ra }, Circle { radius: rb }) => a.0.position().distance(b.0.position()) - ra - rb,
        (Rectangle { length, width }, Circle { radius }) => {
            let local = a.0.to_local(b.0.position());
            local.distance(clamp_local(local, length, width)) - radius
        }
        (Circle { radius }, Rectangle { length, width }) => {
            let local = b.0.to_local(a.0.position());
            local.distance(clamp_local(local, length, width)) - radius
        }
    };
    gap.max(0.0)
}
