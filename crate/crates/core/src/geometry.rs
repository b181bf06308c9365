//! Planar points, poses and angle helpers.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A planar point or vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (other - self).norm()
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// Normalizes an angle into `[-π, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = (angle + PI).rem_euclid(TAU) - PI;
    // rem_euclid may return TAU itself for tiny negative inputs
    if a >= PI {
        a -= TAU;
    }
    if a < -PI {
        a = -PI;
    }
    a
}

/// Signed shortest angular difference `to - from`, in `[-π, π)`.
pub fn angle_diff(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// Interpolates between two headings along the shorter arc.
pub fn lerp_angle(from: f64, to: f64, t: f64) -> f64 {
    normalize_angle(from + angle_diff(from, to) * t)
}

/// Absolute position and orientation of an object.
///
/// `heading` is measured counterclockwise from +x and kept in `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn at(point: Point, heading: f64) -> Self {
        Self::new(point.x, point.y, heading)
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn direction(&self) -> Point {
        Point::from_angle(self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }

    /// Composes a body-frame offset onto this pose.
    pub fn compose(&self, offset: &Pose) -> Pose {
        let p = self.position() + offset.position().rotate(self.heading);
        Pose::at(p, self.heading + offset.heading)
    }

    /// Transforms a world point into this pose's body frame.
    pub fn to_local(&self, p: Point) -> Point {
        (p - self.position()).rotate(-self.heading)
    }
}
