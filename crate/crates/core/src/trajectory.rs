//! String-of-pearls trajectories.
//!
//! A [`Trajectory`] is an ordered list of [`Gate`]s, each a left/right
//! point pair bounding the drivable corridor. The gate midpoints act as
//! control points for either a polyline or a uniform cubic B-spline, which
//! is sampled once into a [`PathTable`] and then queried by arc length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lerp_angle, normalize_angle, Point};

/// Samples per segment when a scenario does not say otherwise.
pub const DEFAULT_RESOLUTION: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("gate pearls coincide at ({x}, {y})")]
    DegenerateGate { x: f64, y: f64 },
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("negative or non-finite target speed {0}")]
    BadSpeed(f64),
    #[error("trajectory needs at least 2 gates, got {0}")]
    TooFewGates(usize),
    #[error("midpoints {0} and {1} coincide")]
    CoincidentMidpoints(usize, usize),
    #[error("path needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("spline parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("arc length {s} outside [0, {total}]")]
    ArcLengthOutOfRange { s: f64, total: f64 },
    #[error("heading undefined between coincident points")]
    CoincidentPoints,
}

/// One pearl pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub left: Point,
    pub right: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_speed: Option<f64>,
}

impl Gate {
    pub fn new(left: Point, right: Point) -> Result<Self, GeometryError> {
        let gate = Gate {
            left,
            right,
            target_speed: None,
        };
        gate.validate()?;
        Ok(gate)
    }

    /// Gate centered on `center`, perpendicular to `direction`, `width` wide.
    pub fn across(center: Point, direction: f64, width: f64) -> Result<Self, GeometryError> {
        let half = Point::from_angle(direction).perp() * (width / 2.0);
        Gate::new(center + half, center - half)
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.target_speed = Some(speed);
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.left.is_finite() || !self.right.is_finite() {
            return Err(GeometryError::NonFinite("gate"));
        }
        if self.left == self.right {
            return Err(GeometryError::DegenerateGate {
                x: self.left.x,
                y: self.left.y,
            });
        }
        if let Some(v) = self.target_speed {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GeometryError::BadSpeed(v));
            }
        }
        Ok(())
    }

    pub fn midpoint(&self) -> Point {
        Point::new((self.left.x + self.right.x) / 2.0, (self.left.y + self.right.y) / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.left.distance(self.right)
    }
}

/// Ordered gates forming a corridor; at least two, with distinct midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Gate>", into = "Vec<Gate>")]
pub struct Trajectory {
    gates: Vec<Gate>,
}

impl TryFrom<Vec<Gate>> for Trajectory {
    type Error = GeometryError;
    fn try_from(gates: Vec<Gate>) -> Result<Self, Self::Error> {
        Trajectory::new(gates)
    }
}

impl From<Trajectory> for Vec<Gate> {
    fn from(t: Trajectory) -> Self {
        t.gates
    }
}

impl Trajectory {
    pub fn new(gates: Vec<Gate>) -> Result<Self, GeometryError> {
        if gates.len() < 2 {
            return Err(GeometryError::TooFewGates(gates.len()));
        }
        for g in &gates {
            g.validate()?;
        }
        for (i, w) in gates.windows(2).enumerate() {
            if w[0].midpoint() == w[1].midpoint() {
                return Err(GeometryError::CoincidentMidpoints(i, i + 1));
            }
        }
        Ok(Self { gates })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Corridor quadrilaterals `(P_l[i], P_r[i], P_r[i+1], P_l[i+1])`.
    pub fn strips(&self) -> impl Iterator<Item = [Point; 4]> + '_ {
        self.gates
            .windows(2)
            .map(|w| [w[0].left, w[0].right, w[1].right, w[1].left])
    }
}

/// Gate midpoints in order.
pub fn midpoints(trajectory: &Trajectory) -> Vec<Point> {
    trajectory.gates.iter().map(Gate::midpoint).collect()
}

/// The four uniform cubic B-spline blending weights at `t`.
pub fn bspline_basis(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let u = 1.0 - t;
    [
        u * u * u / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Evaluates one uniform cubic B-spline window at `t` in `[0, 1]`.
pub fn bspline_point(m: [Point; 4], t: f64) -> Result<Point, GeometryError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::ParameterOutOfRange(t));
    }
    Ok(eval_window(&m, t))
}

fn eval_window(m: &[Point], t: f64) -> Point {
    let b = bspline_basis(t);
    Point::new(
        b[0] * m[0].x + b[1] * m[1].x + b[2] * m[2].x + b[3] * m[3].x,
        b[0] * m[0].y + b[1] * m[1].y + b[2] * m[2].y + b[3] * m[3].y,
    )
}

/// Angle of `next - prev` in `[-π, π)`.
pub fn heading_between(prev: Point, next: Point) -> Result<f64, GeometryError> {
    let d = next - prev;
    if d.x == 0.0 && d.y == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    Ok(normalize_angle(d.y.atan2(d.x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMode {
    Linear,
    #[default]
    Bspline,
}

impl std::str::FromStr for InterpolationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Self::Linear),
            "bspline" => Ok(Self::Bspline),
            other => Err(format!("unknown interpolation mode `{other}` (linear|bspline)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub point: Point,
    pub heading: f64,
    /// Cumulative chord length from the first sample.
    pub s: f64,
}

/// Sampled path with cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    samples: Vec<PathSample>,
    resolution: usize,
    mode: InterpolationMode,
    /// Arc length at every segment (or spline window) boundary.
    knots: Vec<f64>,
}

/// Samples the curve through `points` into a lookup table.
///
/// Every segment (linear) or 4-point window (bspline) contributes
/// `resolution` uniformly spaced parameter values including both ends;
/// shared boundary samples are stored once. In bspline mode the first and
/// last points are each repeated twice more so the curve starts and ends
/// exactly on them.
pub fn build_path_table(
    points: &[Point],
    mode: InterpolationMode,
    resolution: usize,
) -> Result<PathTable, GeometryError> {
    if points.len() < 2 {
        return Err(GeometryError::TooFewPoints(points.len()));
    }
    if resolution < 2 {
        return Err(GeometryError::BadResolution(resolution));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite("path point"));
    }

    let step = 1.0 / (resolution - 1) as f64;
    let mut raw: Vec<Point> = Vec::new();
    let mut boundaries: Vec<usize> = vec![0];
    let mut push_segment = |raw: &mut Vec<Point>, eval: &dyn Fn(f64) -> Point| {
        let start = if raw.is_empty() { 0 } else { 1 };
        for j in start..resolution {
            let t = if j == resolution - 1 { 1.0 } else { j as f64 * step };
            raw.push(eval(t));
        }
        boundaries.push(raw.len() - 1);
    };

    match mode {
        InterpolationMode::Linear => {
            for w in points.windows(2) {
                let (a, b) = (w[0], w[1]);
                push_segment(&mut raw, &|t| if t == 1.0 { b } else { a.lerp(b, t) });
            }
        }
        InterpolationMode::Bspline => {
            let first = points[0];
            let last = points[points.len() - 1];
            let mut padded = Vec::with_capacity(points.len() + 4);
            padded.extend([first, first]);
            padded.extend_from_slice(points);
            padded.extend([last, last]);
            for w in padded.windows(4) {
                push_segment(&mut raw, &|t| eval_window(w, t));
            }
        }
    }

    // Chord summation; zero-length chords are dropped so s stays strictly increasing.
    let mut samples: Vec<PathSample> = Vec::with_capacity(raw.len());
    let mut knots = Vec::with_capacity(boundaries.len());
    let mut next_boundary = boundaries.iter().peekable();
    for (i, p) in raw.iter().enumerate() {
        match samples.last() {
            None => samples.push(PathSample {
                point: *p,
                heading: 0.0,
                s: 0.0,
            }),
            Some(prev) => {
                let d = prev.point.distance(*p);
                if d > 0.0 {
                    let heading = heading_between(prev.point, *p)?;
                    let s = prev.s + d;
                    samples.push(PathSample { point: *p, heading, s });
                }
            }
        }
        if next_boundary.peek() == Some(&&i) {
            next_boundary.next();
            knots.push(samples.last().map_or(0.0, |s| s.s));
        }
    }
    if samples.len() < 2 {
        return Err(GeometryError::CoincidentPoints);
    }
    samples[0].heading = samples[1].heading;

    Ok(PathTable {
        samples,
        resolution,
        mode,
        knots,
    })
}

impl PathTable {
    pub fn samples(&self) -> &[PathSample] {
        &self.samples
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn mode(&self) -> InterpolationMode {
        self.mode
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn total_length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.s)
    }

    pub fn start(&self) -> &PathSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &PathSample {
        &self.samples[self.samples.len() - 1]
    }

    /// Point and heading at arc length `s`.
    pub fn point_at_arclength(&self, s: f64) -> Result<(Point, f64), GeometryError> {
        let total = self.total_length();
        if !(0.0..=total).contains(&s) {
            return Err(GeometryError::ArcLengthOutOfRange { s, total });
        }
        let hi = self.samples.partition_point(|p| p.s < s);
        if hi == 0 {
            let first = &self.samples[0];
            return Ok((first.point, first.heading));
        }
        let (a, b) = (&self.samples[hi - 1], &self.samples[hi]);
        if s == b.s {
            return Ok((b.point, b.heading));
        }
        let t = (s - a.s) / (b.s - a.s);
        Ok((a.point.lerp(b.point, t), lerp_angle(a.heading, b.heading, t)))
    }

    /// Arc length at which gate `index` of an `n`-gate trajectory sits.
    ///
    /// Linear tables hit every midpoint at a knot. Padded spline tables
    /// have `n + 1` windows whose interior boundaries sit next to the
    /// midpoints, so gate `i` maps to boundary `i + 1`; the first and last
    /// gates map to the path ends.
    pub fn gate_station(&self, index: usize, gate_count: usize) -> f64 {
        if index == 0 {
            return 0.0;
        }
        if index + 1 >= gate_count {
            return self.total_length();
        }
        let k = match self.mode {
            InterpolationMode::Linear => index,
            InterpolationMode::Bspline => index + 1,
        };
        self.knots.get(k).copied().unwrap_or_else(|| self.total_length())
    }

    /// Arc length of the sample closest to `p`.
    pub fn closest_station(&self, p: Point) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for w in self.samples.windows(2) {
            let (a, b) = (w[0].point, w[1].point);
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
            let d = p.distance(a + ab * t);
            if d < best.0 {
                best = (d, w[0].s + (w[1].s - w[0].s) * t);
            }
        }
        best.1
    }
}

/// Points this close to a strip edge count as on it, so that values
/// computed to lie on a gate (its midpoint, say) are not lost to rounding.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    p.distance(a + ab * t) <= BOUNDARY_TOLERANCE
}

/// Even-odd ray cast; boundary points count as inside.
fn quad_contains(quad: &[Point; 4], p: Point) -> bool {
    let mut inside = false;
    for i in 0..4 {
        let a = quad[i];
        let b = quad[(i + 1) % 4];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            // sign of the crossing relative to the edge direction
            let side = (b - a).cross(p - a);
            if (side > 0.0) == (b.y > a.y) {
                inside = !inside;
            }
        }
    }
    inside
}

/// True iff `p` lies in any corridor strip between consecutive gates.
pub fn corridor_contains(trajectory: &Trajectory, p: Point) -> bool {
    trajectory.strips().any(|quad| {
        let (lo_x, hi_x) = quad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), q| (l.min(q.x), h.max(q.x)));
        let (lo_y, hi_y) = quad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), q| (l.min(q.y), h.max(q.y)));
        let tol = BOUNDARY_TOLERANCE;
        p.x >= lo_x - tol && p.x <= hi_x + tol && p.y >= lo_y - tol && p.y <= hi_y + tol && quad_contains(&quad, p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn close(a: Point, b: Point, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
    }

    #[test]
    fn midpoint_is_mean_of_pearls() {
        let t = Trajectory::new(vec![
            Gate::new(p(0.0, 2.0), p(0.0, 0.0)).unwrap(),
            Gate::new(p(5.0, 3.0), p(6.0, -1.0)).unwrap(),
        ])
        .unwrap();
        assert_eq!(midpoints(&t), vec![p(0.0, 1.0), p(5.5, 1.0)]);
    }

    #[test]
    fn gate_invariants() {
        assert!(matches!(
            Gate::new(p(1.0, 1.0), p(1.0, 1.0)),
            Err(GeometryError::DegenerateGate { .. })
        ));
        let g = Gate::new(p(0.0, 1.0), p(0.0, -1.0)).unwrap();
        assert!(matches!(Trajectory::new(vec![g]), Err(GeometryError::TooFewGates(1))));
        assert!(matches!(
            Trajectory::new(vec![g, g]),
            Err(GeometryError::CoincidentMidpoints(0, 1))
        ));
    }

    #[test]
    fn bspline_known_values() {
        let line = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0)];
        assert!(close(bspline_point(line, 0.0).unwrap(), p(1.0, 0.0), 1e-12));
        assert!(close(bspline_point(line, 1.0).unwrap(), p(2.0, 0.0), 1e-12));
        assert!(close(bspline_point(line, 0.5).unwrap(), p(1.5, 0.0), 1e-12));
        let m = [p(0.0, 0.0), p(6.0, 0.0), p(0.0, 6.0), p(0.0, 0.0)];
        assert!(close(bspline_point(m, 0.0).unwrap(), p(4.0, 1.0), 1e-12));
        let c = [p(2.0, 3.0); 4];
        assert!(close(bspline_point(c, 0.37).unwrap(), p(2.0, 3.0), 1e-12));
    }

    #[test]
    fn bspline_rejects_parameter_outside_unit_interval() {
        let c = [p(0.0, 0.0); 4];
        assert!(bspline_point(c, -0.01).is_err());
        assert!(bspline_point(c, 1.0001).is_err());
        assert!(bspline_point(c, f64::NAN).is_err());
    }

    #[test]
    fn headings() {
        assert_eq!(heading_between(p(0.0, 0.0), p(0.0, 5.0)).unwrap(), FRAC_PI_2);
        assert_eq!(heading_between(p(0.0, 0.0), p(-1.0, 0.0)).unwrap(), -PI);
        assert!((heading_between(p(1.0, 1.0), p(2.0, 2.0)).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!(heading_between(p(1.0, 1.0), p(1.0, 1.0)).is_err());
    }

    #[test]
    fn linear_table_straight_segment() {
        let t = build_path_table(&[p(0.0, 0.0), p(10.0, 0.0)], InterpolationMode::Linear, 2).unwrap();
        assert_eq!(t.samples().len(), 2);
        assert_eq!(t.start().point, p(0.0, 0.0));
        assert_eq!(t.end().point, p(10.0, 0.0));
        assert_eq!(t.total_length(), 10.0);
        let (q, h) = t.point_at_arclength(4.0).unwrap();
        assert!(close(q, p(4.0, 0.0), 1e-12));
        assert_eq!(h, 0.0);
        assert_eq!(t.point_at_arclength(0.0).unwrap().0, p(0.0, 0.0));
        assert_eq!(t.point_at_arclength(10.0).unwrap().0, p(10.0, 0.0));
        assert!(t.point_at_arclength(10.5).is_err());
        assert!(t.point_at_arclength(-0.1).is_err());
    }

    #[test]
    fn spline_table_reproduces_endpoints() {
        let t = build_path_table(&[p(0.0, 0.0), p(10.0, 0.0)], InterpolationMode::Bspline, 100).unwrap();
        assert!(close(t.start().point, p(0.0, 0.0), 1e-9));
        assert!(close(t.end().point, p(10.0, 0.0), 1e-9));
        assert!((t.total_length() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn spline_cuts_corners() {
        let pts = [p(0.0, 0.0), p(10.0, 0.0), p(10.0, 10.0)];
        let lin = build_path_table(&pts, InterpolationMode::Linear, 100).unwrap();
        let spl = build_path_table(&pts, InterpolationMode::Bspline, 100).unwrap();
        assert!((lin.total_length() - 20.0).abs() < 1e-9);
        assert!(spl.total_length() < lin.total_length());
    }

    #[test]
    fn arc_length_strictly_increasing_and_knots_recorded() {
        let pts = [p(0.0, 0.0), p(3.0, 1.0), p(6.0, -1.0), p(9.0, 0.0)];
        for mode in [InterpolationMode::Linear, InterpolationMode::Bspline] {
            let t = build_path_table(&pts, mode, 10).unwrap();
            assert_eq!(t.samples()[0].s, 0.0);
            assert!(t.samples().windows(2).all(|w| w[1].s > w[0].s));
            let segments = match mode {
                InterpolationMode::Linear => 3,
                InterpolationMode::Bspline => 5,
            };
            assert_eq!(t.knots().len(), segments + 1);
            assert_eq!(*t.knots().last().unwrap(), t.total_length());
        }
    }

    #[test]
    fn first_heading_copies_second() {
        let t = build_path_table(&[p(0.0, 0.0), p(0.0, 10.0)], InterpolationMode::Linear, 5).unwrap();
        assert_eq!(t.samples()[0].heading, t.samples()[1].heading);
        assert_eq!(t.samples()[0].heading, FRAC_PI_2);
    }

    #[test]
    fn table_rejects_bad_input() {
        assert!(matches!(
            build_path_table(&[p(0.0, 0.0)], InterpolationMode::Linear, 10),
            Err(GeometryError::TooFewPoints(1))
        ));
        assert!(matches!(
            build_path_table(&[p(0.0, 0.0), p(1.0, 0.0)], InterpolationMode::Bspline, 1),
            Err(GeometryError::BadResolution(1))
        ));
    }

    #[test]
    fn corridor_basics() {
        let t = Trajectory::new(vec![
            Gate::new(p(0.0, 1.0), p(0.0, -1.0)).unwrap(),
            Gate::new(p(10.0, 1.0), p(10.0, -1.0)).unwrap(),
        ])
        .unwrap();
        for m in midpoints(&t) {
            assert!(corridor_contains(&t, m));
        }
        assert!(corridor_contains(&t, p(5.0, 0.0)));
        assert!(corridor_contains(&t, p(5.0, 1.0)));
        assert!(!corridor_contains(&t, p(5.0, 1.0001)));
        assert!(!corridor_contains(&t, p(100.0, 100.0)));
    }
}
