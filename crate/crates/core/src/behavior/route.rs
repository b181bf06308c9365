use super::{check_speed, BehaviorError, Motion, MotionBehavior};
use crate::geometry::{Point, Pose};
use crate::trajectory::{build_path_table, GeometryError, InterpolationMode, PathTable, DEFAULT_RESOLUTION};
use crate::world::{ObjectState, WorldSnapshot};

/// Drives a fixed waypoint polyline at constant cruise speed.
///
/// Cyclic routes are closed back to their first waypoint and wrap around;
/// open routes stop at the last waypoint. No slowdown at corners.
#[derive(Debug, Clone)]
pub struct RouteBehavior {
    table: PathTable,
    cyclic: bool,
    speed: f64,
    s: f64,
}

impl RouteBehavior {
    pub fn new(waypoints: &[Point], cyclic: bool, speed: f64) -> Result<Self, BehaviorError> {
        let speed = check_speed(speed)?;
        let mut pts = waypoints.to_vec();
        if cyclic {
            if let (Some(&first), Some(&last)) = (pts.first(), pts.last()) {
                if first != last {
                    pts.push(first);
                }
            }
        }
        let table = match build_path_table(&pts, InterpolationMode::Linear, DEFAULT_RESOLUTION) {
            Ok(t) => t,
            Err(GeometryError::CoincidentPoints) => return Err(BehaviorError::ZeroLengthRoute),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            table,
            cyclic,
            speed,
            s: 0.0,
        })
    }

    /// Starts at the route point closest to `p` instead of the first waypoint.
    pub fn starting_near(mut self, p: Point) -> Self {
        self.s = self.table.closest_station(p);
        self
    }

    pub fn length(&self) -> f64 {
        self.table.total_length()
    }

    pub fn station(&self) -> f64 {
        self.s
    }

    pub fn start_pose(&self) -> Pose {
        self.pose_at(self.s)
    }

    fn pose_at(&self, s: f64) -> Pose {
        let (p, h) = self
            .table
            .point_at_arclength(s.clamp(0.0, self.table.total_length()))
            .expect("station clamped into table range");
        Pose::at(p, h)
    }
}

impl MotionBehavior for RouteBehavior {
    fn name(&self) -> &str {
        "route"
    }

    fn advance(&mut self, own: &ObjectState, _: &WorldSnapshot, dt: f64) -> Motion {
        if dt == 0.0 {
            return Motion::unchanged(own);
        }
        let total = self.table.total_length();
        let mut next = self.s + self.speed * dt;
        let mut speed = self.speed;
        if self.cyclic {
            next = next.rem_euclid(total);
        } else if next >= total {
            next = total;
            speed = 0.0;
        }
        self.s = next;
        Motion {
            pose: self.pose_at(next),
            speed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::ObjectShape;
    use crate::world::Role;

    fn own() -> ObjectState {
        ObjectState {
            id: "car".into(),
            role: Role::Traffic,
            shape: ObjectShape::rectangle(4.0, 2.0),
            pose: Pose::default(),
            speed: 0.0,
        }
    }

    fn snap() -> WorldSnapshot {
        WorldSnapshot {
            clock: 0.0,
            objects: vec![],
        }
    }

    #[test]
    fn one_meter_along_leg() {
        let mut r = RouteBehavior::new(&[Point::new(0.0, 0.0), Point::new(0.0, 10.0)], false, 1.0).unwrap();
        let m = r.advance(&own(), &snap(), 1.0);
        assert!((m.pose.y - 1.0).abs() < 1e-12 && m.pose.x.abs() < 1e-12);
    }

    #[test]
    fn cyclic_square_wraps() {
        let square = [
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(0.0, 10.0),
        ];
        let mut r = RouteBehavior::new(&square, true, 1.0).unwrap();
        assert!((r.length() - 40.0).abs() < 1e-9);
        let mut m = Motion::unchanged(&own());
        for _ in 0..45 {
            m = r.advance(&own(), &snap(), 1.0);
        }
        // 45 mod 40 = 5 m past the start corner
        assert!((m.pose.x - 5.0).abs() < 1e-9 && m.pose.y.abs() < 1e-9, "{m:?}");
    }

    #[test]
    fn open_route_stops_at_end() {
        let mut r = RouteBehavior::new(&[Point::new(0.0, 0.0), Point::new(3.0, 0.0)], false, 2.0).unwrap();
        r.advance(&own(), &snap(), 1.0);
        let m = r.advance(&own(), &snap(), 1.0);
        assert_eq!(m.pose.x, 3.0);
        assert_eq!(m.speed, 0.0);
    }

    #[test]
    fn zero_length_rejected() {
        let p = Point::new(4.0, 4.0);
        assert_eq!(RouteBehavior::new(&[p, p], false, 1.0).unwrap_err(), BehaviorError::ZeroLengthRoute);
        assert_eq!(RouteBehavior::new(&[p, p, p], true, 1.0).unwrap_err(), BehaviorError::ZeroLengthRoute);
    }

    #[test]
    fn starts_near_point() {
        let r = RouteBehavior::new(&[Point::new(0.0, 0.0), Point::new(10.0, 0.0)], false, 1.0)
            .unwrap()
            .starting_near(Point::new(4.0, 3.0));
        assert!((r.station() - 4.0).abs() < 1e-9);
    }
}
