use super::{check_speed, BehaviorError, Motion, MotionBehavior};
use crate::geometry::{Point, Pose};
use crate::trajectory::{build_path_table, midpoints, InterpolationMode, PathTable, Trajectory};
use crate::world::{ObjectState, WorldSnapshot};

/// Speeds below this are treated as standing still.
pub const STANDSTILL_SPEED: f64 = 0.1;

/// Target speed as a function of arc length.
///
/// Each gate pins a speed at its station (its own target, or the default
/// cruise speed); speeds are interpolated linearly in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    stations: Vec<f64>,
    speeds: Vec<f64>,
}

impl SpeedProfile {
    pub fn constant(speed: f64) -> Self {
        Self {
            stations: vec![0.0],
            speeds: vec![speed],
        }
    }

    pub fn from_gates(trajectory: &Trajectory, table: &PathTable, default_speed: f64) -> Self {
        let n = trajectory.len();
        let mut stations: Vec<f64> = Vec::with_capacity(n);
        let mut speeds = Vec::with_capacity(n);
        for (i, g) in trajectory.gates().iter().enumerate() {
            let s = table.gate_station(i, n);
            let v = g.target_speed.unwrap_or(default_speed);
            match stations.last() {
                Some(&last) if s <= last => {
                    // coincident stations: keep the slower target
                    let k = speeds.len() - 1;
                    speeds[k] = f64::min(speeds[k], v);
                }
                _ => {
                    stations.push(s);
                    speeds.push(v);
                }
            }
        }
        Self { stations, speeds }
    }

    pub fn speed_at(&self, s: f64) -> f64 {
        let i = self.stations.partition_point(|&x| x <= s);
        if i == 0 {
            return self.speeds[0];
        }
        if i == self.stations.len() {
            return self.speeds[i - 1];
        }
        let (s0, s1) = (self.stations[i - 1], self.stations[i]);
        let t = (s - s0) / (s1 - s0);
        self.speeds[i - 1] + (self.speeds[i] - self.speeds[i - 1]) * t
    }
}

/// Follows a string of pearls at the profile speed, stopping at its end.
#[derive(Debug, Clone)]
pub struct TrajectoryBehavior {
    trajectory: Trajectory,
    table: PathTable,
    profile: SpeedProfile,
    s: f64,
    finished: bool,
}

impl TrajectoryBehavior {
    pub fn new(
        trajectory: Trajectory,
        mode: InterpolationMode,
        resolution: usize,
        default_speed: f64,
    ) -> Result<Self, BehaviorError> {
        let default_speed = check_speed(default_speed)?;
        let table = build_path_table(&midpoints(&trajectory), mode, resolution)?;
        let profile = SpeedProfile::from_gates(&trajectory, &table, default_speed);
        Ok(Self {
            trajectory,
            table,
            profile,
            s: 0.0,
            finished: false,
        })
    }

    /// Starts the behavior at the path station closest to `p`.
    pub fn starting_near(mut self, p: Point) -> Self {
        self.s = self.table.closest_station(p);
        self
    }

    pub fn table(&self) -> &PathTable {
        &self.table
    }

    pub fn profile(&self) -> &SpeedProfile {
        &self.profile
    }

    /// Arc length traveled so far.
    pub fn station(&self) -> f64 {
        self.s
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    fn pose_at(&self, s: f64) -> Pose {
        let (p, h) = self
            .table
            .point_at_arclength(s.clamp(0.0, self.table.total_length()))
            .expect("station clamped into table range");
        Pose::at(p, h)
    }
}

impl MotionBehavior for TrajectoryBehavior {
    fn name(&self) -> &str {
        "trajectory"
    }

    fn advance(&mut self, own: &ObjectState, _: &WorldSnapshot, dt: f64) -> Motion {
        if dt == 0.0 {
            return Motion::unchanged(own);
        }
        if self.finished {
            return Motion {
                pose: self.pose_at(self.s),
                speed: 0.0,
            };
        }
        let mut v = self.profile.speed_at(self.s);
        if v < STANDSTILL_SPEED {
            v = 0.0;
        }
        let total = self.table.total_length();
        let next = self.s + v * dt;
        if next >= total {
            self.s = total;
            self.finished = true;
            return Motion {
                pose: self.pose_at(total),
                speed: 0.0,
            };
        }
        self.s = next;
        Motion {
            pose: self.pose_at(next),
            speed: v,
        }
    }

    fn trajectory(&self) -> Option<&Trajectory> {
        Some(&self.trajectory)
    }
}
