use super::route::{Anchor, RouteGraph, RoutePath};
use super::{PlanError, PlanRequest, Reasoner, SpecError};
use crate::geometry::{Point, Pose};
use crate::sensor::PerceivedObject;
use crate::shape::ObjectShape;
use crate::trajectory::{Gate, Trajectory};

/// Tunables of [`BaselineReasoner`]. Distances in meters, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Length of the planned path ahead of the vehicle.
    pub lookahead: f64,
    /// Minimum gap kept to an obstacle on a collision course.
    pub d_margin: f64,
    /// Prediction horizon for the constant-velocity obstacle model.
    pub horizon: f64,
    pub cruise: f64,
    pub gate_spacing: f64,
    /// Distance over which target speeds ramp down to a stop.
    pub braking_distance: f64,
    pub checkpoint_radius: f64,
    /// Extra slack added to every stop point.
    pub stop_buffer: f64,
    pub prediction_step: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            lookahead: 40.0,
            d_margin: 8.0,
            horizon: 4.0,
            cruise: 10.0,
            gate_spacing: 2.0,
            braking_distance: 15.0,
            checkpoint_radius: 2.5,
            stop_buffer: 0.5,
            prediction_step: 0.25,
        }
    }
}

impl BaselineConfig {
    pub(crate) fn set(&mut self, key: &str, value: f64) -> Result<(), SpecError> {
        let slot = match key {
            "lookahead" => &mut self.lookahead,
            "d_margin" | "margin" => &mut self.d_margin,
            "horizon" => &mut self.horizon,
            "cruise" => &mut self.cruise,
            "gate_spacing" => &mut self.gate_spacing,
            "braking_distance" => &mut self.braking_distance,
            "checkpoint_radius" => &mut self.checkpoint_radius,
            "stop_buffer" => &mut self.stop_buffer,
            "prediction_step" => &mut self.prediction_step,
            _ => {
                return Err(SpecError::UnknownParameter {
                    kind: "baseline".into(),
                    key: key.into(),
                })
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let positive = [
            ("lookahead", self.lookahead),
            ("cruise", self.cruise),
            ("gate_spacing", self.gate_spacing),
            ("braking_distance", self.braking_distance),
            ("checkpoint_radius", self.checkpoint_radius),
            ("prediction_step", self.prediction_step),
        ];
        let non_negative = [
            ("d_margin", self.d_margin),
            ("horizon", self.horizon),
            ("stop_buffer", self.stop_buffer),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpecError::BadValue {
                    key: key.into(),
                    message: format!("must be > 0, got {v}"),
                });
            }
        }
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SpecError::BadValue {
                    key: key.into(),
                    message: format!("must be >= 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Follows the mission along lane centers and stops short of anything on a
/// collision course.
#[derive(Debug, Clone)]
pub struct BaselineReasoner {
    config: BaselineConfig,
    label: String,
    graph: Option<RouteGraph>,
    next_checkpoint: usize,
}

/// Half length of the two-gate corridor planned when standing still.
const STANDSTILL_HALF_LENGTH: f64 = 0.5;

impl Default for BaselineReasoner {
    fn default() -> Self {
        Self::new(BaselineConfig::default())
    }
}

impl BaselineReasoner {
    pub fn new(config: BaselineConfig) -> Self {
        Self::with_label(config, "baseline".into())
    }

    pub fn with_label(config: BaselineConfig, label: String) -> Self {
        Self {
            config,
            label,
            graph: None,
            next_checkpoint: 0,
        }
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.config
    }

    /// Index of the first checkpoint not yet visited.
    pub fn next_checkpoint(&self) -> usize {
        self.next_checkpoint
    }

    /// Arc length along `path` at which the vehicle has to be stopped for the
    /// closest object on a collision course, if any.
    pub fn stop_station(&self, path: &RoutePath, objects: &[PerceivedObject], ego: &ObjectShape, width: f64) -> Option<f64> {
        let c = &self.config;
        let length = path.length().min(c.lookahead);
        let steps = (c.horizon / c.prediction_step).round() as usize;
        let mut nearest: Option<f64> = None;
        for obj in objects {
            let velocity = obj.pose.direction() * obj.speed;
            for k in 0..=steps {
                let tau = k as f64 * c.prediction_step;
                let p = obj.pose.position() + velocity * tau;
                let Some((s, lateral, tangent)) = path.project(p) else {
                    continue;
                };
                if s > length {
                    continue;
                }
                let (along, across) = extents(&obj.shape, obj.pose.heading, tangent);
                if lateral.abs() - across >= width / 2.0 {
                    continue;
                }
                let front = s - along;
                nearest = Some(nearest.map_or(front, |n| n.min(front)));
            }
        }
        nearest.map(|front| front - ego.half_length() - c.d_margin - c.stop_buffer)
    }

    fn target_speed(&self, base: f64, s: f64, stops: &[f64]) -> f64 {
        stops.iter().fold(base, |v, &stop| {
            let ramp = base * (stop - s) / self.config.braking_distance;
            v.min(ramp).max(0.0)
        })
    }

    fn standstill(&self, pose: &Pose, width: f64) -> Result<Trajectory, PlanError> {
        let behind = pose.position() - pose.direction() * STANDSTILL_HALF_LENGTH;
        let ahead = pose.position() + pose.direction() * STANDSTILL_HALF_LENGTH;
        Ok(Trajectory::new(vec![
            Gate::across(behind, pose.heading, width)?.with_speed(0.0),
            Gate::across(ahead, pose.heading, width)?.with_speed(0.0),
        ])?)
    }

    fn gates(
        &self,
        req: &PlanRequest<'_>,
        anchor: &Anchor,
        path: &RoutePath,
        stops: &[f64],
    ) -> Result<Trajectory, PlanError> {
        let c = &self.config;
        let width = req.lane_width;
        let cap = req.mission.speed_cap.unwrap_or(f64::INFINITY);
        // speeds are interpolated between gates, so honor the next gate's limit early
        let base = |s: f64| {
            c.cruise
                .min(cap)
                .min(path.limit_at(s))
                .min(path.limit_at(s + c.gate_spacing))
        };
        let end = path.length().min(c.lookahead);

        let (_, dir0) = path.sample(0.0);
        let dir0 = if path.points.len() < 2 { Point::from_angle(anchor.heading) } else { dir0 };
        // the first gate is centered on the vehicle: the padded spline starts
        // exactly there, so installing the plan never moves the vehicle
        let start = req.pose.position();
        let heading0 = dir0.y.atan2(dir0.x);
        let mut gates = vec![Gate::across(start, heading0, width)?.with_speed(self.target_speed(base(0.0), 0.0, stops))];

        let mut stations = Vec::new();
        let mut s = c.gate_spacing;
        while s < end - 0.25 * c.gate_spacing {
            stations.push(s);
            s += c.gate_spacing;
        }
        stations.push(end);
        for s in stations {
            let (p, _) = path.sample(s);
            // tangent from a centered chord so gates at corners split the turn
            let (a, _) = path.sample((s - c.gate_spacing / 2.0).max(0.0));
            let (b, _) = path.sample((s + c.gate_spacing / 2.0).min(path.length()));
            let chord = b - a;
            let heading = if chord.norm() > 1e-9 { chord.y.atan2(chord.x) } else { heading0 };
            if p.distance(gates.last().expect("first gate pushed").midpoint()) < 1e-6 {
                continue;
            }
            gates.push(Gate::across(p, heading, width)?.with_speed(self.target_speed(base(s), s, stops)));
        }
        if gates.len() < 2 {
            return self.standstill(&req.pose, width);
        }
        Ok(Trajectory::new(gates)?)
    }
}

/// Half extents of a shape along and across a direction.
fn extents(shape: &ObjectShape, heading: f64, tangent: Point) -> (f64, f64) {
    match *shape {
        ObjectShape::Circle { radius } => (radius, radius),
        ObjectShape::Rectangle { length, width } => {
            let rel = heading - tangent.y.atan2(tangent.x);
            let (sin, cos) = (rel.sin().abs(), rel.cos().abs());
            (
                length / 2.0 * cos + width / 2.0 * sin,
                length / 2.0 * sin + width / 2.0 * cos,
            )
        }
    }
}

impl Reasoner for BaselineReasoner {
    fn name(&self) -> &str {
        &self.label
    }

    fn reset(&mut self) {
        self.graph = None;
        self.next_checkpoint = 0;
    }

    fn plan(&mut self, req: &PlanRequest<'_>) -> Result<Trajectory, PlanError> {
        let graph = self.graph.get_or_insert_with(|| RouteGraph::new(req.network));
        let mut goals = Vec::with_capacity(req.mission.checkpoints.len());
        for id in &req.mission.checkpoints {
            let cp = req
                .network
                .checkpoint(id)
                .ok_or_else(|| PlanError::UnknownCheckpoint(id.clone()))?;
            goals.push((id.clone(), cp.waypoint.clone()));
        }

        let here = req.pose.position();
        while let Some((_, wp)) = goals.get(self.next_checkpoint) {
            let p = graph.waypoint(wp).expect("linked checkpoint");
            if p.distance(here) > self.config.checkpoint_radius {
                break;
            }
            self.next_checkpoint += 1;
        }
        let remaining = &goals[self.next_checkpoint..];
        if remaining.is_empty() {
            return self.standstill(&req.pose, req.lane_width);
        }

        let anchor = graph.anchor(&req.pose).ok_or(PlanError::OffNetwork)?;
        let (path, reached) = graph.route(&anchor, remaining, self.config.lookahead)?;
        let mut stops = Vec::with_capacity(2);
        if reached == remaining.len() {
            // the mission ends on this path: come to rest at the last checkpoint
            stops.push(path.length());
        }
        if let Some(s) = self.stop_station(&path, &req.view.perceived, &req.shape, req.lane_width) {
            stops.push(s);
        }
        self.gates(req, &anchor, &path, &stops)
    }
}
