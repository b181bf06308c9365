use std::collections::HashMap;

use petgraph::algo::astar;
use petgraph::graph::{DiGraph, NodeIndex};

use super::PlanError;
use crate::formats::RouteNetwork;
use crate::geometry::{angle_diff, Point, Pose};

/// Waypoints closer than this are treated as the same junction.
const JUNCTION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
struct Leg {
    length: f64,
    speed_limit: f64,
}

#[derive(Debug, Clone)]
struct LaneRef {
    points: Vec<Point>,
    nodes: Vec<NodeIndex>,
    speed_limit: f64,
}

/// Directed waypoint graph: lanes contribute their consecutive legs,
/// coincident waypoints of different lanes are joined by zero-length links.
#[derive(Debug, Clone)]
pub struct RouteGraph {
    graph: DiGraph<Point, Leg>,
    by_id: HashMap<String, NodeIndex>,
    lanes: Vec<LaneRef>,
}

/// Where a pose attaches to the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub point: Point,
    pub heading: f64,
    /// The waypoint at the end of the leg the anchor lies on.
    next: NodeIndex,
    speed_limit: f64,
}

/// A polyline with a speed limit per leg.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoutePath {
    pub points: Vec<Point>,
    pub limits: Vec<f64>,
}

impl RoutePath {
    fn start(p: Point) -> Self {
        Self {
            points: vec![p],
            limits: Vec::new(),
        }
    }

    fn push(&mut self, p: Point, limit: f64) {
        let last = *self.points.last().expect("path starts with a point");
        if last.distance(p) > JUNCTION_TOLERANCE {
            self.points.push(p);
            self.limits.push(limit);
        }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Point and unit tangent at arc length `s`, clamped to the path.
    pub fn sample(&self, s: f64) -> (Point, Point) {
        let mut acc = 0.0;
        for w in self.points.windows(2) {
            let len = w[0].distance(w[1]);
            let dir = (w[1] - w[0]) * (1.0 / len);
            if s <= acc + len {
                return (w[0] + dir * (s - acc).max(0.0), dir);
            }
            acc += len;
        }
        let n = self.points.len();
        if n < 2 {
            return (self.points[0], Point::new(1.0, 0.0));
        }
        let (a, b) = (self.points[n - 2], self.points[n - 1]);
        (b, (b - a) * (1.0 / a.distance(b)))
    }

    /// Speed limit of the leg containing arc length `s`.
    pub fn limit_at(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (w, &limit) in self.points.windows(2).zip(&self.limits) {
            acc += w[0].distance(w[1]);
            if s < acc {
                return limit;
            }
        }
        self.limits.last().copied().unwrap_or(f64::INFINITY)
    }

    /// Projects `p` onto the path: (station, signed lateral offset, tangent).
    /// `None` if the foot point falls before the start or past the end.
    pub fn project(&self, p: Point) -> Option<(f64, f64, Point)> {
        let mut best: Option<(f64, f64, f64, Point, bool)> = None;
        let mut acc = 0.0;
        let last = self.points.len().saturating_sub(2);
        for (i, w) in self.points.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let len = a.distance(b);
            let dir = (b - a) * (1.0 / len);
            let along = (p - a).dot(dir);
            let outside = (i == 0 && along < 0.0) || (i == last && along > len);
            let t = along.clamp(0.0, len);
            let d = p.distance(a + dir * t);
            if best.map_or(true, |(bd, ..)| d < bd) {
                best = Some((d, acc + t, d.copysign(dir.cross(p - a)), dir, outside));
            }
            acc += len;
        }
        match best {
            Some((_, s, lat, dir, false)) => Some((s, lat, dir)),
            _ => None,
        }
    }
}

impl RouteGraph {
    pub fn new(network: &RouteNetwork) -> Self {
        let mut graph = DiGraph::new();
        let mut by_id = HashMap::new();
        let mut lanes = Vec::new();
        for lane in network.lanes() {
            let nodes: Vec<NodeIndex> = lane
                .waypoints
                .iter()
                .map(|w| {
                    let n = graph.add_node(w.position);
                    by_id.insert(w.id.clone(), n);
                    n
                })
                .collect();
            for (w, n) in lane.waypoints.windows(2).zip(nodes.windows(2)) {
                let leg = Leg {
                    length: w[0].position.distance(w[1].position),
                    speed_limit: lane.speed_limit,
                };
                graph.add_edge(n[0], n[1], leg);
            }
            lanes.push(LaneRef {
                points: lane.points(),
                nodes,
                speed_limit: lane.speed_limit,
            });
        }
        let all: Vec<NodeIndex> = graph.node_indices().collect();
        for &a in &all {
            for &b in &all {
                if a != b && graph[a].distance(graph[b]) <= JUNCTION_TOLERANCE {
                    let link = Leg {
                        length: 0.0,
                        speed_limit: f64::INFINITY,
                    };
                    graph.add_edge(a, b, link);
                }
            }
        }
        Self { graph, by_id, lanes }
    }

    pub fn waypoint(&self, id: &str) -> Option<Point> {
        self.by_id.get(id).map(|&n| self.graph[n])
    }

    /// Attaches `pose` to the closest lane leg running roughly along its
    /// heading; legs pointing backwards are used only if nothing else fits.
    pub fn anchor(&self, pose: &Pose) -> Option<Anchor> {
        let p = pose.position();
        let mut best: Option<(bool, f64, Anchor)> = None;
        for lane in &self.lanes {
            for i in 0..lane.points.len() - 1 {
                let (a, b) = (lane.points[i], lane.points[i + 1]);
                let ab = b - a;
                let len2 = ab.dot(ab);
                if len2 == 0.0 {
                    continue;
                }
                let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
                let foot = a + ab * t;
                let heading = ab.y.atan2(ab.x);
                let aligned = angle_diff(pose.heading, heading).abs() < std::f64::consts::FRAC_PI_2;
                // prefer a leg that still lies ahead when two legs meet at a junction
                let d = p.distance(foot) + if t >= 1.0 { 1e-9 } else { 0.0 };
                let better = match &best {
                    None => true,
                    Some((ba, bd, _)) => (aligned && !ba) || (aligned == *ba && d < *bd),
                };
                if better {
                    let anchor = Anchor {
                        point: foot,
                        heading,
                        next: lane.nodes[i + 1],
                        speed_limit: lane.speed_limit,
                    };
                    best = Some((aligned, d, anchor));
                }
            }
        }
        best.map(|(.., a)| a)
    }

    /// Shortest route from `anchor` through `goals` in order, stopping once
    /// the path is at least `min_length` long. Returns the path and how many
    /// goals it reaches.
    pub fn route(
        &self,
        anchor: &Anchor,
        goals: &[(String, String)],
        min_length: f64,
    ) -> Result<(RoutePath, usize), PlanError> {
        let mut path = RoutePath::start(anchor.point);
        path.push(self.graph[anchor.next], anchor.speed_limit);
        let mut current = anchor.next;
        let mut reached = 0;
        for (checkpoint, waypoint) in goals {
            let &goal = self
                .by_id
                .get(waypoint)
                .ok_or_else(|| PlanError::UnknownCheckpoint(checkpoint.clone()))?;
            if current != goal {
                let target = self.graph[goal];
                let (_, nodes) = astar(
                    &self.graph,
                    current,
                    |n| n == goal,
                    |e| e.weight().length,
                    |n| self.graph[n].distance(target),
                )
                .ok_or_else(|| PlanError::MissionInfeasible(checkpoint.clone()))?;
                for pair in nodes.windows(2) {
                    let leg = self
                        .graph
                        .edges_connecting(pair[0], pair[1])
                        .map(|e| *e.weight())
                        .min_by(|a, b| a.length.total_cmp(&b.length))
                        .expect("astar follows existing edges");
                    path.push(self.graph[pair[1]], leg.speed_limit);
                }
                current = goal;
            }
            reached += 1;
            if path.length() >= min_length {
                break;
            }
        }
        Ok((path, reached))
    }
}
