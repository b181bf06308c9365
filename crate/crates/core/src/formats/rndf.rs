//! Plain-text route network format.
//!
//! ```text
//! # comment
//! segment <id>
//!   lane <id> width <m> speed <m/s>
//!     wp <id> <x> <y>
//!   checkpoint <id> <wp-id>
//! end
//! ```
//!
//! Tokens are whitespace separated; `#` starts a comment. `lane` and `wp`
//! lines are only valid inside a `segment ... end` block; `checkpoint`
//! lines may appear anywhere and are resolved after the whole file is read.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::canonical::fmt6;
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waypoint {
    pub id: String,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lane {
    pub id: String,
    pub width: f64,
    pub speed_limit: f64,
    pub waypoints: Vec<Waypoint>,
}

impl Lane {
    pub fn points(&self) -> Vec<Point> {
        self.waypoints.iter().map(|w| w.position).collect()
    }

    /// Polyline length through the waypoints.
    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].position.distance(w[1].position))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub id: String,
    pub lanes: Vec<Lane>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub id: String,
    pub waypoint: String,
}

/// A linked route network: every checkpoint refers to an existing waypoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RouteNetwork {
    pub segments: Vec<Segment>,
    pub checkpoints: Vec<Checkpoint>,
}

impl RouteNetwork {
    pub fn lanes(&self) -> impl Iterator<Item = &Lane> {
        self.segments.iter().flat_map(|s| s.lanes.iter())
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes().find(|l| l.id == id)
    }

    pub fn waypoint(&self, id: &str) -> Option<&Waypoint> {
        self.lanes().flat_map(|l| l.waypoints.iter()).find(|w| w.id == id)
    }

    pub fn checkpoint(&self, id: &str) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.id == id)
    }

    pub fn checkpoint_position(&self, id: &str) -> Option<Point> {
        self.checkpoint(id)
            .and_then(|c| self.waypoint(&c.waypoint))
            .map(|w| w.position)
    }

    /// Lane whose polyline passes closest to `p`.
    pub fn nearest_lane(&self, p: Point) -> Option<&Lane> {
        let mut best: Option<(f64, &Lane)> = None;
        for lane in self.lanes() {
            for w in lane.waypoints.windows(2) {
                let (a, b) = (w[0].position, w[1].position);
                let ab = b - a;
                let len2 = ab.dot(ab);
                let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) };
                let d = p.distance(a + ab * t);
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, lane));
                }
            }
        }
        best.map(|(_, l)| l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RndfErrorKind {
    UnknownKeyword(String),
    Arity { keyword: &'static str, expected: usize, found: usize },
    BadNumber(String),
    NonPositive { field: &'static str, value: String },
    OutsideSegment(&'static str),
    OutsideLane,
    NestedSegment(String),
    EndWithoutSegment,
    UnterminatedSegment(String),
    EmptySegment(String),
    DuplicateId { kind: &'static str, id: String },
    DanglingCheckpoint { checkpoint: String, waypoint: String },
    TooFewWaypoints { lane: String, found: usize },
    ExpectedToken { expected: &'static str, found: String },
}

impl fmt::Display for RndfErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use RndfErrorKind::*;
        match self {
            UnknownKeyword(k) => write!(f, "unknown keyword `{k}`"),
            Arity { keyword, expected, found } => {
                write!(f, "`{keyword}` takes {expected} arguments, found {found}")
            }
            BadNumber(t) => write!(f, "`{t}` is not a finite number"),
            NonPositive { field, value } => write!(f, "{field} must be > 0, got {value}"),
            OutsideSegment(k) => write!(f, "`{k}` outside a segment block"),
            OutsideLane => write!(f, "`wp` before any `lane` in this segment"),
            NestedSegment(id) => write!(f, "segment `{id}` opened before the previous one was closed with `end`"),
            EndWithoutSegment => write!(f, "`end` without an open segment"),
            UnterminatedSegment(id) => write!(f, "segment `{id}` is missing its `end`"),
            EmptySegment(id) => write!(f, "segment `{id}` has no lanes"),
            DuplicateId { kind, id } => write!(f, "duplicate {kind} id `{id}`"),
            DanglingCheckpoint { checkpoint, waypoint } => {
                write!(f, "checkpoint `{checkpoint}` references unknown waypoint `{waypoint}`")
            }
            TooFewWaypoints { lane, found } => {
                write!(f, "lane `{lane}` needs at least 2 waypoints, found {found}")
            }
            ExpectedToken { expected, found } => write!(f, "expected `{expected}`, found `{found}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct RndfError {
    pub line: usize,
    pub kind: RndfErrorKind,
}

fn err(line: usize, kind: RndfErrorKind) -> RndfError {
    RndfError { line, kind }
}

fn number(line: usize, token: &str) -> Result<f64, RndfError> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, RndfErrorKind::BadNumber(token.to_owned())))
}

fn positive(line: usize, field: &'static str, token: &str) -> Result<f64, RndfError> {
    let v = number(line, token)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(err(line, RndfErrorKind::NonPositive { field, value: token.to_owned() }))
    }
}

fn arity(line: usize, keyword: &'static str, args: &[&str], expected: usize) -> Result<(), RndfError> {
    if args.len() == expected {
        Ok(())
    } else {
        Err(err(line, RndfErrorKind::Arity { keyword, expected, found: args.len() }))
    }
}

struct OpenSegment {
    line: usize,
    segment: Segment,
    lane_lines: Vec<usize>,
}

fn close_lane(open: &OpenSegment) -> Result<(), RndfError> {
    if let (Some(lane), Some(&line)) = (open.segment.lanes.last(), open.lane_lines.last()) {
        if lane.waypoints.len() < 2 {
            return Err(err(
                line,
                RndfErrorKind::TooFewWaypoints {
                    lane: lane.id.clone(),
                    found: lane.waypoints.len(),
                },
            ));
        }
    }
    Ok(())
}

/// Parses and links a route network; the first error wins.
pub fn parse_route_network(text: &str) -> Result<RouteNetwork, RndfError> {
    let mut net = RouteNetwork::default();
    let mut open: Option<OpenSegment> = None;
    let mut segment_ids = HashSet::new();
    let mut lane_ids = HashSet::new();
    let mut wp_ids = HashSet::new();
    let mut cp_ids = HashSet::new();
    let mut checkpoint_lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(keyword) = tokens.next() else {
            continue;
        };
        let args: Vec<&str> = tokens.collect();
        match keyword {
            "segment" => {
                arity(line, "segment", &args, 1)?;
                if let Some(o) = &open {
                    return Err(err(line, RndfErrorKind::NestedSegment(o.segment.id.clone())));
                }
                if !segment_ids.insert(args[0].to_owned()) {
                    return Err(err(line, RndfErrorKind::DuplicateId { kind: "segment", id: args[0].to_owned() }));
                }
                open = Some(OpenSegment {
                    line,
                    segment: Segment {
                        id: args[0].to_owned(),
                        lanes: Vec::new(),
                    },
                    lane_lines: Vec::new(),
                });
            }
            "lane" => {
                arity(line, "lane", &args, 5)?;
                let o = open.as_mut().ok_or_else(|| err(line, RndfErrorKind::OutsideSegment("lane")))?;
                for (pos, kw) in [(1, "width"), (3, "speed")] {
                    if args[pos] != kw {
                        return Err(err(line, RndfErrorKind::ExpectedToken { expected: kw, found: args[pos].to_owned() }));
                    }
                }
                let width = positive(line, "width", args[2])?;
                let speed_limit = positive(line, "speed", args[4])?;
                close_lane(o)?;
                if !lane_ids.insert(args[0].to_owned()) {
                    return Err(err(line, RndfErrorKind::DuplicateId { kind: "lane", id: args[0].to_owned() }));
                }
                o.segment.lanes.push(Lane {
                    id: args[0].to_owned(),
                    width,
                    speed_limit,
                    waypoints: Vec::new(),
                });
                o.lane_lines.push(line);
            }
            "wp" => {
                arity(line, "wp", &args, 3)?;
                let o = open.as_mut().ok_or_else(|| err(line, RndfErrorKind::OutsideSegment("wp")))?;
                let lane = o.segment.lanes.last_mut().ok_or_else(|| err(line, RndfErrorKind::OutsideLane))?;
                let x = number(line, args[1])?;
                let y = number(line, args[2])?;
                if !wp_ids.insert(args[0].to_owned()) {
                    return Err(err(line, RndfErrorKind::DuplicateId { kind: "waypoint", id: args[0].to_owned() }));
                }
                lane.waypoints.push(Waypoint {
                    id: args[0].to_owned(),
                    position: Point::new(x, y),
                });
            }
            "checkpoint" => {
                arity(line, "checkpoint", &args, 2)?;
                if !cp_ids.insert(args[0].to_owned()) {
                    return Err(err(line, RndfErrorKind::DuplicateId { kind: "checkpoint", id: args[0].to_owned() }));
                }
                net.checkpoints.push(Checkpoint {
                    id: args[0].to_owned(),
                    waypoint: args[1].to_owned(),
                });
                checkpoint_lines.push(line);
            }
            "end" => {
                arity(line, "end", &args, 0)?;
                let o = open.take().ok_or_else(|| err(line, RndfErrorKind::EndWithoutSegment))?;
                if o.segment.lanes.is_empty() {
                    return Err(err(o.line, RndfErrorKind::EmptySegment(o.segment.id)));
                }
                close_lane(&o)?;
                net.segments.push(o.segment);
            }
            other => return Err(err(line, RndfErrorKind::UnknownKeyword(other.to_owned()))),
        }
    }

    if let Some(o) = open {
        return Err(err(o.line, RndfErrorKind::UnterminatedSegment(o.segment.id)));
    }
    for (cp, line) in net.checkpoints.iter().zip(checkpoint_lines) {
        if !wp_ids.contains(&cp.waypoint) {
            return Err(err(
                line,
                RndfErrorKind::DanglingCheckpoint {
                    checkpoint: cp.id.clone(),
                    waypoint: cp.waypoint.clone(),
                },
            ));
        }
    }
    Ok(net)
}

/// Canonical text form; numbers at six fractional digits.
pub fn serialize_route_network(net: &RouteNetwork) -> String {
    let mut out = String::new();
    for seg in &net.segments {
        out.push_str(&format!("segment {}\n", seg.id));
        for lane in &seg.lanes {
            out.push_str(&format!(
                "  lane {} width {} speed {}\n",
                lane.id,
                fmt6(lane.width),
                fmt6(lane.speed_limit)
            ));
            for wp in &lane.waypoints {
                out.push_str(&format!("    wp {} {} {}\n", wp.id, fmt6(wp.position.x), fmt6(wp.position.y)));
            }
        }
        out.push_str("end\n");
    }
    for cp in &net.checkpoints {
        out.push_str(&format!("checkpoint {} {}\n", cp.id, cp.waypoint));
    }
    out
}

/// Waypoint positions keyed by id, for quick lookups.
pub fn waypoint_index(net: &RouteNetwork) -> HashMap<&str, Point> {
    net.lanes()
        .flat_map(|l| l.waypoints.iter())
        .map(|w| (w.id.as_str(), w.position))
        .collect()
}
