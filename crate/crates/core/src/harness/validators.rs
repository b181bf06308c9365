use serde::{Deserialize, Serialize};

use super::{HarnessError, MissionTracker, Violation};
use crate::formats::{ScenarioBundle, Termination};
use crate::geometry::Point;
use crate::shape::clearance;
use crate::trajectory::{corridor_contains, Trajectory};
use crate::world::{ObjectId, StepReport, World, WorldSnapshot};

/// What a validator sees after every step.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    /// Number of completed steps.
    pub step: u64,
    pub world: &'a World,
    pub snapshot: &'a WorldSnapshot,
    pub report: &'a StepReport,
    pub ego: Option<&'a ObjectId>,
    /// True once the harness has seen every mission checkpoint visited.
    pub mission_complete: bool,
}

impl<'a> StepContext<'a> {
    /// The trajectory an object is currently following, if any.
    pub fn trajectory(&self, id: &ObjectId) -> Option<&'a Trajectory> {
        self.world.get(id)?.behavior()?.trajectory()
    }

    fn subject(&self, configured: &Option<ObjectId>) -> Option<&'a ObjectId> {
        match configured {
            Some(id) => self.snapshot.objects.iter().map(|o| &o.id).find(|o| *o == id),
            None => self.ego,
        }
    }
}

/// What a validator sees once the run is over.
#[derive(Debug, Clone, Copy)]
pub struct FinishContext<'a> {
    pub steps: u64,
    pub snapshot: &'a WorldSnapshot,
    pub mission_complete: bool,
}

/// A step hook that records violations and summarizes them as a verdict.
pub trait Validator: Send {
    fn name(&self) -> &str;

    /// Called after every step with the post-step state.
    fn on_step(&mut self, ctx: &StepContext<'_>) -> Vec<Violation>;

    /// Called once after the last step.
    fn on_finish(&mut self, _ctx: &FinishContext<'_>) -> Vec<Violation> {
        Vec::new()
    }

    /// True iff no violation was recorded so far.
    fn has_passed(&self) -> bool;

    /// The most extreme observed value of the watched quantity, if any.
    fn extreme(&self) -> Option<f64> {
        None
    }
}

/// Declarative validator settings as written in suite manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValidatorConfig {
    MinDistance {
        threshold: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subject: Option<String>,
    },
    CorridorKeeping {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subject: Option<String>,
    },
    /// Without `limit` the lane speed limit (capped by the mission) applies.
    SpeedLimit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subject: Option<String>,
    },
    Collision,
    CheckpointCompletion,
    Timeout {
        seconds: f64,
    },
}

impl ValidatorConfig {
    /// The six built-ins with the given thresholds.
    pub fn all_builtin(min_gap: f64, timeout: f64) -> Vec<ValidatorConfig> {
        vec![
            ValidatorConfig::MinDistance {
                threshold: min_gap,
                subject: None,
            },
            ValidatorConfig::CorridorKeeping { subject: None },
            ValidatorConfig::SpeedLimit {
                limit: None,
                subject: None,
            },
            ValidatorConfig::Collision,
            ValidatorConfig::CheckpointCompletion,
            ValidatorConfig::Timeout { seconds: timeout },
        ]
    }

    /// The built-ins that apply to this scenario. Mission checks are only
    /// included when the scenario ends on mission completion.
    pub fn applicable(bundle: &ScenarioBundle, min_gap: f64, timeout: f64) -> Vec<ValidatorConfig> {
        let mission_run = bundle.mission.is_some() && bundle.scenario.termination == Termination::MissionComplete;
        let has_limits = bundle.network.lanes().next().is_some() || bundle.mission.as_ref().is_some_and(|m| m.speed_cap.is_some());
        Self::all_builtin(min_gap, timeout)
            .into_iter()
            .filter(|c| match c {
                ValidatorConfig::SpeedLimit { .. } => has_limits,
                ValidatorConfig::CheckpointCompletion | ValidatorConfig::Timeout { .. } => mission_run,
                _ => true,
            })
            .collect()
    }

    pub fn build(&self, bundle: &ScenarioBundle) -> Result<Box<dyn Validator>, HarnessError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(HarnessError::Validator(format!("{name} must be > 0, got {v}")))
            }
        };
        let subject = |s: &Option<String>| -> Result<Option<ObjectId>, HarnessError> {
            match s {
                Some(id) if !bundle.scenario.objects.iter().any(|o| &o.id == id) => {
                    Err(HarnessError::Validator(format!("unknown subject `{id}`")))
                }
                other => Ok(other.as_ref().map(|s| ObjectId::new(s.clone()))),
            }
        };
        Ok(match self {
            ValidatorConfig::MinDistance { threshold, subject: s } => Box::new(MinDistance::new(
                positive("min_distance threshold", *threshold)?,
                subject(s)?,
            )),
            ValidatorConfig::CorridorKeeping { subject: s } => Box::new(CorridorKeeping::new(subject(s)?)),
            ValidatorConfig::SpeedLimit { limit, subject: s } => {
                let source = match limit {
                    Some(v) => LimitSource::Fixed(positive("speed limit", *v)?),
                    None => {
                        let lanes: Vec<(Vec<Point>, f64)> =
                            bundle.network.lanes().map(|l| (l.points(), l.speed_limit)).collect();
                        let cap = bundle.mission.as_ref().and_then(|m| m.speed_cap);
                        if lanes.is_empty() && cap.is_none() {
                            return Err(HarnessError::Validator(
                                "speed_limit without `limit` needs a route network or a mission speed cap".into(),
                            ));
                        }
                        LimitSource::Network { lanes, cap }
                    }
                };
                Box::new(SpeedLimit::new(source, subject(s)?))
            }
            ValidatorConfig::Collision => Box::new(Collision::default()),
            ValidatorConfig::CheckpointCompletion => {
                let tracker = MissionTracker::for_bundle(bundle).ok_or_else(|| {
                    HarnessError::Validator("checkpoint_completion needs a scenario with a mission".into())
                })?;
                Box::new(CheckpointCompletion::new(tracker))
            }
            ValidatorConfig::Timeout { seconds } => Box::new(Timeout::new(positive("timeout", *seconds)?)),
        })
    }
}

/// Keeps a minimum clearance between the subject and every other object.
#[derive(Debug, Clone)]
pub struct MinDistance {
    threshold: f64,
    subject: Option<ObjectId>,
    count: usize,
    min_seen: Option<f64>,
}

impl MinDistance {
    pub fn new(threshold: f64, subject: Option<ObjectId>) -> Self {
        Self {
            threshold,
            subject,
            count: 0,
            min_seen: None,
        }
    }
}

impl Validator for MinDistance {
    fn name(&self) -> &str {
        "min_distance"
    }

    fn on_step(&mut self, ctx: &StepContext<'_>) -> Vec<Violation> {
        let Some(id) = ctx.subject(&self.subject) else {
            return Vec::new();
        };
        let me = ctx.snapshot.get(id).expect("subject exists");
        let mut out = Vec::new();
        for other in ctx.snapshot.objects.iter().filter(|o| &o.id != id) {
            let gap = clearance((&me.pose, &me.shape), (&other.pose, &other.shape));
            self.min_seen = Some(self.min_seen.map_or(gap, |m| m.min(gap)));
            if gap < self.threshold {
                out.push(Violation::measured(
                    self.name(),
                    ctx,
                    vec![id.clone(), other.id.clone()],
                    "clearance",
                    gap,
                    "<",
                    self.threshold,
                    format!("`{id}` is {gap:.3} m from `{}`", other.id),
                ));
            }
        }
        self.count += out.len();
        out
    }

    fn has_passed(&self) -> bool {
        self.count == 0
    }

    fn extreme(&self) -> Option<f64> {
        self.min_seen
    }
}

/// Requires the subject's position to stay inside its own planned corridor.
#[derive(Debug, Clone)]
pub struct CorridorKeeping {
    subject: Option<ObjectId>,
    count: usize,
}

impl CorridorKeeping {
    pub fn new(subject: Option<ObjectId>) -> Self {
        Self { subject, count: 0 }
    }
}

impl Validator for CorridorKeeping {
    fn name(&self) -> &str {
        "corridor_keeping"
    }

    fn on_step(&mut self, ctx: &StepContext<'_>) -> Vec<Violation> {
        let Some(id) = ctx.subject(&self.subject) else {
            return Vec::new();
        };
        let Some(trajectory) = ctx.trajectory(id) else {
            return Vec::new();
        };
        let p = ctx.snapshot.get(id).expect("subject exists").pose.position();
        if corridor_contains(trajectory, p) {
            return Vec::new();
        }
        self.count += 1;
        vec![Violation::unmeasured(
            self.name(),
            ctx,
            vec![id.clone()],
            format!("`{id}` at ({:.3}, {:.3}) left its corridor", p.x, p.y),
        )]
    }

    fn has_passed(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone)]
pub enum LimitSource {
    Fixed(f64),
    /// Limit of the nearest lane, optionally capped.
    Network { lanes: Vec<(Vec<Point>, f64)>, cap: Option<f64> },
}

impl LimitSource {
    pub fn limit_at(&self, p: Point) -> Option<f64> {
        match self {
            LimitSource::Fixed(v) => Some(*v),
            LimitSource::Network { lanes, cap } => {
                let mut best: Option<(f64, f64)> = None;
                for (points, limit) in lanes {
                    for w in points.windows(2) {
                        let ab = w[1] - w[0];
                        let len2 = ab.dot(ab);
                        let t = if len2 == 0.0 { 0.0 } else { ((p - w[0]).dot(ab) / len2).clamp(0.0, 1.0) };
                        let d = p.distance(w[0] + ab * t);
                        // on shared junctions the more permissive lane applies
                        let closer = best.map_or(true, |(bd, bl)| d < bd || (d == bd && *limit > bl));
                        if closer {
                            best = Some((d, *limit));
                        }
                    }
                }
                match (best.map(|b| b.1), cap) {
                    (Some(l), Some(c)) => Some(l.min(*c)),
                    (l, c) => l.or(*c),
                }
            }
        }
    }
}

/// Flags the subject whenever it drives faster than the applicable limit.
#[derive(Debug, Clone)]
pub struct SpeedLimit {
    source: LimitSource,
    subject: Option<ObjectId>,
    count: usize,
    max_seen: Option<f64>,
}

impl SpeedLimit {
    pub fn new(source: LimitSource, subject: Option<ObjectId>) -> Self {
        Self {
            source,
            subject,
            count: 0,
            max_seen: None,
        }
    }
}

/// Speeds within this much of the limit are not flagged.
const SPEED_TOLERANCE: f64 = 1e-9;

impl Validator for SpeedLimit {
    fn name(&self) -> &str {
        "speed_limit"
    }

    fn on_step(&mut self, ctx: &StepContext<'_>) -> Vec<Violation> {
        let Some(id) = ctx.subject(&self.subject) else {
            return Vec::new();
        };
        let me = ctx.snapshot.get(id).expect("subject exists");
        self.max_seen = Some(self.max_seen.map_or(me.speed, |m| m.max(me.speed)));
        let Some(limit) = self.source.limit_at(me.pose.position()) else {
            return Vec::new();
        };
        if me.speed <= limit + SPEED_TOLERANCE {
            return Vec::new();
        }
        self.count += 1;
        vec![Violation::measured(
            self.name(),
            ctx,
            vec![id.clone()],
            "speed",
            me.speed,
            ">",
            limit,
            format!("`{id}` at {:.3} m/s exceeds {limit} m/s", me.speed),
        )]
    }

    fn has_passed(&self) -> bool {
        self.count == 0
    }

    fn extreme(&self) -> Option<f64> {
        self.max_seen
    }
}

/// Flags every overlap the world reports.
#[derive(Debug, Clone, Default)]
pub struct Collision {
    count: usize,
}

impl Validator for Collision {
    fn name(&self) -> &str {
        "collision"
    }

    fn on_step(&mut self, ctx: &StepContext<'_>) -> Vec<Violation> {
        let out: Vec<Violation> = ctx
            .report
            .collisions
            .iter()
            .map(|c| {
                Violation::measured(
                    "collision",
                    ctx,
                    vec![c.a.clone(), c.b.clone()],
                    "overlap",
                    c.depth,
                    ">",
                    0.0,
                    format!("`{}` and `{}` overlap by {:.3} m", c.a, c.b, c.depth),
                )
            })
            .collect();
        self.count += out.len();
        out
    }

    fn has_passed(&self) -> bool {
        self.count == 0
    }
}

/// Requires every mission checkpoint to be visited, in order, by the end.
#[derive(Debug, Clone)]
pub struct CheckpointCompletion {
    tracker: MissionTracker,
    count: usize,
}

impl CheckpointCompletion {
    pub fn new(tracker: MissionTracker) -> Self {
        Self { tracker, count: 0 }
    }
}

impl Validator for CheckpointCompletion {
    fn name(&self) -> &str {
        "checkpoint_completion"
    }

    fn on_step(&mut self, ctx: &StepContext<'_>) -> Vec<Violation> {
        if let Some(ego) = ctx.ego.and_then(|e| ctx.snapshot.get(e)) {
            self.tracker.update(ego.pose.position(), ctx.snapshot.clock);
        }
        Vec::new()
    }

    fn on_finish(&mut self, ctx: &FinishContext<'_>) -> Vec<Violation> {
        if self.tracker.is_complete() {
            return Vec::new();
        }
        self.count += 1;
        let (visited, total) = (self.tracker.visited(), self.tracker.total());
        vec![Violation {
            validator: self.name().into(),
            step: ctx.steps,
            clock: ctx.snapshot.clock,
            objects: Vec::new(),
            measure: Some(super::Measure {
                quantity: "checkpoints_visited".into(),
                value: visited as f64,
                relation: "<".into(),
                threshold: total as f64,
            }),
            message: format!("{visited} of {total} checkpoints visited"),
        }]
    }

    fn has_passed(&self) -> bool {
        self.count == 0
    }

    fn extreme(&self) -> Option<f64> {
        Some(self.tracker.visited() as f64)
    }
}

/// Fails a run whose mission is still open after a simulated-time budget.
#[derive(Debug, Clone)]
pub struct Timeout {
    seconds: f64,
    count: usize,
}

impl Timeout {
    pub fn new(seconds: f64) -> Self {
        Self { seconds, count: 0 }
    }
}

impl Validator for Timeout {
    fn name(&self) -> &str {
        "timeout"
    }

    fn on_step(&mut self, ctx: &StepContext<'_>) -> Vec<Violation> {
        let clock = ctx.snapshot.clock;
        if self.count > 0 || ctx.mission_complete || clock <= self.seconds + 1e-9 {
            return Vec::new();
        }
        self.count += 1;
        vec![Violation::measured(
            self.name(),
            ctx,
            Vec::new(),
            "clock",
            clock,
            ">",
            self.seconds,
            format!("mission still open after {} s", self.seconds),
        )]
    }

    fn has_passed(&self) -> bool {
        self.count == 0
    }
}
