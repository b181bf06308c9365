//! The world model: simulator objects, their behaviors and the virtual clock.
//!
//! Time only moves when [`World::step`] is called; nothing in the simulation
//! consults the wall clock. Objects are updated either sequentially in
//! insertion order (each behavior sees its predecessors' new states) or in
//! copy mode, where every behavior reads the same pre-step snapshot and the
//! results are committed together.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{Motion, MotionBehavior};
use crate::canonical::write_fmt6;
use crate::geometry::Pose;
use crate::shape::{overlap_depth, ObjectShape};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ego,
    Traffic,
    StaticObstacle,
}

impl Role {
    pub fn is_dynamic(self) -> bool {
        !matches!(self, Role::StaticObstacle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    #[default]
    Sequential,
    Copy,
}

/// Plain-data state of one object; what snapshots and views carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: ObjectId,
    pub role: Role,
    pub shape: ObjectShape,
    pub pose: Pose,
    pub speed: f64,
}

pub struct SimObject {
    state: ObjectState,
    behavior: Option<Box<dyn MotionBehavior>>,
}

impl fmt::Debug for SimObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimObject")
            .field("state", &self.state)
            .field("behavior", &self.behavior.as_ref().map(|b| b.name()))
            .finish()
    }
}

impl SimObject {
    /// Static obstacles pass `None`; every dynamic object needs a behavior.
    pub fn new(state: ObjectState, behavior: Option<Box<dyn MotionBehavior>>) -> Result<Self, WorldError> {
        state
            .shape
            .validate()
            .map_err(|reason| WorldError::InvalidObject { id: state.id.clone(), reason })?;
        if !state.pose.is_finite() || !state.speed.is_finite() || state.speed < 0.0 {
            return Err(WorldError::InvalidObject {
                id: state.id.clone(),
                reason: "pose must be finite and speed >= 0".into(),
            });
        }
        match (state.role.is_dynamic(), behavior.is_some()) {
            (false, true) => Err(WorldError::StaticObject(state.id)),
            (true, false) => Err(WorldError::MissingBehavior(state.id)),
            _ => Ok(Self {
                state: ObjectState {
                    pose: Pose::new(state.pose.x, state.pose.y, state.pose.heading),
                    ..state
                },
                behavior,
            }),
        }
    }

    pub fn state(&self) -> &ObjectState {
        &self.state
    }

    pub fn id(&self) -> &ObjectId {
        &self.state.id
    }

    pub fn behavior(&self) -> Option<&dyn MotionBehavior> {
        self.behavior.as_deref()
    }
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("duplicate object id `{0}`")]
    DuplicateId(ObjectId),
    #[error("unknown object `{0}`")]
    UnknownObject(ObjectId),
    #[error("object `{0}` is static and cannot carry a behavior")]
    StaticObject(ObjectId),
    #[error("dynamic object `{0}` has no behavior")]
    MissingBehavior(ObjectId),
    #[error("invalid object `{id}`: {reason}")]
    InvalidObject { id: ObjectId, reason: String },
    #[error("step size must be finite and >= 0, got {0}")]
    InvalidStep(f64),
}

/// Immutable copy of the world at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub clock: f64,
    pub objects: Vec<ObjectState>,
}

impl WorldSnapshot {
    pub fn get(&self, id: &ObjectId) -> Option<&ObjectState> {
        self.objects.iter().find(|o| &o.id == id)
    }

    /// Canonical text: a clock line, then `id x y heading speed` per object in
    /// insertion order, all numbers at six fractional digits.
    pub fn canonical(&self) -> String {
        self.canonical_of(self.objects.iter())
    }

    /// Like [`canonical`](Self::canonical) but with objects sorted by id.
    pub fn canonical_sorted(&self) -> String {
        let mut objs: Vec<_> = self.objects.iter().collect();
        objs.sort_by(|a, b| a.id.cmp(&b.id));
        self.canonical_of(objs.into_iter())
    }

    fn canonical_of<'a>(&self, objs: impl Iterator<Item = &'a ObjectState>) -> String {
        let mut out = String::new();
        write_fmt6(&mut out, self.clock);
        out.push('\n');
        for o in objs {
            out.push_str(o.id.as_str());
            for v in [o.pose.x, o.pose.y, o.pose.heading, o.speed] {
                out.push(' ');
                write_fmt6(&mut out, v);
            }
            out.push('\n');
        }
        out
    }
}

/// An overlap between two objects; the pair is unordered (ids sorted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub a: ObjectId,
    pub b: ObjectId,
    pub depth: f64,
}

impl CollisionEvent {
    pub fn involves(&self, id: &ObjectId) -> bool {
        &self.a == id || &self.b == id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub dt: f64,
    pub clock_before: f64,
    pub clock_after: f64,
    pub moved: Vec<ObjectId>,
    pub collisions: Vec<CollisionEvent>,
}

pub struct World {
    objects: Vec<SimObject>,
    index: HashMap<ObjectId, usize>,
    clock: f64,
    mode: UpdateMode,
    seed: u64,
}

impl fmt::Debug for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("World")
            .field("clock", &self.clock)
            .field("mode", &self.mode)
            .field("seed", &self.seed)
            .field("objects", &self.objects)
            .finish()
    }
}

impl World {
    pub fn new(mode: UpdateMode, seed: u64) -> Self {
        Self {
            objects: Vec::new(),
            index: HashMap::new(),
            clock: 0.0,
            mode,
            seed,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn mode(&self) -> UpdateMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn objects(&self) -> impl Iterator<Item = &SimObject> {
        self.objects.iter()
    }

    pub fn get(&self, id: &ObjectId) -> Option<&SimObject> {
        self.index.get(id).map(|&i| &self.objects[i])
    }

    /// Appends an object; its position in the update order is last.
    pub fn add_object(&mut self, object: SimObject) -> Result<(), WorldError> {
        if self.index.contains_key(object.id()) {
            return Err(WorldError::DuplicateId(object.id().clone()));
        }
        self.index.insert(object.id().clone(), self.objects.len());
        self.objects.push(object);
        Ok(())
    }

    /// Replaces a dynamic object's behavior, returning the displaced one.
    pub fn set_behavior(
        &mut self,
        id: &ObjectId,
        behavior: Box<dyn MotionBehavior>,
    ) -> Result<Box<dyn MotionBehavior>, WorldError> {
        let &i = self.index.get(id).ok_or_else(|| WorldError::UnknownObject(id.clone()))?;
        let obj = &mut self.objects[i];
        if !obj.state.role.is_dynamic() {
            return Err(WorldError::StaticObject(id.clone()));
        }
        Ok(obj
            .behavior
            .replace(behavior)
            .expect("dynamic objects always carry a behavior"))
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            clock: self.clock,
            objects: self.objects.iter().map(|o| o.state.clone()).collect(),
        }
    }

    /// Advances every dynamic object by `dt` seconds.
    pub fn step(&mut self, dt: f64) -> Result<StepReport, WorldError> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(WorldError::InvalidStep(dt));
        }
        let clock_before = self.clock;
        let mut moved = Vec::new();

        if dt > 0.0 {
            let before = self.snapshot();
            match self.mode {
                UpdateMode::Sequential => {
                    let mut working = before;
                    for (i, obj) in self.objects.iter_mut().enumerate() {
                        let Some(behavior) = obj.behavior.as_mut() else {
                            continue;
                        };
                        let motion = behavior.advance(&working.objects[i], &working, dt);
                        if apply_motion(&mut obj.state, motion) {
                            moved.push(obj.state.id.clone());
                        }
                        working.objects[i] = obj.state.clone();
                    }
                }
                UpdateMode::Copy => {
                    let motions: Vec<Option<Motion>> = self
                        .objects
                        .iter_mut()
                        .enumerate()
                        .map(|(i, obj)| {
                            obj.behavior
                                .as_mut()
                                .map(|b| b.advance(&before.objects[i], &before, dt))
                        })
                        .collect();
                    for (obj, motion) in self.objects.iter_mut().zip(motions) {
                        if let Some(m) = motion {
                            if apply_motion(&mut obj.state, m) {
                                moved.push(obj.state.id.clone());
                            }
                        }
                    }
                }
            }
            self.clock += dt;
        }

        Ok(StepReport {
            dt,
            clock_before,
            clock_after: self.clock,
            moved,
            collisions: self.collisions(),
        })
    }

    /// All overlapping pairs at the current poses.
    pub fn collisions(&self) -> Vec<CollisionEvent> {
        let mut events = Vec::new();
        for (i, a) in self.objects.iter().enumerate() {
            for b in &self.objects[i + 1..] {
                let (sa, sb) = (&a.state, &b.state);
                if let Some(depth) = overlap_depth((&sa.pose, &sa.shape), (&sb.pose, &sb.shape)) {
                    let (a, b) = if sa.id <= sb.id { (&sa.id, &sb.id) } else { (&sb.id, &sa.id) };
                    events.push(CollisionEvent {
                        a: a.clone(),
                        b: b.clone(),
                        depth,
                    });
                }
            }
        }
        events
    }
}

/// Writes a behavior's output into the object; returns whether the pose changed.
/// Non-finite output is ignored so a faulty behavior cannot poison the world.
fn apply_motion(state: &mut ObjectState, motion: Motion) -> bool {
    if !motion.pose.is_finite() || !motion.speed.is_finite() {
        return false;
    }
    let pose = Pose::new(motion.pose.x, motion.pose.y, motion.pose.heading);
    let changed = pose != state.pose;
    state.pose = pose;
    state.speed = motion.speed.max(0.0);
    changed
}
