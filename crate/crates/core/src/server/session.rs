use crate::behavior::{CommandHandle, CommandState};
use crate::closed_loop::{ClosedLoop, LoopConfig, PlanEvent};
use crate::factory::BuildError;
use crate::formats::{ObjectSpec, ScenarioBundle};
use crate::harness::{MissionTracker, StepContext, Validator, Violation, CONTRACT_VALIDATOR, PLANNING_VALIDATOR};
use crate::reasoner::Reasoner;
use crate::world::{ObjectId, WorldError};

use super::protocol::{
    HelloPayload, Inbound, ProtocolError, SnapshotPayload, WireObject, WireValidator,
};

/// Step size of interactive sessions.
pub const SESSION_DT: f64 = 0.02;

#[derive(Debug, Default, Clone)]
struct Flag {
    violations: usize,
    last: Option<String>,
}

enum Pending {
    Steer(CommandState),
    Spawn(Box<ObjectSpec>),
    Attach(ObjectId),
}

/// Transport-free core of an interactive session.
///
/// Commands are checked when they arrive and take effect at the next
/// step boundary, in arrival order. Pacing against the wall clock is the
/// caller's business: [`Session::tick`] advances exactly one step unless
/// the time scale is zero.
pub struct Session {
    scenario_id: String,
    cl: ClosedLoop,
    validators: Vec<Box<dyn Validator>>,
    flags: Vec<(String, Flag)>,
    tracker: Option<MissionTracker>,
    time_scale: f64,
    resume_scale: f64,
    steered: Option<ObjectId>,
    handle: Option<CommandHandle>,
    pending: Vec<Pending>,
    spawned: Vec<String>,
}

impl Session {
    pub fn new(
        bundle: &ScenarioBundle,
        reasoner: Option<Box<dyn Reasoner>>,
        validators: Vec<Box<dyn Validator>>,
        dt: f64,
    ) -> Result<Self, BuildError> {
        let cl = ClosedLoop::new(bundle, reasoner, LoopConfig::for_dt(dt))?;
        let mut flags: Vec<(String, Flag)> = vec![
            (CONTRACT_VALIDATOR.into(), Flag::default()),
            (PLANNING_VALIDATOR.into(), Flag::default()),
        ];
        flags.extend(validators.iter().map(|v| (v.name().to_owned(), Flag::default())));
        Ok(Self {
            scenario_id: bundle.scenario.id.clone(),
            cl,
            validators,
            flags,
            tracker: MissionTracker::for_bundle(bundle),
            time_scale: 1.0,
            resume_scale: 1.0,
            steered: None,
            handle: None,
            pending: Vec::new(),
            spawned: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.cl.config().dt
    }

    /// Simulated seconds per wall second; 0 means paused.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn closed_loop(&self) -> &ClosedLoop {
        &self.cl
    }

    pub fn hello(&self) -> HelloPayload {
        HelloPayload {
            scenario_id: self.scenario_id.clone(),
            dt: self.dt(),
            time_scale: self.time_scale,
            ego: self.cl.ego().map(|e| e.as_str().to_owned()),
        }
    }

    fn known(&self, id: &str) -> bool {
        self.cl.world().get(&ObjectId::new(id)).is_some() || self.spawned.iter().any(|s| s == id)
    }

    /// Checks a command and queues it for the next step boundary.
    /// Pause and time-scale changes apply immediately.
    pub fn handle(&mut self, msg: Inbound) -> Result<(), ProtocolError> {
        match msg {
            Inbound::Subscribe => {}
            Inbound::Steer(p) => {
                if self.steered.is_none() && !self.pending.iter().any(|c| matches!(c, Pending::Attach(_))) {
                    return Err(ProtocolError::NotSteering);
                }
                if !(p.accel.is_finite() && p.yaw_rate.is_finite()) {
                    return Err(ProtocolError::Rejected("steer values must be finite".into()));
                }
                self.pending.push(Pending::Steer(CommandState {
                    accel: p.accel,
                    yaw_rate: p.yaw_rate,
                }));
            }
            Inbound::Pause => {
                if self.time_scale > 0.0 {
                    self.resume_scale = self.time_scale;
                }
                self.time_scale = 0.0;
            }
            Inbound::Resume(p) => {
                let factor = p.factor.unwrap_or(self.resume_scale);
                if !(factor.is_finite() && factor > 0.0) {
                    return Err(ProtocolError::BadTimeScale(factor));
                }
                self.time_scale = factor;
            }
            Inbound::SetTimeScale(p) => {
                if !(p.factor.is_finite() && p.factor >= 0.0) {
                    return Err(ProtocolError::BadTimeScale(p.factor));
                }
                if p.factor == 0.0 && self.time_scale > 0.0 {
                    self.resume_scale = self.time_scale;
                }
                self.time_scale = p.factor;
            }
            Inbound::Spawn(p) => {
                if self.known(&p.object.id) {
                    return Err(ProtocolError::Rejected(format!("object `{}` already exists", p.object.id)));
                }
                self.spawned.push(p.object.id.clone());
                self.pending.push(Pending::Spawn(Box::new(p.object)));
            }
            Inbound::AttachSteering(p) => {
                if !self.known(&p.object_id) {
                    return Err(ProtocolError::UnknownObject(p.object_id));
                }
                self.pending.push(Pending::Attach(ObjectId::new(p.object_id)));
            }
        }
        Ok(())
    }

    /// Applies queued commands. Failures that only show up here (for
    /// instance a spawn that overlaps an invalid shape) are returned as
    /// messages for the log; the session keeps going.
    fn apply_pending(&mut self) -> Vec<String> {
        let mut problems = Vec::new();
        for cmd in std::mem::take(&mut self.pending) {
            match cmd {
                Pending::Steer(c) => {
                    if let Some(h) = &self.handle {
                        h.enqueue(c);
                    }
                }
                Pending::Spawn(spec) => {
                    if let Err(e) = self.cl.spawn(&spec) {
                        problems.push(format!("spawn `{}`: {e}", spec.id));
                    }
                }
                Pending::Attach(id) => match self.cl.attach_steering(&id) {
                    Ok(h) => {
                        self.handle = Some(h);
                        self.steered = Some(id);
                    }
                    Err(e) => problems.push(format!("cannot steer `{id}`: {e}")),
                },
            }
        }
        self.spawned.clear();
        problems
    }

    fn record(&mut self, violations: Vec<Violation>) {
        for v in violations {
            if let Some((_, flag)) = self.flags.iter_mut().find(|(n, _)| *n == v.validator) {
                flag.violations += 1;
                flag.last = Some(v.message);
            }
        }
    }

    /// Applies queued commands and, unless paused, advances one step.
    /// Returns deferred command failures, if any.
    pub fn tick(&mut self) -> Result<Vec<String>, WorldError> {
        let problems = self.apply_pending();
        if self.time_scale == 0.0 {
            return Ok(problems);
        }
        let st = self.cl.step()?;
        let snapshot = self.cl.world().snapshot();
        let ego = self.cl.ego().cloned();
        if let (Some(tr), Some(me)) = (self.tracker.as_mut(), ego.as_ref().and_then(|e| snapshot.get(e))) {
            tr.update(me.pose.position(), snapshot.clock);
        }
        let ctx = StepContext {
            step: st.step,
            world: self.cl.world(),
            snapshot: &snapshot,
            report: &st.report,
            ego: ego.as_ref(),
            mission_complete: self.tracker.as_ref().is_some_and(MissionTracker::is_complete),
        };
        let mut found = Vec::new();
        let egos: Vec<ObjectId> = ego.iter().cloned().collect();
        match &st.plan {
            Some(PlanEvent::Breach(b)) => found.push(Violation::unmeasured(CONTRACT_VALIDATOR, &ctx, egos, b.to_string())),
            Some(PlanEvent::Failed(e)) => found.push(Violation::unmeasured(PLANNING_VALIDATOR, &ctx, egos, e.to_string())),
            _ => {}
        }
        for v in self.validators.iter_mut() {
            found.extend(v.on_step(&ctx));
        }
        self.record(found);
        Ok(problems)
    }

    pub fn snapshot(&self) -> SnapshotPayload {
        let snap = self.cl.world().snapshot();
        SnapshotPayload {
            step: self.cl.steps(),
            clock: snap.clock,
            time_scale: self.time_scale,
            objects: snap
                .objects
                .iter()
                .map(|o| WireObject {
                    id: o.id.as_str().to_owned(),
                    role: o.role,
                    x: o.pose.x,
                    y: o.pose.y,
                    heading: o.pose.heading,
                    speed: o.speed,
                    shape: o.shape,
                })
                .collect(),
            trajectory: self.cl.current_plan().map(|t| t.gates().to_vec()),
            validators: self
                .flags
                .iter()
                .map(|(name, f)| WireValidator {
                    name: name.clone(),
                    passed: f.violations == 0,
                    violations: f.violations,
                    last: f.last.clone(),
                })
                .collect(),
            steered: self.steered.as_ref().map(|s| s.as_str().to_owned()),
        }
    }
}
