//! Reasoner-in-the-loop stepping shared by the harness and the server.

use std::collections::{HashMap, HashSet};

use crate::behavior::{CommandBehavior, CommandHandle, MotionBehavior, TrajectoryBehavior};
use crate::factory::{build_behavior, create_world, object_state, BehaviorDefaults, BuildError};
use crate::formats::{BehaviorSpec, MissionFile, ObjectSpec, RouteNetwork, ScenarioBundle};
use crate::reasoner::{check_contract, ContractBreach, PlanError, PlanRequest, Reasoner};
use crate::sensor::{degrade, extract, DegradationConfig, SensorConfig};
use crate::trajectory::{InterpolationMode, Trajectory};
use crate::world::{ObjectId, SimObject, StepReport, World, WorldError};

/// Default time between two plans.
pub const REPLAN_PERIOD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub dt: f64,
    /// Plan before every `replan_every`-th step.
    pub replan_every: u64,
}

impl LoopConfig {
    /// Replans at [`REPLAN_PERIOD`] for the given step size.
    pub fn for_dt(dt: f64) -> Self {
        let k = (REPLAN_PERIOD / dt).round();
        Self {
            dt,
            replan_every: if k.is_finite() && k >= 1.0 { k as u64 } else { 1 },
        }
    }
}

/// What happened when the reasoner was consulted.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanEvent {
    Installed,
    Breach(ContractBreach),
    Failed(PlanError),
}

#[derive(Debug, Clone)]
pub struct LoopStep {
    /// Number of completed steps, counting this one.
    pub step: u64,
    pub report: StepReport,
    pub plan: Option<PlanEvent>,
}

/// A world plus the reasoner driving its ego.
pub struct ClosedLoop {
    world: World,
    ego: Option<ObjectId>,
    reasoner: Option<Box<dyn Reasoner>>,
    network: RouteNetwork,
    mission: Option<MissionFile>,
    sensor: SensorConfig,
    degradation: Option<DegradationConfig>,
    lane_width: f64,
    mode: InterpolationMode,
    resolution: usize,
    config: LoopConfig,
    steps: u64,
    plan: Option<Trajectory>,
    command_handles: HashMap<ObjectId, CommandHandle>,
    steered: HashSet<ObjectId>,
}

impl std::fmt::Debug for ClosedLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedLoop")
            .field("world", &self.world)
            .field("ego", &self.ego)
            .field("reasoner", &self.reasoner.as_ref().map(|r| r.name().to_owned()))
            .field("steps", &self.steps)
            .finish_non_exhaustive()
    }
}

impl ClosedLoop {
    /// Builds the scenario's world. Without a reasoner (or without a
    /// mission) the ego keeps its hold behavior.
    pub fn new(bundle: &ScenarioBundle, reasoner: Option<Box<dyn Reasoner>>, config: LoopConfig) -> Result<Self, BuildError> {
        let built = create_world(bundle)?;
        let mut reasoner = reasoner;
        if let Some(r) = reasoner.as_mut() {
            r.reset();
        }
        let s = &bundle.scenario;
        Ok(Self {
            world: built.world,
            ego: built.ego,
            reasoner,
            network: bundle.network.clone(),
            mission: bundle.mission.clone(),
            sensor: s.sensor.unwrap_or_default(),
            degradation: s.degradation.clone(),
            lane_width: s.lane_width,
            mode: s.interpolation,
            resolution: s.resolution,
            config,
            steps: 0,
            plan: None,
            command_handles: built.command_handles,
            steered: HashSet::new(),
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn ego(&self) -> Option<&ObjectId> {
        self.ego.as_ref()
    }

    pub fn config(&self) -> LoopConfig {
        self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn network(&self) -> &RouteNetwork {
        &self.network
    }

    pub fn mission(&self) -> Option<&MissionFile> {
        self.mission.as_ref()
    }

    /// The trajectory the ego currently follows.
    pub fn current_plan(&self) -> Option<&Trajectory> {
        self.plan.as_ref()
    }

    pub fn reasoner_name(&self) -> Option<&str> {
        self.reasoner.as_ref().map(|r| r.name())
    }

    pub fn command_handle(&self, id: &ObjectId) -> Option<&CommandHandle> {
        self.command_handles.get(id)
    }

    /// Replaces an object's behavior with keyboard-style steering. The
    /// reasoner stops planning for it.
    pub fn attach_steering(&mut self, id: &ObjectId) -> Result<CommandHandle, WorldError> {
        if let Some(h) = self.command_handles.get(id) {
            return Ok(h.clone());
        }
        let (behavior, handle) = CommandBehavior::new();
        self.world.set_behavior(id, Box::new(behavior))?;
        self.command_handles.insert(id.clone(), handle.clone());
        self.steered.insert(id.clone());
        Ok(handle)
    }

    /// Adds an object at the next step boundary. Reasoner-driven spawns
    /// are refused since there is only one ego.
    pub fn spawn(&mut self, spec: &ObjectSpec) -> Result<(), BuildError> {
        let behavior = match spec.effective_behavior() {
            None => None,
            Some(BehaviorSpec::Trailer { .. }) | Some(BehaviorSpec::Reasoner) => {
                return Err(BuildError::World(WorldError::InvalidObject {
                    id: ObjectId::new(spec.id.clone()),
                    reason: "spawned objects cannot use reasoner or trailer behaviors".into(),
                }))
            }
            Some(b) => {
                let defaults = BehaviorDefaults {
                    network: &self.network,
                    mode: self.mode,
                    resolution: self.resolution,
                };
                let (behavior, handle) = build_behavior(spec, &b, defaults)?;
                if let Some(h) = handle {
                    self.command_handles.insert(ObjectId::new(spec.id.clone()), h);
                }
                Some(behavior)
            }
        };
        self.world.add_object(SimObject::new(object_state(spec), behavior)?)?;
        Ok(())
    }

    fn planning_enabled(&self) -> bool {
        self.reasoner.is_some()
            && self.mission.is_some()
            && self.ego.as_ref().is_some_and(|e| !self.steered.contains(e))
    }

    fn replan(&mut self) -> PlanEvent {
        let ego = self.ego.clone().expect("planning requires an ego");
        let snapshot = self.world.snapshot();
        let me = snapshot.get(&ego).expect("ego is in the world").clone();
        let mut view = match extract(&snapshot, &ego, &self.sensor) {
            Ok(v) => v,
            Err(e) => return PlanEvent::Failed(PlanError::Other(e.to_string())),
        };
        if let Some(d) = &self.degradation {
            view = match degrade(&view, d, self.world.seed()) {
                Ok(v) => v,
                Err(e) => return PlanEvent::Failed(PlanError::Other(e.to_string())),
            };
        }
        let request = PlanRequest {
            view: &view,
            mission: self.mission.as_ref().expect("planning requires a mission"),
            network: &self.network,
            pose: me.pose,
            speed: me.speed,
            shape: me.shape,
            lane_width: self.lane_width,
            clock: snapshot.clock,
        };
        let reasoner = self.reasoner.as_mut().expect("planning requires a reasoner");
        let trajectory = match reasoner.plan(&request) {
            Ok(t) => t,
            Err(e) => return PlanEvent::Failed(e),
        };
        if let Err(breach) = check_contract(&trajectory, &me.pose) {
            return PlanEvent::Breach(breach);
        }
        let behavior = match TrajectoryBehavior::new(trajectory.clone(), self.mode, self.resolution, me.speed) {
            Ok(b) => b.starting_near(me.pose.position()),
            Err(e) => return PlanEvent::Breach(ContractBreach::Unfollowable(e.to_string())),
        };
        let boxed: Box<dyn MotionBehavior> = Box::new(behavior);
        self.world.set_behavior(&ego, boxed).expect("ego is dynamic");
        self.plan = Some(trajectory);
        PlanEvent::Installed
    }

    /// Plans if a replan is due, then advances the world by one step.
    pub fn step(&mut self) -> Result<LoopStep, WorldError> {
        let plan = (self.planning_enabled() && self.steps % self.config.replan_every == 0).then(|| self.replan());
        let report = self.world.step(self.config.dt)?;
        self.steps += 1;
        Ok(LoopStep {
            step: self.steps,
            report,
            plan,
        })
    }
}
