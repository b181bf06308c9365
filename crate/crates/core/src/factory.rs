//! Builds worlds and behaviors from scenario declarations.

use std::collections::HashMap;

use thiserror::Error;

use crate::behavior::{
    compose_trailer, BehaviorError, CommandBehavior, CommandHandle, HoldBehavior, MotionBehavior, RouteBehavior,
    TrajectoryBehavior,
};
use crate::formats::{BehaviorSpec, FormatError, ObjectSpec, RouteNetwork, ScenarioBundle};
use crate::geometry::Pose;
use crate::trajectory::InterpolationMode;
use crate::world::{ObjectId, ObjectState, SimObject, World, WorldError};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("object `{id}`: {source}")]
    Behavior {
        id: String,
        #[source]
        source: BehaviorError,
    },
    #[error("object `{id}` references unknown route `{lane}`")]
    UnknownRoute { id: String, lane: String },
    #[error("object `{id}`: trailer leader `{leader}` not found")]
    UnknownLeader { id: String, leader: String },
}

/// A freshly built world plus the handles the caller needs to drive it.
#[derive(Debug)]
pub struct WorldBuild {
    pub world: World,
    pub ego: Option<ObjectId>,
    /// Mailboxes of objects declared with a `command` behavior.
    pub command_handles: HashMap<ObjectId, CommandHandle>,
}

/// Context shared by all behaviors built for one scenario.
#[derive(Debug, Clone, Copy)]
pub struct BehaviorDefaults<'a> {
    pub network: &'a RouteNetwork,
    pub mode: InterpolationMode,
    pub resolution: usize,
}

/// Builds one object's behavior. Trailers are not handled here since they
/// need their leader; see [`create_world`].
pub fn build_behavior(
    spec: &ObjectSpec,
    behavior: &BehaviorSpec,
    defaults: BehaviorDefaults<'_>,
) -> Result<(Box<dyn MotionBehavior>, Option<CommandHandle>), BuildError> {
    let wrap = |source| BuildError::Behavior {
        id: spec.id.clone(),
        source,
    };
    Ok(match behavior {
        BehaviorSpec::Reasoner | BehaviorSpec::Hold | BehaviorSpec::Trailer { .. } => (Box::new(HoldBehavior), None),
        BehaviorSpec::Route { lane, speed, cyclic } => {
            let lane = defaults.network.lane(lane).ok_or_else(|| BuildError::UnknownRoute {
                id: spec.id.clone(),
                lane: lane.clone(),
            })?;
            let route = RouteBehavior::new(&lane.points(), *cyclic, *speed)
                .map_err(wrap)?
                .starting_near(spec.pose.position());
            (Box::new(route), None)
        }
        BehaviorSpec::Trajectory { gates, speed, mode } => {
            let b = TrajectoryBehavior::new(gates.clone(), mode.unwrap_or(defaults.mode), defaults.resolution, *speed)
                .map_err(wrap)?;
            (Box::new(b), None)
        }
        BehaviorSpec::Command => {
            let (b, handle) = CommandBehavior::new();
            (Box::new(b), Some(handle))
        }
    })
}

pub fn object_state(spec: &ObjectSpec) -> ObjectState {
    ObjectState {
        id: ObjectId::new(spec.id.clone()),
        role: spec.role,
        shape: spec.shape,
        pose: Pose::new(spec.pose.x, spec.pose.y, spec.pose.heading),
        speed: spec.speed,
    }
}

/// Instantiates every declared object with its pose, shape and behavior.
///
/// The ego starts with a hold behavior; the harness swaps in the reasoner's
/// trajectories once it starts planning.
pub fn create_world(bundle: &ScenarioBundle) -> Result<WorldBuild, BuildError> {
    let scenario = &bundle.scenario;
    scenario.validate()?;
    scenario.link(&bundle.network)?;
    let defaults = BehaviorDefaults {
        network: &bundle.network,
        mode: scenario.interpolation,
        resolution: scenario.resolution,
    };

    let mut behaviors: Vec<Option<Box<dyn MotionBehavior>>> = Vec::with_capacity(scenario.objects.len());
    let mut command_handles = HashMap::new();
    for spec in &scenario.objects {
        match spec.effective_behavior() {
            None => behaviors.push(None),
            Some(b) => {
                let (behavior, handle) = build_behavior(spec, &b, defaults)?;
                if let Some(h) = handle {
                    command_handles.insert(ObjectId::new(spec.id.clone()), h);
                }
                behaviors.push(Some(behavior));
            }
        }
    }

    let index: HashMap<&str, usize> = scenario
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.id.as_str(), i))
        .collect();
    for (i, spec) in scenario.objects.iter().enumerate() {
        let Some(BehaviorSpec::Trailer { leader, offset }) = &spec.behavior else {
            continue;
        };
        let &li = index.get(leader.as_str()).ok_or_else(|| BuildError::UnknownLeader {
            id: spec.id.clone(),
            leader: leader.clone(),
        })?;
        let leader_behavior = behaviors[li].take().expect("leader validated as dynamic");
        let leader_spec = &scenario.objects[li];
        let pair = compose_trailer(
            leader_behavior,
            ObjectId::new(leader.clone()),
            object_state(leader_spec).pose,
            *offset,
        )
        .map_err(|source| BuildError::Behavior {
            id: spec.id.clone(),
            source,
        })?;
        behaviors[li] = Some(pair.leader);
        behaviors[i] = Some(Box::new(pair.trailer));
    }

    let mut world = World::new(scenario.update_mode, scenario.seed);
    let mut ego = None;
    for (spec, behavior) in scenario.objects.iter().zip(behaviors) {
        let state = object_state(spec);
        if spec.role == crate::world::Role::Ego {
            ego = Some(state.id.clone());
        }
        world.add_object(SimObject::new(state, behavior)?)?;
    }
    Ok(WorldBuild {
        world,
        ego,
        command_handles,
    })
}
