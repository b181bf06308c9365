use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::json::{canonical_json, from_str_with_path};
use super::{parse_mission, parse_route_network, read_file, FormatError, MissionFile, RouteNetwork};
use crate::geometry::Pose;
use crate::sensor::{DegradationConfig, SensorConfig};
use crate::shape::ObjectShape;
use crate::trajectory::{InterpolationMode, Trajectory, DEFAULT_RESOLUTION};
use crate::world::{Role, UpdateMode};

pub const DEFAULT_LANE_WIDTH: f64 = 3.5;

fn default_lane_width() -> f64 {
    DEFAULT_LANE_WIDTH
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

/// How a scenario run ends successfully.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Termination {
    /// Every mission checkpoint visited in order.
    #[default]
    MissionComplete,
    /// The run reaches this much simulated time.
    Duration { seconds: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BehaviorSpec {
    /// Driven by the reasoner under test (ego only).
    Reasoner,
    Hold,
    Route {
        lane: String,
        speed: f64,
        #[serde(default)]
        cyclic: bool,
    },
    Trajectory {
        gates: Trajectory,
        speed: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<InterpolationMode>,
    },
    /// Steered through the interactive protocol.
    Command,
    Trailer {
        leader: String,
        offset: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub role: Role,
    pub shape: ObjectShape,
    pub pose: Pose,
    #[serde(default)]
    pub speed: f64,
    /// Omitted: ego defaults to `reasoner`, traffic to `hold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub behavior: Option<BehaviorSpec>,
}

impl ObjectSpec {
    pub fn effective_behavior(&self) -> Option<BehaviorSpec> {
        match (&self.behavior, self.role) {
            (_, Role::StaticObstacle) => None,
            (Some(b), _) => Some(b.clone()),
            (None, Role::Ego) => Some(BehaviorSpec::Reasoner),
            (None, Role::Traffic) => Some(BehaviorSpec::Hold),
        }
    }

    pub(crate) fn validate(&self, path: &str) -> Result<(), FormatError> {
        if self.id.is_empty() || self.id.chars().any(char::is_whitespace) {
            return Err(FormatError::invalid(format!("{path}.id"), "ids must be non-empty without whitespace"));
        }
        self.shape
            .validate()
            .map_err(|m| FormatError::invalid(format!("{path}.shape"), m))?;
        if !self.pose.is_finite() {
            return Err(FormatError::invalid(format!("{path}.pose"), "pose must be finite"));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(FormatError::invalid(format!("{path}.speed"), "speed must be finite and >= 0"));
        }
        if self.role == Role::StaticObstacle && self.behavior.is_some() {
            return Err(FormatError::invalid(
                format!("{path}.behavior"),
                "static obstacles cannot have a behavior",
            ));
        }
        let bpath = format!("{path}.behavior");
        match &self.behavior {
            Some(BehaviorSpec::Reasoner) if self.role != Role::Ego => {
                Err(FormatError::invalid(bpath, "only the ego can be driven by the reasoner"))
            }
            Some(BehaviorSpec::Route { speed, .. }) | Some(BehaviorSpec::Trajectory { speed, .. })
                if !(speed.is_finite() && *speed >= 0.0) =>
            {
                Err(FormatError::invalid(format!("{bpath}.speed"), "speed must be finite and >= 0"))
            }
            Some(BehaviorSpec::Trailer { offset, .. }) if !(offset.is_finite() && *offset > 0.0) => {
                Err(FormatError::invalid(format!("{bpath}.offset"), "offset must be > 0"))
            }
            _ => Ok(()),
        }
    }
}

/// A test drive definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub update_mode: UpdateMode,
    /// Width of the corridor the reasoner plans, meters.
    #[serde(default = "default_lane_width")]
    pub lane_width: f64,
    /// Route network file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route_network: Option<String>,
    /// Mission file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mission: Option<String>,
    #[serde(default)]
    pub interpolation: InterpolationMode,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degradation: Option<DegradationConfig>,
    pub objects: Vec<ObjectSpec>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), FormatError> {
        if self.id.is_empty() {
            return Err(FormatError::invalid("id", "scenario id must not be empty"));
        }
        if !(self.lane_width.is_finite() && self.lane_width > 0.0) {
            return Err(FormatError::invalid("lane_width", "must be finite and > 0"));
        }
        if self.resolution < 2 {
            return Err(FormatError::invalid("resolution", "must be at least 2"));
        }
        if let Termination::Duration { seconds } = self.termination {
            if !(seconds.is_finite() && seconds > 0.0) {
                return Err(FormatError::invalid("termination.seconds", "must be finite and > 0"));
            }
        }
        if let Some(s) = &self.sensor {
            s.validate().map_err(|e| FormatError::invalid("sensor", e.to_string()))?;
        }
        if let Some(d) = &self.degradation {
            d.validate().map_err(|e| FormatError::invalid("degradation", e.to_string()))?;
        }
        let mut seen = HashSet::new();
        let mut egos = 0;
        for (i, o) in self.objects.iter().enumerate() {
            let path = format!("objects[{i}]");
            o.validate(&path)?;
            if !seen.insert(o.id.as_str()) {
                return Err(FormatError::invalid(format!("{path}.id"), format!("duplicate object id `{}`", o.id)));
            }
            if o.role == Role::Ego {
                egos += 1;
                if egos > 1 {
                    return Err(FormatError::invalid(format!("{path}.role"), "at most one ego per scenario"));
                }
            }
        }
        let roles: HashMap<&str, Role> = self.objects.iter().map(|o| (o.id.as_str(), o.role)).collect();
        for (i, o) in self.objects.iter().enumerate() {
            if let Some(BehaviorSpec::Trailer { leader, .. }) = &o.behavior {
                match roles.get(leader.as_str()) {
                    None => {
                        return Err(FormatError::invalid(
                            format!("objects[{i}].behavior.leader"),
                            format!("unknown leader `{leader}`"),
                        ))
                    }
                    Some(Role::StaticObstacle) => {
                        return Err(FormatError::invalid(
                            format!("objects[{i}].behavior.leader"),
                            format!("leader `{leader}` is static"),
                        ))
                    }
                    Some(_) if leader == &o.id => {
                        return Err(FormatError::invalid(
                            format!("objects[{i}].behavior.leader"),
                            "an object cannot tow itself",
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn ego(&self) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.role == Role::Ego)
    }

    /// Checks lane references against a network.
    pub fn link(&self, network: &RouteNetwork) -> Result<(), FormatError> {
        for (i, o) in self.objects.iter().enumerate() {
            if let Some(BehaviorSpec::Route { lane, .. }) = &o.behavior {
                if network.lane(lane).is_none() {
                    return Err(FormatError::invalid(
                        format!("objects[{i}].behavior.lane"),
                        format!("unknown route lane `{lane}`"),
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, FormatError> {
    let s: Scenario = from_str_with_path(text)?;
    s.validate()?;
    Ok(s)
}

pub fn serialize_scenario(scenario: &Scenario) -> String {
    canonical_json(scenario)
}

/// A scenario with its route network and mission loaded and linked.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBundle {
    pub scenario: Scenario,
    pub network: RouteNetwork,
    pub mission: Option<MissionFile>,
    pub source: Option<PathBuf>,
}

impl ScenarioBundle {
    pub fn new(scenario: Scenario, network: RouteNetwork, mission: Option<MissionFile>) -> Result<Self, FormatError> {
        scenario.validate()?;
        scenario.link(&network)?;
        if let Some(m) = &mission {
            m.validate()?;
            m.link(&network)?;
        }
        Ok(Self {
            scenario,
            network,
            mission,
            source: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self
    }
}

/// Reads a scenario file plus the files it references.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioBundle, FormatError> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let scenario = parse_scenario(&text).map_err(|e| e.in_file(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let network = match &scenario.route_network {
        Some(rel) => {
            let p = base.join(rel);
            parse_route_network(&read_file(&p)?).map_err(|e| FormatError::from(e).in_file(&p))?
        }
        None => RouteNetwork::default(),
    };
    let mission = match &scenario.mission {
        Some(rel) => {
            let p = base.join(rel);
            Some(parse_mission(&read_file(&p)?).map_err(|e| e.in_file(&p))?)
        }
        None => None,
    };
    let mut bundle = ScenarioBundle::new(scenario, network, mission).map_err(|e| e.in_file(path))?;
    bundle.source = Some(path.to_owned());
    Ok(bundle)
}
