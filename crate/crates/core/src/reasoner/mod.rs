//! The pluggable driving reasoner and a baseline implementation.
//!
//! A [`Reasoner`] turns a sensor view plus mission into a string of pearls.
//! The closed loop invokes it at replan boundaries, checks the returned
//! trajectory with [`check_contract`], and hands it to the ego's trajectory
//! behavior.

mod baseline;
mod route;

pub use baseline::{BaselineConfig, BaselineReasoner};
pub use route::{RouteGraph, RoutePath};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::formats::{MissionFile, RouteNetwork};
use crate::geometry::Pose;
use crate::sensor::ViewExtract;
use crate::shape::ObjectShape;
use crate::trajectory::{corridor_contains, GeometryError, Trajectory};

/// Everything a reasoner may look at when planning.
#[derive(Debug, Clone, Copy)]
pub struct PlanRequest<'a> {
    pub view: &'a ViewExtract,
    pub mission: &'a MissionFile,
    pub network: &'a RouteNetwork,
    pub pose: Pose,
    pub speed: f64,
    pub shape: ObjectShape,
    pub lane_width: f64,
    pub clock: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("unknown checkpoint `{0}`")]
    UnknownCheckpoint(String),
    #[error("mission infeasible: no route to checkpoint `{0}`")]
    MissionInfeasible(String),
    #[error("vehicle is not on any lane of the route network")]
    OffNetwork,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Other(String),
}

/// The system under test.
///
/// Implementations may keep internal memory (visited checkpoints, caches)
/// but must not touch anything else; the same inputs in the same order must
/// give the same plans.
pub trait Reasoner: Send {
    fn name(&self) -> &str;

    fn plan(&mut self, request: &PlanRequest<'_>) -> Result<Trajectory, PlanError>;

    /// Forgets per-run memory. Called before every run.
    fn reset(&mut self) {}
}

impl fmt::Debug for dyn Reasoner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Reasoner({})", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractBreach {
    #[error("trajectory has {0} gates, at least 2 required")]
    TooFewGates(usize),
    #[error("corridor does not contain the vehicle at ({x}, {y})")]
    NotStraddling { x: f64, y: f64 },
    #[error("trajectory cannot be followed: {0}")]
    Unfollowable(String),
}

/// Checks the invariants every planned trajectory must satisfy.
pub fn check_contract(trajectory: &Trajectory, pose: &Pose) -> Result<(), ContractBreach> {
    if trajectory.len() < 2 {
        return Err(ContractBreach::TooFewGates(trajectory.len()));
    }
    if !corridor_contains(trajectory, pose.position()) {
        return Err(ContractBreach::NotStraddling { x: pose.x, y: pose.y });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("unknown reasoner `{0}`")]
    UnknownKind(String),
    #[error("reasoner parameter `{0}` is malformed, expected key=value")]
    Malformed(String),
    #[error("unknown parameter `{key}` for reasoner `{kind}`")]
    UnknownParameter { kind: String, key: String },
    #[error("parameter `{key}`: {message}")]
    BadValue { key: String, message: String },
}

/// A reasoner named on the command line or in a suite manifest, such as
/// `baseline` or `baseline:cruise=6,lookahead=30`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReasonerSpec {
    pub kind: String,
    pub params: BTreeMap<String, f64>,
}

impl std::str::FromStr for ReasonerSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for item in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| SpecError::Malformed(item.into()))?;
            let v: f64 = v.trim().parse().map_err(|_| SpecError::BadValue {
                key: k.trim().into(),
                message: format!("`{}` is not a number", v.trim()),
            })?;
            params.insert(k.trim().to_owned(), v);
        }
        Ok(Self {
            kind: kind.to_owned(),
            params,
        })
    }
}

impl fmt::Display for ReasonerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

impl ReasonerSpec {
    /// Parses a comma-separated list such as
    /// `baseline,baseline:cruise=6,lookahead=30`. A `key=value` item
    /// without a `:` continues the parameters of the previous spec.
    pub fn parse_list(s: &str) -> Result<Vec<ReasonerSpec>, SpecError> {
        let mut groups: Vec<String> = Vec::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            match groups.last_mut() {
                Some(g) if item.contains('=') && !item.contains(':') => {
                    g.push(',');
                    g.push_str(item);
                }
                _ => groups.push(item.to_owned()),
            }
        }
        groups.iter().map(|g| g.parse()).collect()
    }

    pub fn build(&self) -> Result<Box<dyn Reasoner>, SpecError> {
        match self.kind.as_str() {
            "baseline" => {
                let mut config = BaselineConfig::default();
                for (k, &v) in &self.params {
                    config.set(k, v)?;
                }
                config.validate()?;
                Ok(Box::new(BaselineReasoner::with_label(config, self.to_string())))
            }
            other => Err(SpecError::UnknownKind(other.into())),
        }
    }
}
