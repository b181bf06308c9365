//! Static checks of input files, as run by `pearl-sim check`.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::formats::{load_scenario, parse_mission, parse_route_network, FormatError};
use crate::harness::load_manifest;

/// What a checked file turned out to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Artifact {
    RouteNetwork { lanes: usize, checkpoints: usize },
    Scenario { id: String, objects: usize },
    Mission { checkpoints: usize },
    Suite { name: String, scenarios: usize },
}

impl fmt::Display for Artifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Artifact::RouteNetwork { lanes, checkpoints } => {
                write!(f, "route network, {lanes} lanes, {checkpoints} checkpoints")
            }
            Artifact::Scenario { id, objects } => write!(f, "scenario `{id}`, {objects} objects"),
            Artifact::Mission { checkpoints } => write!(f, "mission, {checkpoints} checkpoints"),
            Artifact::Suite { name, scenarios } => write!(f, "suite `{name}`, {scenarios} scenarios"),
        }
    }
}

/// Parses and validates one file. Route networks are recognized by the
/// `.rndf` extension; JSON files by their top-level keys. Scenarios are
/// loaded together with the network and mission they reference, and
/// suites together with every scenario they list.
pub fn check_file(path: impl AsRef<Path>) -> Result<Artifact, FormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "rndf") {
        let net = parse_route_network(&text).map_err(|e| FormatError::from(e).in_file(path))?;
        return Ok(Artifact::RouteNetwork {
            lanes: net.lanes().count(),
            checkpoints: net.checkpoints.len(),
        });
    }
    let has = |key: &str| {
        serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .is_some_and(|v| v.get(key).is_some())
    };
    if has("scenarios") {
        let manifest = load_manifest(path)?;
        for entry in &manifest.scenarios {
            load_scenario(&entry.path)?;
        }
        Ok(Artifact::Suite {
            name: manifest.name,
            scenarios: manifest.scenarios.len(),
        })
    } else if has("checkpoints") && !has("objects") {
        let m = parse_mission(&text).map_err(|e| e.in_file(path))?;
        Ok(Artifact::Mission {
            checkpoints: m.checkpoints.len(),
        })
    } else {
        let bundle = load_scenario(path)?;
        Ok(Artifact::Scenario {
            id: bundle.scenario.id,
            objects: bundle.scenario.objects.len(),
        })
    }
}
