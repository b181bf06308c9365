use serde::{Deserialize, Serialize};

use super::json::{canonical_json, from_str_with_path};
use super::{FormatError, RouteNetwork};

/// Ordered checkpoints a vehicle has to visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionFile {
    pub checkpoints: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_cap: Option<f64>,
}

impl MissionFile {
    pub fn validate(&self) -> Result<(), FormatError> {
        if self.checkpoints.is_empty() {
            return Err(FormatError::invalid("checkpoints", "mission needs at least one checkpoint"));
        }
        if let Some(cap) = self.speed_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(FormatError::invalid("speed_cap", format!("must be finite and > 0, got {cap}")));
            }
        }
        Ok(())
    }

    /// Checks every checkpoint id against the network.
    pub fn link(&self, network: &RouteNetwork) -> Result<(), FormatError> {
        for (i, id) in self.checkpoints.iter().enumerate() {
            if network.checkpoint(id).is_none() {
                return Err(FormatError::invalid(
                    format!("checkpoints[{i}]"),
                    format!("unknown checkpoint `{id}`"),
                ));
            }
        }
        Ok(())
    }
}

pub fn parse_mission(text: &str) -> Result<MissionFile, FormatError> {
    let m: MissionFile = from_str_with_path(text)?;
    m.validate()?;
    Ok(m)
}

pub fn serialize_mission(mission: &MissionFile) -> String {
    canonical_json(mission)
}
