//! Input artifacts: route networks (plain text), scenarios and missions (JSON).
//!
//! Every parser reports failures as a [`FormatError`] carrying a location:
//! a line number for the text format, a field path plus line/column for
//! JSON. Serializers emit canonical text whose numbers are quantized to six
//! fractional digits, so parse(serialize(x)) == x for values on that grid.

mod json;
mod mission;
mod rndf;
mod scenario;

pub use json::canonical_json;
pub(crate) use json::from_str_with_path;
pub use mission::{parse_mission, serialize_mission, MissionFile};
pub use rndf::{
    parse_route_network, serialize_route_network, waypoint_index, Checkpoint, Lane, RndfError, RndfErrorKind,
    RouteNetwork, Segment, Waypoint,
};
pub use scenario::{
    load_scenario, parse_scenario, serialize_scenario, BehaviorSpec, ObjectSpec, Scenario, ScenarioBundle,
    Termination, DEFAULT_LANE_WIDTH,
};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}route network {0}", source_prefix(.1))]
    RouteNetwork(RndfError, Option<PathBuf>),
    #[error("{}{path}: {message} (line {line}, column {column})", source_prefix(.file))]
    Schema {
        file: Option<PathBuf>,
        path: String,
        message: String,
        line: usize,
        column: usize,
    },
    #[error("{}{path}: {message}", source_prefix(.file))]
    Invalid {
        file: Option<PathBuf>,
        path: String,
        message: String,
    },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn source_prefix(file: &Option<PathBuf>) -> String {
    file.as_ref().map(|f| format!("{}: ", f.display())).unwrap_or_default()
}

impl FormatError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        FormatError::Invalid {
            file: None,
            path: path.into(),
            message: message.into(),
        }
    }

    /// Attaches the file the text came from.
    pub fn in_file(self, f: impl Into<PathBuf>) -> Self {
        let f = Some(f.into());
        match self {
            FormatError::RouteNetwork(e, _) => FormatError::RouteNetwork(e, f),
            FormatError::Schema {
                path,
                message,
                line,
                column,
                ..
            } => FormatError::Schema {
                file: f,
                path,
                message,
                line,
                column,
            },
            FormatError::Invalid { path, message, .. } => FormatError::Invalid { file: f, path, message },
            io => io,
        }
    }
}

impl From<RndfError> for FormatError {
    fn from(e: RndfError) -> Self {
        FormatError::RouteNetwork(e, None)
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })
}
