//! Message types of the interactive protocol.
//!
//! Every message, in either direction, is one JSON object per line:
//! `{"type": ..., "seq": ..., "payload": {...}}`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::formats::ObjectSpec;
use crate::shape::ObjectShape;
use crate::trajectory::Gate;
use crate::world::Role;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

impl Envelope {
    pub fn new(kind: &str, seq: u64, payload: impl Serialize) -> Self {
        Self {
            kind: kind.into(),
            seq,
            payload: serde_json::to_value(payload).expect("payloads are plain data"),
        }
    }

    /// One protocol line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("envelopes serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("bad payload for `{kind}`: {message}")]
    BadPayload { kind: String, message: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("time scale must be finite and >= 0, got {0}")]
    BadTimeScale(f64),
    #[error("no object is attached for steering")]
    NotSteering,
    #[error("{0}")]
    Rejected(String),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Malformed(_) => "malformed",
            ProtocolError::UnknownType(_) => "unknown_type",
            ProtocolError::BadPayload { .. } => "bad_payload",
            ProtocolError::UnknownObject(_) => "unknown_object",
            ProtocolError::BadTimeScale(_) => "bad_time_scale",
            ProtocolError::NotSteering => "not_steering",
            ProtocolError::Rejected(_) => "rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteerPayload {
    pub accel: f64,
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeScalePayload {
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResumePayload {
    /// Defaults to the scale in effect before the pause.
    #[serde(default)]
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnPayload {
    pub object: ObjectSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachPayload {
    pub object_id: String,
}

/// Client-to-server messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Inbound {
    Subscribe,
    Steer(SteerPayload),
    Pause,
    Resume(ResumePayload),
    SetTimeScale(TimeScalePayload),
    Spawn(SpawnPayload),
    AttachSteering(AttachPayload),
}

impl Inbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Inbound::Subscribe => "subscribe",
            Inbound::Steer(_) => "steer",
            Inbound::Pause => "pause",
            Inbound::Resume(_) => "resume",
            Inbound::SetTimeScale(_) => "set_time_scale",
            Inbound::Spawn(_) => "spawn",
            Inbound::AttachSteering(_) => "attach_steering",
        }
    }

    pub fn to_envelope(&self, seq: u64) -> Envelope {
        let payload = match self {
            Inbound::Subscribe | Inbound::Pause => Ok(Value::Object(Default::default())),
            Inbound::Steer(p) => serde_json::to_value(p),
            Inbound::Resume(p) => serde_json::to_value(p),
            Inbound::SetTimeScale(p) => serde_json::to_value(p),
            Inbound::Spawn(p) => serde_json::to_value(p),
            Inbound::AttachSteering(p) => serde_json::to_value(p),
        }
        .expect("payloads are plain data");
        Envelope {
            kind: self.kind().into(),
            seq,
            payload,
        }
    }
}

fn payload<T: DeserializeOwned>(env: &Envelope) -> Result<T, ProtocolError> {
    let value = match &env.payload {
        Value::Null => Value::Object(Default::default()),
        v => v.clone(),
    };
    serde_json::from_value(value).map_err(|e| ProtocolError::BadPayload {
        kind: env.kind.clone(),
        message: e.to_string(),
    })
}

fn empty_payload(env: &Envelope) -> Result<(), ProtocolError> {
    match &env.payload {
        Value::Null => Ok(()),
        Value::Object(m) if m.is_empty() => Ok(()),
        _ => Err(ProtocolError::BadPayload {
            kind: env.kind.clone(),
            message: "expected an empty payload".into(),
        }),
    }
}

/// Parses one inbound line into its sequence number and message.
pub fn parse_inbound(line: &str) -> Result<(u64, Inbound), ProtocolError> {
    let env: Envelope = serde_json::from_str(line).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let msg = match env.kind.as_str() {
        "subscribe" => empty_payload(&env).map(|_| Inbound::Subscribe)?,
        "pause" => empty_payload(&env).map(|_| Inbound::Pause)?,
        "steer" => Inbound::Steer(payload(&env)?),
        "resume" => Inbound::Resume(payload(&env)?),
        "set_time_scale" => Inbound::SetTimeScale(payload(&env)?),
        "spawn" => Inbound::Spawn(payload(&env)?),
        "attach_steering" => Inbound::AttachSteering(payload(&env)?),
        other => return Err(ProtocolError::UnknownType(other.into())),
    };
    Ok((env.seq, msg))
}

/// Sent once when a client connects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloPayload {
    pub scenario_id: String,
    pub dt: f64,
    pub time_scale: f64,
    pub ego: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckPayload {
    /// The `seq` of the acknowledged client message.
    pub ack: u64,
    pub command: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    /// The `seq` of the offending message, when it could be read.
    pub ack: Option<u64>,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireObject {
    pub id: String,
    pub role: Role,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub shape: ObjectShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireValidator {
    pub name: String,
    pub passed: bool,
    pub violations: usize,
    /// Message of the latest violation.
    pub last: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPayload {
    pub step: u64,
    pub clock: f64,
    pub time_scale: f64,
    pub objects: Vec<WireObject>,
    /// Gates of the ego's current plan.
    pub trajectory: Option<Vec<Gate>>,
    pub validators: Vec<WireValidator>,
    pub steered: Option<String>,
}
