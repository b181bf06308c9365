//! Sensor-masked, read-only extracts of a world snapshot.
//!
//! [`extract`] keeps the objects whose center lies inside a sensor's range
//! and field of view; [`degrade`] then drops and jitters records to model
//! a damaged or weather-affected sensor. Both are pure functions of their
//! inputs, so replaying a run with the same seed reproduces every view.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{fmt6, TraceHasher};
use crate::geometry::{angle_diff, Pose};
use crate::shape::ObjectShape;
use crate::world::{ObjectId, WorldSnapshot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("observer `{0}` not in snapshot")]
    UnknownObserver(ObjectId),
    #[error("invalid sensor config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub range: f64,
    pub fov_half_angle: f64,
    #[serde(default)]
    pub mount_offset: Pose,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            range: 80.0,
            fov_half_angle: PI,
            mount_offset: Pose::default(),
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(SensorError::InvalidConfig(format!("range must be > 0, got {}", self.range)));
        }
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle <= PI) {
            return Err(SensorError::InvalidConfig(format!(
                "fov_half_angle must be in (0, pi], got {}",
                self.fov_half_angle
            )));
        }
        if !self.mount_offset.is_finite() {
            return Err(SensorError::InvalidConfig("mount offset must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationConfig {
    #[serde(default)]
    pub dropout_probability: f64,
    #[serde(default)]
    pub position_noise_sigma: f64,
    pub consumer_id: String,
}

impl DegradationConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(0.0..=1.0).contains(&self.dropout_probability) {
            return Err(SensorError::InvalidConfig(format!(
                "dropout_probability must be in [0, 1], got {}",
                self.dropout_probability
            )));
        }
        if !(self.position_noise_sigma.is_finite() && self.position_noise_sigma >= 0.0) {
            return Err(SensorError::InvalidConfig(format!(
                "position_noise_sigma must be finite and >= 0, got {}",
                self.position_noise_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObject {
    pub id: ObjectId,
    pub pose: Pose,
    pub speed: f64,
    pub shape: ObjectShape,
}

/// What one observer can see at one instant. Never contains the observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewExtract {
    pub observer: ObjectId,
    pub clock: f64,
    pub perceived: Vec<PerceivedObject>,
}

impl ViewExtract {
    pub fn canonical(&self) -> String {
        let mut out = format!("{} {}\n", self.observer, fmt6(self.clock));
        for p in &self.perceived {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                p.id,
                fmt6(p.pose.x),
                fmt6(p.pose.y),
                fmt6(p.pose.heading),
                fmt6(p.speed)
            ));
        }
        out
    }
}

/// Objects whose center is within range and field of view of the sensor.
pub fn extract(snapshot: &WorldSnapshot, observer: &ObjectId, config: &SensorConfig) -> Result<ViewExtract, SensorError> {
    config.validate()?;
    let me = snapshot
        .get(observer)
        .ok_or_else(|| SensorError::UnknownObserver(observer.clone()))?;
    let sensor = me.pose.compose(&config.mount_offset);
    let origin = sensor.position();
    let perceived = snapshot
        .objects
        .iter()
        .filter(|o| &o.id != observer)
        .filter(|o| {
            let rel = o.pose.position() - origin;
            let d = rel.norm();
            if d > config.range {
                return false;
            }
            if d == 0.0 || config.fov_half_angle >= PI {
                return true;
            }
            angle_diff(sensor.heading, rel.y.atan2(rel.x)).abs() <= config.fov_half_angle
        })
        .map(|o| PerceivedObject {
            id: o.id.clone(),
            pose: o.pose,
            speed: o.speed,
            shape: o.shape,
        })
        .collect();
    Ok(ViewExtract {
        observer: observer.clone(),
        clock: snapshot.clock,
        perceived,
    })
}

/// Seed for one perceived record, keyed by run, consumer, time and object.
fn record_seed(run_seed: u64, consumer: &str, clock: f64, object: &ObjectId) -> u64 {
    let mut h = TraceHasher::new();
    h.write_bytes(&run_seed.to_le_bytes());
    h.write_bytes(consumer.as_bytes());
    h.write_bytes(&[0]);
    h.write_bytes(fmt6(clock).as_bytes());
    h.write_bytes(&[0]);
    h.write_bytes(object.as_str().as_bytes());
    h.finish()
}

/// Applies dropout and isotropic Gaussian position noise.
pub fn degrade(view: &ViewExtract, config: &DegradationConfig, run_seed: u64) -> Result<ViewExtract, SensorError> {
    config.validate()?;
    let noise = (config.position_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, config.position_noise_sigma).expect("sigma validated"));
    let perceived = view
        .perceived
        .iter()
        .filter_map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(record_seed(run_seed, &config.consumer_id, view.clock, &p.id));
            if rng.gen::<f64>() < config.dropout_probability {
                return None;
            }
            let mut out = p.clone();
            if let Some(n) = &noise {
                out.pose.x += n.sample(&mut rng);
                out.pose.y += n.sample(&mut rng);
            }
            Some(out)
        })
        .collect();
    Ok(ViewExtract {
        observer: view.observer.clone(),
        clock: view.clock,
        perceived,
    })
}
