//! Motion behaviors advance one object per simulation step.
//!
//! Every dynamic object owns exactly one [`MotionBehavior`]. Behaviors can be
//! swapped between steps with [`World::set_behavior`](crate::world::World::set_behavior).

mod command;
mod route;
mod trailer;
mod trajectory;

pub use command::{CommandBehavior, CommandHandle, CommandLimits, CommandState};
pub use route::RouteBehavior;
pub use trailer::{compose_trailer, ComposedPair, TrailerBehavior};
pub use trajectory::{SpeedProfile, TrajectoryBehavior, STANDSTILL_SPEED};

use thiserror::Error;

use crate::geometry::Pose;
use crate::trajectory::{GeometryError, Trajectory};
use crate::world::{ObjectState, WorldSnapshot};

/// New pose and speed produced by one advance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub pose: Pose,
    pub speed: f64,
}

impl Motion {
    pub fn unchanged(own: &ObjectState) -> Self {
        Self {
            pose: own.pose,
            speed: own.speed,
        }
    }
}

pub trait MotionBehavior: Send {
    fn name(&self) -> &str;

    /// Computes the object's state after `dt` seconds.
    ///
    /// `own` is the object's current state and `world` the snapshot this
    /// step reads from. With `dt == 0` the result must equal `own`.
    fn advance(&mut self, own: &ObjectState, world: &WorldSnapshot, dt: f64) -> Motion;

    /// Trajectory being followed, if any.
    fn trajectory(&self) -> Option<&Trajectory> {
        None
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("route has zero length")]
    ZeroLengthRoute,
    #[error("speed must be finite and >= 0, got {0}")]
    BadSpeed(f64),
    #[error("trailer offset must be > 0, got {0}")]
    BadOffset(f64),
}

/// Keeps the object where it is.
#[derive(Debug, Clone, Copy, Default)]
pub struct HoldBehavior;

impl MotionBehavior for HoldBehavior {
    fn name(&self) -> &str {
        "hold"
    }

    fn advance(&mut self, own: &ObjectState, _: &WorldSnapshot, _: f64) -> Motion {
        Motion {
            pose: own.pose,
            speed: 0.0,
        }
    }
}

fn check_speed(v: f64) -> Result<f64, BehaviorError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(BehaviorError::BadSpeed(v))
    }
}
