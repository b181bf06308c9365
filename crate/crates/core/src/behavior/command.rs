use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{Motion, MotionBehavior};
use crate::geometry::Pose;
use crate::world::{ObjectState, WorldSnapshot};

/// Operator input: longitudinal acceleration and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommandState {
    pub accel: f64,
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandLimits {
    pub max_accel: f64,
    pub max_yaw_rate: f64,
}

impl Default for CommandLimits {
    fn default() -> Self {
        Self {
            max_accel: 3.0,
            max_yaw_rate: FRAC_PI_2,
        }
    }
}

impl CommandLimits {
    /// Clamps into bounds; NaN becomes 0.
    pub fn clamp(&self, c: CommandState) -> CommandState {
        let fix = |v: f64, max: f64| if v.is_nan() { 0.0 } else { v.clamp(-max, max) };
        CommandState {
            accel: fix(c.accel, self.max_accel),
            yaw_rate: fix(c.yaw_rate, self.max_yaw_rate),
        }
    }
}

/// Producer side of a command behavior's mailbox.
///
/// Holds at most one pending command; a newer one replaces it.
#[derive(Debug, Clone, Default)]
pub struct CommandHandle {
    pending: Arc<Mutex<Option<CommandState>>>,
}

impl CommandHandle {
    pub fn enqueue(&self, command: CommandState) {
        *self.pending.lock().unwrap_or_else(|e| e.into_inner()) = Some(command);
    }

    fn take(&self) -> Option<CommandState> {
        self.pending.lock().unwrap_or_else(|e| e.into_inner()).take()
    }
}

/// Externally steered vehicle (keyboard in interactive mode).
///
/// Per step: speed += a·dt (floored at 0), heading += ω·dt, then the
/// position moves speed·dt along the new heading. The last command stays
/// active until replaced.
#[derive(Debug)]
pub struct CommandBehavior {
    handle: CommandHandle,
    limits: CommandLimits,
    active: CommandState,
}

impl CommandBehavior {
    pub fn new() -> (Self, CommandHandle) {
        Self::with_limits(CommandLimits::default())
    }

    pub fn with_limits(limits: CommandLimits) -> (Self, CommandHandle) {
        let handle = CommandHandle::default();
        (
            Self {
                handle: handle.clone(),
                limits,
                active: CommandState::default(),
            },
            handle,
        )
    }

    pub fn active(&self) -> CommandState {
        self.active
    }
}

impl MotionBehavior for CommandBehavior {
    fn name(&self) -> &str {
        "command"
    }

    fn advance(&mut self, own: &ObjectState, _: &WorldSnapshot, dt: f64) -> Motion {
        if dt == 0.0 {
            return Motion::unchanged(own);
        }
        if let Some(c) = self.handle.take() {
            self.active = self.limits.clamp(c);
        }
        let speed = (own.speed + self.active.accel * dt).max(0.0);
        let heading = own.pose.heading + self.active.yaw_rate * dt;
        let p = own.pose.position() + crate::geometry::Point::from_angle(heading) * (speed * dt);
        Motion {
            pose: Pose::at(p, heading),
            speed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::ObjectShape;
    use crate::world::Role;

    fn own() -> ObjectState {
        ObjectState {
            id: "k".into(),
            role: Role::Traffic,
            shape: ObjectShape::rectangle(4.0, 2.0),
            pose: Pose::default(),
            speed: 0.0,
        }
    }

    fn run(b: &mut CommandBehavior, state: &mut ObjectState, steps: usize) {
        let snap = WorldSnapshot {
            clock: 0.0,
            objects: vec![],
        };
        for _ in 0..steps {
            let m = b.advance(state, &snap, 1.0);
            state.pose = m.pose;
            state.speed = m.speed;
        }
    }

    #[test]
    fn stationary_without_command() {
        let (mut b, _) = CommandBehavior::new();
        let mut s = own();
        run(&mut b, &mut s, 3);
        assert_eq!(s.pose, Pose::default());
        assert_eq!(s.speed, 0.0);
    }

    #[test]
    fn rectangle_rule_integration() {
        let (mut b, h) = CommandBehavior::new();
        h.enqueue(CommandState { accel: 1.0, yaw_rate: 0.0 });
        let mut s = own();
        run(&mut b, &mut s, 3);
        assert_eq!(s.speed, 3.0);
        assert!((s.pose.x - 6.0).abs() < 1e-12);
    }

    #[test]
    fn yaw_in_place() {
        let (mut b, h) = CommandBehavior::new();
        h.enqueue(CommandState {
            accel: 0.0,
            yaw_rate: FRAC_PI_2,
        });
        let mut s = own();
        run(&mut b, &mut s, 1);
        assert!((s.pose.heading - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(s.pose.position(), crate::geometry::Point::ORIGIN);
    }

    #[test]
    fn latest_command_wins_and_out_of_bounds_clamped() {
        let (mut b, h) = CommandBehavior::new();
        h.enqueue(CommandState { accel: 2.0, yaw_rate: 0.0 });
        h.enqueue(CommandState {
            accel: 100.0,
            yaw_rate: f64::NAN,
        });
        let mut s = own();
        run(&mut b, &mut s, 1);
        assert_eq!(b.active(), CommandState { accel: 3.0, yaw_rate: 0.0 });
        assert_eq!(s.speed, 3.0);
    }

    #[test]
    fn braking_floors_at_zero() {
        let (mut b, h) = CommandBehavior::new();
        let mut s = own();
        s.speed = 1.0;
        h.enqueue(CommandState { accel: -3.0, yaw_rate: 0.0 });
        run(&mut b, &mut s, 2);
        assert_eq!(s.speed, 0.0);
    }
}
