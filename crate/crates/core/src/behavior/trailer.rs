use super::{BehaviorError, Motion, MotionBehavior};
use crate::geometry::{lerp_angle, Pose};
use crate::world::{ObjectId, ObjectState, WorldSnapshot};

/// A leader behavior paired with the trailer hitched to it.
pub struct ComposedPair {
    pub leader: Box<dyn MotionBehavior>,
    pub trailer: TrailerBehavior,
}

/// Couples a trailer to `leader_id` at `offset` meters of traveled path.
pub fn compose_trailer(
    leader: Box<dyn MotionBehavior>,
    leader_id: ObjectId,
    leader_start: Pose,
    offset: f64,
) -> Result<ComposedPair, BehaviorError> {
    Ok(ComposedPair {
        leader,
        trailer: TrailerBehavior::new(leader_id, leader_start, offset)?,
    })
}

#[derive(Debug, Clone, Copy)]
struct TracePoint {
    s: f64,
    pose: Pose,
}

/// Replays the leader's traveled path `offset` meters behind it.
///
/// The leader's pose is read from the step snapshot, so the trailer lags by
/// one step in copy mode, or when it is updated before its leader. Until
/// the leader has covered `offset` meters the trailer keeps its initial pose.
#[derive(Debug, Clone)]
pub struct TrailerBehavior {
    leader: ObjectId,
    offset: f64,
    trace: Vec<TracePoint>,
    traveled: f64,
}

impl TrailerBehavior {
    pub fn new(leader: ObjectId, leader_start: Pose, offset: f64) -> Result<Self, BehaviorError> {
        if !(offset.is_finite() && offset > 0.0) {
            return Err(BehaviorError::BadOffset(offset));
        }
        Ok(Self {
            leader,
            offset,
            trace: vec![TracePoint {
                s: 0.0,
                pose: leader_start,
            }],
            traveled: 0.0,
        })
    }

    pub fn leader(&self) -> &ObjectId {
        &self.leader
    }

    fn record(&mut self, pose: Pose) {
        let last = self.trace[self.trace.len() - 1];
        let d = last.pose.position().distance(pose.position());
        if d > 0.0 {
            self.traveled += d;
            self.trace.push(TracePoint {
                s: self.traveled,
                pose,
            });
        } else if pose.heading != last.pose.heading {
            let k = self.trace.len() - 1;
            self.trace[k].pose.heading = pose.heading;
        }
    }

    fn pose_at(&self, s: f64) -> Pose {
        let i = self.trace.partition_point(|p| p.s < s).min(self.trace.len() - 1);
        if i == 0 {
            return self.trace[0].pose;
        }
        let (a, b) = (self.trace[i - 1], self.trace[i]);
        let t = ((s - a.s) / (b.s - a.s)).clamp(0.0, 1.0);
        let p = a.pose.position().lerp(b.pose.position(), t);
        Pose::at(p, lerp_angle(a.pose.heading, b.pose.heading, t))
    }

    fn trim(&mut self, s: f64) {
        let keep_from = self.trace.partition_point(|p| p.s < s).saturating_sub(1);
        if keep_from > 64 {
            self.trace.drain(..keep_from);
        }
    }
}

impl MotionBehavior for TrailerBehavior {
    fn name(&self) -> &str {
        "trailer"
    }

    fn advance(&mut self, own: &ObjectState, world: &WorldSnapshot, dt: f64) -> Motion {
        if dt == 0.0 {
            return Motion::unchanged(own);
        }
        let Some(leader) = world.get(&self.leader) else {
            return Motion {
                pose: own.pose,
                speed: 0.0,
            };
        };
        self.record(leader.pose);
        let target = self.traveled - self.offset;
        if target < 0.0 {
            return Motion {
                pose: own.pose,
                speed: 0.0,
            };
        }
        let pose = self.pose_at(target);
        self.trim(target);
        let speed = own.pose.position().distance(pose.position()) / dt;
        Motion { pose, speed }
    }
}
