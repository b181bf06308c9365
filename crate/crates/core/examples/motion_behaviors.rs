//! Every motion behavior on one straight road: a truck on a route with a
//! hitched trailer, a car following a string of gates, and a steered car.

use pearl_sim::behavior::{compose_trailer, CommandBehavior, CommandState, RouteBehavior, TrajectoryBehavior};
use pearl_sim::geometry::{Point, Pose};
use pearl_sim::shape::ObjectShape;
use pearl_sim::trajectory::{Gate, InterpolationMode, Trajectory, DEFAULT_RESOLUTION};
use pearl_sim::world::{ObjectId, ObjectState, Role, SimObject, UpdateMode, World};

fn state(id: &str, pose: Pose, speed: f64, length: f64) -> ObjectState {
    ObjectState {
        id: ObjectId::new(id),
        role: Role::Traffic,
        shape: ObjectShape::rectangle(length, 2.5),
        pose,
        speed,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut world = World::new(UpdateMode::Sequential, 0);

    let truck_start = Pose::new(20.0, 0.0, 0.0);
    let route = RouteBehavior::new(&[Point::new(0.0, 0.0), Point::new(200.0, 0.0)], false, 5.0)?
        .starting_near(truck_start.position());
    let pair = compose_trailer(Box::new(route), ObjectId::new("truck"), truck_start, 8.0)?;
    world.add_object(SimObject::new(state("truck", truck_start, 5.0, 6.0), Some(pair.leader))?)?;
    world.add_object(SimObject::new(
        state("trailer", Pose::new(12.0, 0.0, 0.0), 0.0, 7.0),
        Some(Box::new(pair.trailer)),
    )?)?;

    // a lane change expressed as gates with target speeds
    let gates = [(0.0, 8.0, 4.0), (20.0, 8.0, 8.0), (40.0, 12.0, 8.0), (60.0, 12.0, 3.0)]
        .iter()
        .map(|&(x, y, v)| Gate::across(Point::new(x, y), 0.0, 3.5).map(|g| g.with_speed(v)))
        .collect::<Result<Vec<_>, _>>()?;
    let follower = TrajectoryBehavior::new(Trajectory::new(gates)?, InterpolationMode::Bspline, DEFAULT_RESOLUTION, 0.0)?;
    world.add_object(SimObject::new(state("follower", Pose::new(0.0, 8.0, 0.0), 0.0, 4.5), Some(Box::new(follower)))?)?;

    let (steered, handle) = CommandBehavior::new();
    world.add_object(SimObject::new(state("steered", Pose::new(0.0, -8.0, 0.0), 0.0, 4.5), Some(Box::new(steered)))?)?;
    handle.enqueue(CommandState { accel: 2.0, yaw_rate: 0.1 });

    for second in 1..=10 {
        for _ in 0..10 {
            world.step(0.1)?;
        }
        if second == 5 {
            handle.enqueue(CommandState { accel: -1.0, yaw_rate: 0.0 });
        }
        print!("t={second:>2}s");
        for o in world.objects() {
            let s = o.state();
            print!("  {} ({:.1}, {:.1}) v={:.1}", s.id, s.pose.x, s.pose.y, s.speed);
        }
        println!();
    }
    Ok(())
}
