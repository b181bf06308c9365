//! Building a world by hand and stepping it in both update modes.
//!
//! Two cars drive toward each other on routes; the example prints the
//! canonical snapshot, any collision events, and a trace hash per mode.

use pearl_sim::behavior::RouteBehavior;
use pearl_sim::canonical::TraceHasher;
use pearl_sim::geometry::{Point, Pose};
use pearl_sim::shape::ObjectShape;
use pearl_sim::world::{ObjectId, ObjectState, Role, SimObject, UpdateMode, World};

fn car(id: &str, from: Point, to: Point, speed: f64) -> Result<SimObject, Box<dyn std::error::Error>> {
    let route = RouteBehavior::new(&[from, to], false, speed)?;
    let state = ObjectState {
        id: ObjectId::new(id),
        role: Role::Traffic,
        shape: ObjectShape::rectangle(4.5, 2.0),
        pose: route.start_pose(),
        speed,
    };
    Ok(SimObject::new(state, Some(Box::new(route)))?)
}

fn run(mode: UpdateMode) -> Result<(), Box<dyn std::error::Error>> {
    let mut world = World::new(mode, 1);
    world.add_object(car("west", Point::new(0.0, 0.0), Point::new(100.0, 0.0), 8.0)?)?;
    world.add_object(car("east", Point::new(60.0, 0.5), Point::new(-40.0, 0.5), 6.0)?)?;
    world.add_object(SimObject::new(
        ObjectState {
            id: ObjectId::new("post"),
            role: Role::StaticObstacle,
            shape: ObjectShape::circle(0.3),
            pose: Pose::new(30.0, 5.0, 0.0),
            speed: 0.0,
        },
        None,
    )?)?;

    let mut hasher = TraceHasher::new();
    let west = ObjectId::new("west");
    for _ in 0..50 {
        let report = world.step(0.1)?;
        let me = world.get(&west).expect("west exists").state();
        hasher.record(&[world.clock(), me.pose.x, me.pose.y, me.pose.heading]);
        if let Some(c) = report.collisions.first() {
            println!("  t={:.1}: {} and {} overlap by {:.3} m", report.clock_after, c.a, c.b, c.depth);
            break;
        }
    }
    println!("{mode:?} final snapshot:\n{}  trace hash {:016x}", world.snapshot().canonical(), hasher.finish());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(UpdateMode::Sequential)?;
    run(UpdateMode::Copy)?;
    Ok(())
}
