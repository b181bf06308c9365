//! Gates, midpoints and the two interpolation modes.
//!
//! Builds a zig-zag string of gates, samples its center line linearly and
//! with the cubic B-spline, and tests a few points against the corridor.

use pearl_sim::geometry::Point;
use pearl_sim::trajectory::{
    bspline_basis, build_path_table, corridor_contains, midpoints, Gate, InterpolationMode, Trajectory,
    DEFAULT_RESOLUTION,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gates = (0..8)
        .map(|i| {
            let x = i as f64 * 10.0;
            let y = if i % 2 == 0 { 0.0 } else { 6.0 };
            Gate::across(Point::new(x, y), 0.0, 4.0)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let traj = Trajectory::new(gates)?;

    println!("basis weights");
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let w = bspline_basis(t);
        println!("  t={t:<4} {:?} sum={}", w.map(|v| (v * 1e6).round() / 1e6), w.iter().sum::<f64>());
    }

    let mids = midpoints(&traj);
    for mode in [InterpolationMode::Linear, InterpolationMode::Bspline] {
        let table = build_path_table(&mids, mode, DEFAULT_RESOLUTION)?;
        let (p, heading) = table.point_at_arclength(table.total_length() / 2.0)?;
        println!(
            "{mode:?}: {} samples, length {:.3} m, halfway at ({:.3}, {:.3}) heading {:.3}",
            table.samples().len(),
            table.total_length(),
            p.x,
            p.y,
            heading
        );
    }

    for p in [Point::new(5.0, 3.0), Point::new(5.0, 12.0), Point::new(70.0, 6.5)] {
        println!("corridor contains ({}, {}): {}", p.x, p.y, corridor_contains(&traj, p));
    }
    Ok(())
}
