mod common;

use common::{bspline_oracle, corridor_oracle};
use pearl_sim::geometry::Point;
use pearl_sim::trajectory::{
    bspline_basis, bspline_point, build_path_table, corridor_contains, midpoints, Gate, InterpolationMode, Trajectory,
};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-500.0..500.0f64, -500.0..500.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn quad() -> impl Strategy<Value = [Point; 4]> {
    [point(), point(), point(), point()]
}

/// Gates along a wandering center line, of varying width.
fn trajectory(n: usize) -> impl Strategy<Value = Trajectory> {
    (
        point(),
        -3.2..3.2f64,
        prop::collection::vec((2.0..15.0f64, -0.9..0.9f64, 0.5..6.0f64), n),
    )
        .prop_map(|(start, heading, legs)| {
            let mut p = start;
            let mut h = heading;
            let mut gates = Vec::new();
            for (step, turn, width) in legs {
                gates.push(Gate::across(p, h, width).unwrap());
                h += turn;
                p = p + Point::from_angle(h) * step;
            }
            Trajectory::new(gates).unwrap()
        })
}

fn in_triangle(p: Point, a: Point, b: Point, c: Point, tol: f64) -> bool {
    let d1 = (b - a).cross(p - a);
    let d2 = (c - b).cross(p - b);
    let d3 = (a - c).cross(p - c);
    let neg = d1 < -tol || d2 < -tol || d3 < -tol;
    let pos = d1 > tol || d2 > tol || d3 > tol;
    !(neg && pos)
}

proptest! {
    #[test]
    fn spline_matches_power_basis_oracle(m in quad(), t in 0.0..=1.0f64) {
        let got = bspline_point(m, t).unwrap();
        let want = bspline_oracle(m, t);
        prop_assert!((got.x - want.x).abs() <= 1e-9 && (got.y - want.y).abs() <= 1e-9, "{got:?} vs {want:?}");
    }

    #[test]
    fn basis_is_a_partition_of_unity(t in 0.0..=1.0f64) {
        let w = bspline_basis(t);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn translation_moves_the_curve_rigidly(m in quad(), v in point(), t in 0.0..=1.0f64) {
        let moved = m.map(|p| p + v);
        let a = bspline_point(m, t).unwrap() + v;
        let b = bspline_point(moved, t).unwrap();
        prop_assert!(a.distance(b) <= 1e-9);
    }

    #[test]
    fn consecutive_windows_join(pts in prop::collection::vec(point(), 5..12)) {
        for w in pts.windows(5) {
            let end = bspline_point([w[0], w[1], w[2], w[3]], 1.0).unwrap();
            let start = bspline_point([w[1], w[2], w[3], w[4]], 0.0).unwrap();
            prop_assert!((end.x - start.x).abs() <= 1e-12 * (1.0 + end.x.abs()));
            prop_assert!((end.y - start.y).abs() <= 1e-12 * (1.0 + end.y.abs()));
        }
    }

    #[test]
    fn curve_stays_in_convex_hull(m in quad(), t in 0.0..=1.0f64) {
        let p = bspline_point(m, t).unwrap();
        let tris = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)];
        prop_assert!(tris.iter().any(|&(i, j, k)| in_triangle(p, m[i], m[j], m[k], 1e-6)));
    }

    #[test]
    fn arc_length_refines_monotonically(traj in trajectory(6)) {
        let mids = midpoints(&traj);
        let len = |r| build_path_table(&mids, InterpolationMode::Bspline, r).unwrap().total_length();
        // 10, 20 and 40 intervals per window: each table refines the last
        let (coarse, mid, fine) = (len(11), len(21), len(41));
        prop_assert!((fine - mid).abs() <= (mid - coarse).abs() + 1e-9, "{coarse} {mid} {fine}");
    }

    #[test]
    fn table_stations_increase(traj in trajectory(5), linear in any::<bool>()) {
        let mode = if linear { InterpolationMode::Linear } else { InterpolationMode::Bspline };
        let table = build_path_table(&midpoints(&traj), mode, 20).unwrap();
        prop_assert_eq!(table.samples()[0].s, 0.0);
        prop_assert!(table.samples().windows(2).all(|w| w[1].s > w[0].s));
    }

    #[test]
    fn corridor_agrees_with_winding_number(traj in trajectory(8), probes in prop::collection::vec(point(), 40)) {
        let c = traj.gates()[3].midpoint();
        for q in probes {
            // bring the probes near the corridor so both answers occur
            let p = c + (q - c) * 0.12;
            prop_assert_eq!(corridor_contains(&traj, p), corridor_oracle(&traj, p), "at {:?}", p);
        }
    }

    #[test]
    fn gate_midpoints_are_inside(traj in trajectory(8)) {
        for g in traj.gates() {
            prop_assert!(corridor_contains(&traj, g.midpoint()));
        }
    }
}

#[test]
fn coincident_controls_give_a_constant_curve() {
    let p = Point::new(12.5, -7.25);
    for i in 0..=1000 {
        let b = bspline_point([p; 4], i as f64 / 1000.0).unwrap();
        assert!((b.x - p.x).abs() <= 1e-12 && (b.y - p.y).abs() <= 1e-12);
    }
}
