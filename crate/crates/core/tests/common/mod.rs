#![allow(dead_code)]

pub mod strategies;

use std::path::PathBuf;

use pearl_sim::factory::create_world;
use pearl_sim::formats::{parse_mission, parse_route_network, parse_scenario, ScenarioBundle};
use pearl_sim::geometry::Point;
use pearl_sim::trajectory::{Gate, Trajectory};
use pearl_sim::world::ObjectId;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Cubic uniform B-spline written in power-basis matrix form,
/// `b(t) = [t^3 t^2 t 1] M [m0 m1 m2 m3]^T / 6`, evaluated with Horner.
pub fn bspline_oracle(m: [Point; 4], t: f64) -> Point {
    const M: [[f64; 4]; 4] = [
        [-1.0, 3.0, -3.0, 1.0],
        [3.0, -6.0, 3.0, 0.0],
        [-3.0, 0.0, 3.0, 0.0],
        [1.0, 4.0, 1.0, 0.0],
    ];
    let coord = |f: fn(&Point) -> f64| {
        let c: Vec<f64> = M.iter().map(|row| row.iter().zip(&m).map(|(k, p)| k * f(p)).sum()).collect();
        (((c[0] * t + c[1]) * t + c[2]) * t + c[3]) / 6.0
    };
    Point::new(coord(|p| p.x), coord(|p| p.y))
}

fn on_edge(p: Point, a: Point, b: Point) -> bool {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t) <= 1e-9
}

/// Winding number of a closed polygon around `p`, by summing the signed
/// angles subtended by its edges. Points on an edge count as inside.
pub fn winding_contains(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if on_edge(p, a, b) {
            return true;
        }
        let (u, v) = (a - p, b - p);
        total += u.cross(v).atan2(u.dot(v));
    }
    (total / std::f64::consts::TAU).round() != 0.0
}

/// Corridor membership from the gates alone.
pub fn corridor_oracle(traj: &Trajectory, p: Point) -> bool {
    traj.gates()
        .windows(2)
        .any(|w| winding_contains(&[w[0].left, w[1].left, w[1].right, w[0].right], p))
}

/// Gates across a polyline, each perpendicular to the local direction.
pub fn gates_along(points: &[(f64, f64)], width: f64) -> Trajectory {
    let pts: Vec<Point> = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
    let gates = pts
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (a, b) = if i + 1 < pts.len() { (p, pts[i + 1]) } else { (pts[i - 1], p) };
            let d = b - a;
            Gate::across(p, d.y.atan2(d.x), width).unwrap()
        })
        .collect();
    Trajectory::new(gates).unwrap()
}

/// A single 200 m lane along the x axis, checkpoints at 100 and 200 m.
pub const STRAIGHT_NET: &str =
    "segment 1\nlane 1.1 width 3.5 speed 10\nwp a 0 0\nwp b 100 0\nwp c 200 0\ncheckpoint mid b\ncheckpoint far c\nend\n";

pub fn bundle(scenario_json: &str, network: &str, mission: Option<&str>) -> ScenarioBundle {
    let s = parse_scenario(scenario_json).expect("test scenario parses");
    let n = parse_route_network(network).expect("test network parses");
    let m = mission.map(|m| parse_mission(m).expect("test mission parses"));
    ScenarioBundle::new(s, n, m).expect("test bundle links")
}

pub fn rect(length: f64, width: f64) -> String {
    format!(r#"{{"kind": "rectangle", "length": {length}, "width": {width}}}"#)
}

/// A parked ego, out of the way, so no reasoner is involved.
pub fn parked_ego() -> String {
    format!(
        r#"{{"id": "ego", "role": "ego", "shape": {}, "pose": {{"x": 0, "y": -40}}, "behavior": {{"type": "hold"}}}}"#,
        rect(4.5, 2.0)
    )
}

/// `racer` drives 12 m/s for 5 s on a lane limited to 10 m/s.
pub fn speeding_bundle() -> ScenarioBundle {
    let scenario = format!(
        r#"{{"id": "speeding", "termination": {{"type": "duration", "seconds": 5}}, "objects": [{},
            {{"id": "racer", "role": "traffic", "shape": {}, "pose": {{"x": 0, "y": 0}},
              "behavior": {{"type": "route", "lane": "1.1", "speed": 12}}}}]}}"#,
        parked_ego(),
        rect(4.5, 2.0)
    );
    bundle(&scenario, STRAIGHT_NET, None)
}

/// `car` follows narrow gates around a right-angle corner, which the
/// smoothed path cuts.
pub fn corner_bundle() -> (ScenarioBundle, Trajectory) {
    let gates = gates_along(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (20.0, 10.0), (20.0, 20.0)], 1.0);
    let scenario = format!(
        r#"{{"id": "corner", "interpolation": "bspline", "termination": {{"type": "duration", "seconds": 9}},
            "objects": [{}, {{"id": "car", "role": "traffic", "shape": {}, "pose": {{"x": 0, "y": 0}},
              "behavior": {{"type": "trajectory", "speed": 5, "gates": {}}}}}]}}"#,
        parked_ego(),
        rect(4.5, 2.0),
        serde_json::to_string(&gates).unwrap()
    );
    (bundle(&scenario, STRAIGHT_NET, None), gates)
}

/// `east` and `west` pass each other on parallel lanes 1 m apart.
pub fn passing_bundle() -> ScenarioBundle {
    let scenario = format!(
        r#"{{"id": "passing", "termination": {{"type": "duration", "seconds": 12}}, "objects": [{},
            {{"id": "east", "role": "traffic", "shape": {}, "pose": {{"x": 0, "y": 0}},
              "behavior": {{"type": "route", "lane": "1.1", "speed": 7}}}},
            {{"id": "west", "role": "traffic", "shape": {}, "pose": {{"x": 80, "y": 3}},
              "behavior": {{"type": "route", "lane": "2.1", "speed": 5}}}}]}}"#,
        parked_ego(),
        rect(4.5, 2.0),
        rect(4.0, 2.0)
    );
    let net = format!("{STRAIGHT_NET}segment 2\nlane 2.1 width 3.5 speed 10\nwp e 80 3\nwp f -80 3\nend\n");
    bundle(&scenario, &net, None)
}

/// Steps at which `id` is outside `gates` by the winding-number oracle,
/// replaying the scenario's world without any validator.
pub fn corridor_exit_steps(b: &ScenarioBundle, gates: &Trajectory, id: &str, steps: u64, dt: f64) -> Vec<u64> {
    let mut world = create_world(b).unwrap().world;
    let id = ObjectId::new(id);
    let mut out = Vec::new();
    for step in 1..=steps {
        world.step(dt).unwrap();
        if !corridor_oracle(gates, world.get(&id).unwrap().state().pose.position()) {
            out.push(step);
        }
    }
    out
}

/// Steps and clearances below `threshold` between two axis-aligned
/// rectangles `a` and `b` (given as length, width), from the replayed world.
pub fn near_miss_steps(
    b: &ScenarioBundle,
    a: (&str, f64, f64),
    c: (&str, f64, f64),
    threshold: f64,
    steps: u64,
    dt: f64,
) -> Vec<(u64, f64)> {
    let mut world = create_world(b).unwrap().world;
    let mut out = Vec::new();
    for step in 1..=steps {
        world.step(dt).unwrap();
        let snap = world.snapshot();
        let (pa, pc) = (snap.get(&a.0.into()).unwrap().pose, snap.get(&c.0.into()).unwrap().pose);
        let dx = ((pa.x - pc.x).abs() - (a.1 + c.1) / 2.0).max(0.0);
        let dy = ((pa.y - pc.y).abs() - (a.2 + c.2) / 2.0).max(0.0);
        let gap = dx.hypot(dy);
        if gap < threshold {
            out.push((step, gap));
        }
    }
    out
}
