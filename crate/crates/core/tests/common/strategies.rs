//! Generators of valid route networks, scenarios and missions, with
//! every number on the grid the serializers write.

use pearl_sim::formats::{
    BehaviorSpec, Checkpoint, Lane, MissionFile, ObjectSpec, RouteNetwork, Scenario, Segment, Termination, Waypoint,
};
use pearl_sim::geometry::{Point, Pose};
use pearl_sim::sensor::{DegradationConfig, SensorConfig};
use pearl_sim::shape::ObjectShape;
use pearl_sim::trajectory::{Gate, InterpolationMode, Trajectory};
use pearl_sim::world::{Role, UpdateMode};
use proptest::prelude::*;

/// Values on the six-decimal grid the serializers write.
pub fn grid(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    ((lo * 1e6) as i64..=(hi * 1e6) as i64).prop_map(|k| k as f64 / 1e6)
}

pub fn positive(hi: f64) -> impl Strategy<Value = f64> {
    grid(0.000001, hi)
}

pub fn point() -> impl Strategy<Value = Point> {
    (grid(-5000.0, 5000.0), grid(-5000.0, 5000.0)).prop_map(|(x, y)| Point::new(x, y))
}

pub fn network() -> impl Strategy<Value = RouteNetwork> {
    let lane = (positive(10.0), positive(40.0), prop::collection::vec(point(), 2..6));
    let segment = prop::collection::vec(lane, 1..4);
    (prop::collection::vec(segment, 1..4), prop::collection::vec(any::<prop::sample::Index>(), 0..5)).prop_map(
        |(segs, picks)| {
            let segments: Vec<Segment> = segs
                .into_iter()
                .enumerate()
                .map(|(i, lanes)| Segment {
                    id: format!("{}", i + 1),
                    lanes: lanes
                        .into_iter()
                        .enumerate()
                        .map(|(j, (width, speed_limit, pts))| Lane {
                            id: format!("{}.{}", i + 1, j + 1),
                            width,
                            speed_limit,
                            waypoints: pts
                                .into_iter()
                                .enumerate()
                                .map(|(k, position)| Waypoint {
                                    id: format!("w{}_{}_{}", i + 1, j + 1, k),
                                    position,
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect();
            let wps: Vec<String> = segments
                .iter()
                .flat_map(|s| s.lanes.iter())
                .flat_map(|l| l.waypoints.iter().map(|w| w.id.clone()))
                .collect();
            let checkpoints = picks
                .iter()
                .enumerate()
                .map(|(n, ix)| Checkpoint {
                    id: format!("cp{n}"),
                    waypoint: ix.get(&wps).clone(),
                })
                .collect();
            RouteNetwork { segments, checkpoints }
        },
    )
}

pub fn pose() -> impl Strategy<Value = Pose> {
    (grid(-500.0, 500.0), grid(-500.0, 500.0), grid(-3.14, 3.14)).prop_map(|(x, y, heading)| Pose { x, y, heading })
}

pub fn shape() -> impl Strategy<Value = ObjectShape> {
    prop_oneof![
        (positive(20.0), positive(5.0)).prop_map(|(l, w)| ObjectShape::rectangle(l, w)),
        positive(5.0).prop_map(ObjectShape::circle),
    ]
}

pub fn gates() -> impl Strategy<Value = Trajectory> {
    prop::collection::vec((point(), point(), prop::option::of(grid(0.0, 30.0))), 2..6)
        .prop_filter_map("gates need width and distinct midpoints", |raw| {
            let gates = raw
                .into_iter()
                .map(|(left, right, target_speed)| Gate { left, right, target_speed })
                .collect();
            Trajectory::new(gates).ok()
        })
}

pub fn moving_behavior() -> impl Strategy<Value = BehaviorSpec> {
    let mode = prop::option::of(prop_oneof![Just(InterpolationMode::Linear), Just(InterpolationMode::Bspline)]);
    prop_oneof![
        Just(BehaviorSpec::Hold),
        Just(BehaviorSpec::Command),
        ("[a-z0-9.]{1,6}", grid(0.0, 30.0), any::<bool>()).prop_map(|(lane, speed, cyclic)| BehaviorSpec::Route {
            lane,
            speed,
            cyclic
        }),
        (gates(), grid(0.0, 30.0), mode).prop_map(|(gates, speed, mode)| BehaviorSpec::Trajectory { gates, speed, mode }),
        positive(20.0).prop_map(|offset| BehaviorSpec::Trailer {
            leader: "o0".into(),
            offset
        }),
    ]
}

pub fn object(i: usize) -> impl Strategy<Value = ObjectSpec> {
    let role = prop_oneof![Just(Role::Traffic), Just(Role::StaticObstacle)];
    (role, shape(), pose(), grid(0.0, 30.0), prop::option::of(moving_behavior())).prop_map(
        move |(role, shape, pose, speed, behavior)| ObjectSpec {
            id: format!("o{i}"),
            role,
            shape,
            pose,
            speed,
            behavior: if role == Role::StaticObstacle { None } else { behavior },
        },
    )
}

pub fn scenario() -> impl Strategy<Value = Scenario> {
    let lead = (any::<bool>(), shape(), pose(), grid(0.0, 30.0)).prop_map(|(ego, shape, pose, speed)| ObjectSpec {
        id: "o0".into(),
        role: if ego { Role::Ego } else { Role::Traffic },
        shape,
        pose,
        speed,
        behavior: (!ego).then_some(BehaviorSpec::Hold),
    });
    let others = (0..5usize).prop_flat_map(|n| (1..=n).map(object).collect::<Vec<_>>());
    let sensor = (positive(200.0), grid(0.01, 3.14), pose()).prop_map(|(range, fov_half_angle, mount_offset)| {
        SensorConfig {
            range,
            fov_half_angle,
            mount_offset,
        }
    });
    let degradation = (grid(0.0, 1.0), grid(0.0, 3.0), "[a-z]{1,8}").prop_map(|(p, s, c)| DegradationConfig {
        dropout_probability: p,
        position_noise_sigma: s,
        consumer_id: c,
    });
    let termination = prop_oneof![
        Just(Termination::MissionComplete),
        positive(600.0).prop_map(|seconds| Termination::Duration { seconds }),
    ];
    (
        ("[a-z][a-z0-9-]{0,12}", prop::option::of("[ -~]{0,30}"), any::<u64>(), any::<bool>()),
        (positive(8.0), prop::option::of("[a-z]{1,8}\\.rndf"), prop::option::of("[a-z]{1,8}\\.json")),
        (any::<bool>(), 2..400usize, termination),
        (prop::option::of(sensor), prop::option::of(degradation)),
        (lead, others),
    )
        .prop_map(
            |((id, description, seed, copy), (lane_width, route_network, mission), (bspline, resolution, termination), (sensor, degradation), (lead, others))| {
                Scenario {
                    id,
                    description,
                    seed,
                    update_mode: if copy { UpdateMode::Copy } else { UpdateMode::Sequential },
                    lane_width,
                    route_network,
                    mission,
                    interpolation: if bspline { InterpolationMode::Bspline } else { InterpolationMode::Linear },
                    resolution,
                    termination,
                    sensor,
                    degradation,
                    objects: std::iter::once(lead).chain(others).collect(),
                }
            },
        )
}

pub fn mission() -> impl Strategy<Value = MissionFile> {
    (prop::collection::vec("[a-z][a-z0-9_]{0,8}", 1..8), prop::option::of(positive(40.0)))
        .prop_map(|(checkpoints, speed_cap)| MissionFile { checkpoints, speed_cap })
}
