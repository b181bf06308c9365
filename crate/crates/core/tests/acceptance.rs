//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the output reads as a checklist; exits nonzero on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::strategies::{mission, network, scenario};
use common::{bspline_oracle, corridor_oracle};
use pearl_sim::closed_loop::{ClosedLoop, LoopConfig};
use pearl_sim::check::check_file;
use pearl_sim::formats::{
    load_scenario, parse_mission, parse_route_network, parse_scenario, serialize_mission, serialize_route_network,
    serialize_scenario, ScenarioBundle,
};
use pearl_sim::geometry::{normalize_angle, Point};
use pearl_sim::harness::{build_validators, compare_runs, run_scenario, RunConfig, TestReport, ValidatorConfig};
use pearl_sim::reasoner::{BaselineReasoner, Reasoner, ReasonerSpec};
use pearl_sim::trajectory::{
    bspline_basis, bspline_point, build_path_table, corridor_contains, midpoints, Gate, InterpolationMode, Trajectory,
};
use pearl_sim::world::{ObjectId, UpdateMode};
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_point(r: &mut ChaCha8Rng, span: f64) -> Point {
    Point::new(r.gen_range(-span..span), r.gen_range(-span..span))
}

fn urban() -> ScenarioBundle {
    load_scenario(common::fixture("urban.json")).unwrap()
}

fn run(b: &ScenarioBundle, configs: &[ValidatorConfig]) -> TestReport {
    let validators = build_validators(configs, b).unwrap();
    run_scenario(b, Box::new(BaselineReasoner::default()), validators, RunConfig::default()).unwrap()
}

fn spline_matches_oracle() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = [(); 4].map(|_| random_point(&mut r, 100.0));
        let t = r.gen_range(0.0..=1.0);
        let (got, want) = (bspline_point(m, t).unwrap(), bspline_oracle(m, t));
        worst = worst.max((got.x - want.x).abs()).max((got.y - want.y).abs());

        let start = (m[0] + m[1] * 4.0 + m[2]) * (1.0 / 6.0);
        let end = (m[1] + m[2] * 4.0 + m[3]) * (1.0 / 6.0);
        for (t, want) in [(0.0, start), (1.0, end)] {
            let got = bspline_point(m, t).unwrap();
            let err = (got.x - want.x).abs().max((got.y - want.y).abs());
            ensure!(err <= 1e-12, "endpoint t={t}: {got:?} vs {want:?}");
        }
    }
    ensure!(worst <= 1e-9, "max error {worst:e}");
    Ok(format!("max error {worst:.1e}"))
}

fn partition_of_unity() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let t = if i < 2 { i as f64 } else { r.gen_range(0.0..=1.0) };
        worst = worst.max((bspline_basis(t).iter().sum::<f64>() - 1.0).abs());
        let c = random_point(&mut r, 100.0);
        let p = bspline_point([c; 4], t).unwrap();
        ensure!((p.x - c.x).abs() <= 1e-12 && (p.y - c.y).abs() <= 1e-12, "constant curve moved: {p:?} vs {c:?}");
    }
    ensure!(worst <= 1e-12, "basis sum off by {worst:e}");
    Ok(format!("max deviation {worst:.1e}"))
}

fn max_turn(points: &[Point], mode: InterpolationMode) -> f64 {
    let table = build_path_table(points, mode, 100).unwrap();
    table
        .samples()
        .windows(2)
        .map(|w| normalize_angle(w[1].heading - w[0].heading).abs())
        .fold(0.0, f64::max)
}

fn spline_is_smoother() -> Outcome {
    let started = Instant::now();
    let gates: Vec<Gate> = (0..10)
        .map(|i| {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            Gate::across(Point::new(5.0 * i as f64, y), 0.0, 3.0).unwrap()
        })
        .collect();
    let mids = midpoints(&Trajectory::new(gates).unwrap());
    let (smooth, linear) = (max_turn(&mids, InterpolationMode::Bspline), max_turn(&mids, InterpolationMode::Linear));
    let elapsed = started.elapsed().as_secs_f64();
    ensure!(smooth <= linear, "bspline {smooth} > linear {linear}");
    ensure!(elapsed < 1.0, "took {elapsed:.3} s");
    Ok(format!("max heading step {smooth:.4} vs {linear:.4} rad, {:.1} ms", elapsed * 1e3))
}

fn random_trajectory(r: &mut ChaCha8Rng) -> Trajectory {
    let mut p = random_point(r, 50.0);
    let mut h = r.gen_range(-3.2..3.2);
    let gates = (0..8)
        .map(|_| {
            let g = Gate::across(p, h, r.gen_range(0.5..6.0)).unwrap();
            h += r.gen_range(-0.9..0.9);
            p = p + Point::from_angle(h) * r.gen_range(2.0..15.0);
            g
        })
        .collect();
    Trajectory::new(gates).unwrap()
}

fn corridor_agrees_with_winding() -> Outcome {
    let mut r = rng(4);
    let (mut inside, mut disagreements) = (0, 0);
    for _ in 0..100 {
        let traj = random_trajectory(&mut r);
        let pts: Vec<Point> = traj.gates().iter().flat_map(|g| [g.left, g.right]).collect();
        let (lo_x, hi_x) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
        let (lo_y, hi_y) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
        for _ in 0..100 {
            let p = Point::new(r.gen_range(lo_x - 1.0..hi_x + 1.0), r.gen_range(lo_y - 1.0..hi_y + 1.0));
            let want = corridor_oracle(&traj, p);
            inside += want as usize;
            disagreements += (corridor_contains(&traj, p) != want) as usize;
        }
    }
    ensure!(disagreements == 0, "{disagreements} disagreements");
    ensure!(inside > 0, "no sample landed inside a corridor");
    Ok(format!("10000 points, {inside} inside, 0 disagreements"))
}

fn copy_mode_loop(b: &ScenarioBundle, steps: usize) -> Vec<String> {
    let mut cl = ClosedLoop::new(b, Some(Box::new(BaselineReasoner::default())), LoopConfig::for_dt(0.01)).unwrap();
    (0..steps)
        .map(|_| {
            cl.step().unwrap();
            cl.world().snapshot().canonical_sorted()
        })
        .collect()
}

fn determinism() -> Outcome {
    let b = urban();
    ensure!(b.scenario.objects.len() == 5, "urban has {} objects", b.scenario.objects.len());
    let (first, second) = (run(&b, &[]), run(&b, &[]));
    ensure!(first.trace_hash == second.trace_hash, "{} vs {}", first.trace_hash, second.trace_hash);
    ensure!(first.simulated_duration >= 60.0 - 1e-9, "only {} s simulated", first.simulated_duration);

    let mut copy = b.clone();
    copy.scenario.update_mode = UpdateMode::Copy;
    let mut permuted = copy.clone();
    permuted.scenario.objects.reverse();
    permuted.scenario.objects.rotate_left(2);
    let (a, p) = (copy_mode_loop(&copy, 6000), copy_mode_loop(&permuted, 6000));
    if let Some(i) = a.iter().zip(&p).position(|(x, y)| x != y) {
        return Err(format!("copy mode differs after step {}", i + 1));
    }
    Ok(format!("hash {} twice, 6000 permuted copy-mode steps identical", first.trace_hash))
}

fn faster_than_real_time() -> Outcome {
    let b = urban();
    let started = Instant::now();
    let r = run(&b, &[]);
    let wall = started.elapsed().as_secs_f64();
    ensure!(r.simulated_duration >= 60.0 - 1e-9, "only {} s simulated", r.simulated_duration);
    ensure!(wall <= 3.0, "{wall:.3} s wall");
    Ok(format!("{:.0} s simulated in {wall:.3} s ({:.0}x)", r.simulated_duration, r.simulated_duration / wall))
}

fn stops_short_of_obstacle() -> Outcome {
    let b = load_scenario(common::fixture("stop.json")).unwrap();
    let r = run(&b, &[ValidatorConfig::MinDistance { threshold: 8.0, subject: Some("ego".into()) }]);
    let verdict = r.validator("min_distance").unwrap();
    let gap = verdict.extreme.unwrap();
    ensure!(verdict.passed && r.passed, "min_distance failed, gap {gap}");
    ensure!(gap >= 8.0, "gap {gap}");

    let mut cl = ClosedLoop::new(&b, Some(Box::new(BaselineReasoner::default())), LoopConfig::for_dt(0.01)).unwrap();
    for _ in 0..r.steps {
        cl.step().unwrap();
    }
    let speed = cl.world().get(&ObjectId::new("ego")).unwrap().state().speed;
    ensure!(speed == 0.0, "final speed {speed}");
    Ok(format!("min gap {gap:.3} m, final speed 0"))
}

fn validators_are_sound() -> Outcome {
    let mut detail = Vec::new();

    let b = common::speeding_bundle();
    let r = run(&b, &[ValidatorConfig::SpeedLimit { limit: None, subject: Some("racer".into()) }]);
    let steps: Vec<u64> = r.violations.iter().map(|v| v.step).collect();
    ensure!(!r.passed && steps == (1..=500).collect::<Vec<_>>(), "speeding: {} records", steps.len());
    detail.push(format!("speeding {}", steps.len()));

    let (b, gates) = common::corner_bundle();
    let r = run(&b, &[ValidatorConfig::CorridorKeeping { subject: Some("car".into()) }]);
    let want = common::corridor_exit_steps(&b, &gates, "car", r.steps, 0.01);
    let got: Vec<u64> = r.violations.iter().map(|v| v.step).collect();
    ensure!(!r.passed && !want.is_empty() && got == want, "corridor exit: {} vs {} expected", got.len(), want.len());
    detail.push(format!("corridor {}", got.len()));

    let b = common::passing_bundle();
    let r = run(&b, &[ValidatorConfig::MinDistance { threshold: 2.0, subject: Some("east".into()) }]);
    let want = common::near_miss_steps(&b, ("east", 4.5, 2.0), ("west", 4.0, 2.0), 2.0, r.steps, 0.01);
    let got: Vec<(u64, f64)> = r.violations.iter().map(|v| (v.step, v.measure.as_ref().unwrap().value)).collect();
    let same = got.len() == want.len()
        && got.iter().zip(&want).all(|((s1, g1), (s2, g2))| s1 == s2 && (g1 - g2).abs() <= 1e-9);
    ensure!(!r.passed && !want.is_empty() && same, "near miss: {} vs {} expected", got.len(), want.len());
    detail.push(format!("near-miss {}", got.len()));

    let b = load_scenario(common::fixture("straight.json")).unwrap();
    let r = run(&b, &[ValidatorConfig::Timeout { seconds: 1.0 }]);
    ensure!(!r.passed && r.violations.len() == 1 && r.violations[0].step == 101, "timeout: {:?}", r.violations);
    detail.push("timeout 1".into());

    let r = run(&b, &ValidatorConfig::all_builtin(1.0, 120.0));
    ensure!(r.passed && r.validators.len() == 6, "obstacle-free mission: {:?}", r.validators);
    detail.push("clean mission passes 6/6".into());
    Ok(detail.join(", "))
}

fn comparison() -> Outcome {
    let started = Instant::now();
    let b = load_scenario(common::fixture("straight.json")).unwrap();
    let validators = ValidatorConfig::applicable(&b, 1.0, 120.0);

    let twins: Vec<Box<dyn Reasoner>> = vec![Box::new(BaselineReasoner::default()), Box::new(BaselineReasoner::default())];
    let same = compare_runs(&b, twins, &validators, RunConfig::default()).unwrap();
    ensure!(same.divergences.iter().all(|d| d.step.is_none()), "twins diverge: {:?}", same.divergences);

    let specs = ReasonerSpec::parse_list("baseline:cruise=5,baseline:cruise=10,lookahead=50").unwrap();
    let report = compare_runs(&b, specs.iter().map(|s| s.build().unwrap()).collect(), &validators, RunConfig::default()).unwrap();
    let mut by_time: Vec<_> = report.entries.iter().map(|e| (e.completion_time, e.reasoner.clone())).collect();
    ensure!(by_time.iter().all(|(t, _)| t.is_some()), "a run did not complete: {by_time:?}");
    by_time.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let expected: Vec<String> = by_time.into_iter().map(|(_, r)| r).collect();
    ensure!(report.ranking == expected, "ranking {:?}, times say {expected:?}", report.ranking);
    let elapsed = started.elapsed().as_secs_f64();
    ensure!(elapsed <= 10.0, "took {elapsed:.2} s");
    Ok(format!("ranking {}, {elapsed:.2} s", report.ranking.join(" > ")))
}

fn round_trips() -> Outcome {
    let mut runner = TestRunner::new(Config {
        failure_persistence: None,
        ..Config::with_cases(1000)
    });
    runner
        .run(&network(), |net| {
            let text = serialize_route_network(&net);
            assert_eq!(parse_route_network(&text).unwrap(), net);
            Ok(())
        })
        .map_err(|e| format!("network: {e}"))?;
    runner
        .run(&scenario(), |s| {
            assert_eq!(parse_scenario(&serialize_scenario(&s)).unwrap(), s);
            Ok(())
        })
        .map_err(|e| format!("scenario: {e}"))?;
    runner
        .run(&mission(), |m| {
            assert_eq!(parse_mission(&serialize_mission(&m)).unwrap(), m);
            Ok(())
        })
        .map_err(|e| format!("mission: {e}"))?;

    let mut located = 0;
    for entry in std::fs::read_dir(common::fixture("broken")).unwrap() {
        let path = entry.unwrap().path();
        let msg = match check_file(&path) {
            Ok(_) => return Err(format!("{} checked clean", path.display())),
            Err(e) => e.to_string(),
        };
        let has_place = msg.contains("line ") || msg.contains("checkpoints") || msg.contains('.');
        ensure!(msg.contains(path.file_name().unwrap().to_str().unwrap()) && has_place, "unlocated: {msg}");
        located += 1;
    }
    Ok(format!("3 x 1000 round trips, {located} broken fixtures located"))
}

fn non_interference() -> Outcome {
    let b = urban();
    let bare = run(&b, &[]);
    let watched = run(&b, &ValidatorConfig::all_builtin(1.0, 120.0));
    ensure!(watched.validators.len() == 6, "{} validators", watched.validators.len());
    ensure!(bare.trace_hash == watched.trace_hash, "{} vs {}", bare.trace_hash, watched.trace_hash);
    Ok(format!("hash {} with 0 and 6 validators", bare.trace_hash))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("spline matches direct evaluation", spline_matches_oracle),
        ("basis is a partition of unity", partition_of_unity),
        ("spline path is smoother than linear", spline_is_smoother),
        ("corridor test matches winding numbers", corridor_agrees_with_winding),
        ("urban runs are deterministic", determinism),
        ("urban runs faster than real time", faster_than_real_time),
        ("baseline stops short of the obstacle", stops_short_of_obstacle),
        ("validators flag exactly the violations", validators_are_sound),
        ("reasoner comparison", comparison),
        ("format round trips and located errors", round_trips),
        ("validators do not change the run", non_interference),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", 11 - failed, 11);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
