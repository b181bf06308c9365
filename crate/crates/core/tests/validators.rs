mod common;

use common::{corner_bundle, corridor_exit_steps, near_miss_steps, passing_bundle, speeding_bundle};
use pearl_sim::formats::{load_scenario, ScenarioBundle};
use pearl_sim::harness::{build_validators, run_scenario, RunConfig, TestReport, ValidatorConfig};
use pearl_sim::reasoner::BaselineReasoner;
use pearl_sim::world::ObjectId;

fn run(b: &ScenarioBundle, configs: &[ValidatorConfig]) -> TestReport {
    let validators = build_validators(configs, b).unwrap();
    let config = RunConfig {
        record_trace: true,
        ..RunConfig::default()
    };
    run_scenario(b, Box::new(BaselineReasoner::default()), validators, config).unwrap()
}

fn assert_sound(r: &TestReport) {
    assert_eq!(r.passed, r.violations.is_empty() && r.termination_met, "{}", r.scenario_id);
    for v in &r.violations {
        if let Some(m) = &v.measure {
            assert!(m.holds(), "{v:?}");
        }
    }
    for verdict in &r.validators {
        assert_eq!(verdict.passed, verdict.violations == 0);
        assert_eq!(verdict.violations, r.violations_of(&verdict.name).count());
    }
}

#[test]
fn speeding_is_flagged_every_step() {
    let b = speeding_bundle();
    let r = run(
        &b,
        &[ValidatorConfig::SpeedLimit {
            limit: None,
            subject: Some("racer".into()),
        }],
    );
    assert_sound(&r);
    assert!(!r.passed);
    assert_eq!(r.steps, 500);
    assert_eq!(r.violations.len(), 500);
    for (i, v) in r.violations.iter().enumerate() {
        assert_eq!(v.step, i as u64 + 1);
        assert_eq!(v.objects, vec![ObjectId::new("racer")]);
        let m = v.measure.as_ref().unwrap();
        assert_eq!((m.value, m.threshold), (12.0, 10.0));
    }
    assert!(!r.validator("speed_limit").unwrap().passed);
}

#[test]
fn corridor_exit_matches_an_oracle_replay() {
    let (b, gates) = corner_bundle();
    let r = run(
        &b,
        &[ValidatorConfig::CorridorKeeping {
            subject: Some("car".into()),
        }],
    );
    assert_sound(&r);

    let expected = corridor_exit_steps(&b, &gates, "car", r.steps, 0.01);
    let got: Vec<u64> = r.violations.iter().map(|v| v.step).collect();
    assert!(!expected.is_empty(), "the corner should be cut");
    assert_eq!(got, expected);
    assert!(!r.passed);
}

#[test]
fn near_miss_matches_the_clearance_formula() {
    let b = passing_bundle();
    let r = run(
        &b,
        &[ValidatorConfig::MinDistance {
            threshold: 2.0,
            subject: Some("east".into()),
        }],
    );
    assert_sound(&r);

    let expected = near_miss_steps(&b, ("east", 4.5, 2.0), ("west", 4.0, 2.0), 2.0, r.steps, 0.01);
    let got: Vec<_> = r
        .violations
        .iter()
        .filter(|v| v.objects.contains(&"west".into()))
        .map(|v| (v.step, v.measure.as_ref().unwrap().value))
        .collect();
    assert!(!expected.is_empty());
    assert_eq!(got.len(), expected.len());
    for ((s1, g1), (s2, g2)) in got.iter().zip(&expected) {
        assert_eq!(s1, s2);
        assert!((g1 - g2).abs() <= 1e-9, "step {s1}: {g1} vs {g2}");
    }
    // the closest pass is the 1 m lateral gap
    let min = r.validator("min_distance").unwrap().extreme.unwrap();
    assert!((min - 1.0).abs() <= 1e-9, "{min}");
}

#[test]
fn timeout_fires_once_after_the_budget() {
    let b = load_scenario(common::fixture("straight.json")).unwrap();
    let r = run(&b, &[ValidatorConfig::Timeout { seconds: 1.0 }]);
    assert_sound(&r);
    assert!(r.termination_met);
    assert_eq!(r.violations.len(), 1);
    let v = &r.violations[0];
    assert_eq!(v.step, 101);
    assert!(v.measure.as_ref().unwrap().value > 1.0);
    assert!(!r.passed);
}

#[test]
fn obstacle_free_mission_passes_everything() {
    let b = load_scenario(common::fixture("straight.json")).unwrap();
    let r = run(&b, &ValidatorConfig::all_builtin(1.0, 120.0));
    assert_sound(&r);
    assert_eq!(r.validators.len(), 6);
    assert!(r.validators.iter().all(|v| v.passed), "{:?}", r.validators);
    assert!(r.passed && r.termination_met);
    assert!(r.completion_time.is_some());
}

#[test]
fn unfinished_mission_fails_checkpoint_completion() {
    let b = load_scenario(common::fixture("stop.json")).unwrap();
    let mut b2 = b.clone();
    b2.scenario.termination = Default::default();
    let r = run_scenario(
        &b2,
        Box::new(BaselineReasoner::default()),
        build_validators(&[ValidatorConfig::CheckpointCompletion], &b2).unwrap(),
        RunConfig {
            timeout: 20.0,
            ..RunConfig::default()
        },
    )
    .unwrap();
    assert_sound(&r);
    assert!(!r.termination_met && !r.passed);
    assert_eq!(r.violations_of("checkpoint_completion").count(), 1);
}

#[test]
fn validators_do_not_change_the_run() {
    for name in ["urban.json", "stop.json", "straight.json"] {
        let b = load_scenario(common::fixture(name)).unwrap();
        let bare = run(&b, &[]);
        let watched = run(&b, &ValidatorConfig::all_builtin(1.0, 120.0));
        assert_eq!(bare.trace_hash, watched.trace_hash, "{name}");
        assert_eq!(bare.trace, watched.trace, "{name}");
        assert_sound(&bare);
        assert_sound(&watched);
    }
}
