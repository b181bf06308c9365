//! The baseline reasoner meets a stalled car 20 m ahead.
//!
//! Prints the ego's speed over time, the closest approach, and where the
//! ego came to rest.

use pearl_sim::formats::load_scenario;
use pearl_sim::harness::{build_validators, run_scenario, RunConfig, ValidatorConfig};
use pearl_sim::reasoner::BaselineReasoner;
use pearl_sim::shape::clearance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/stop.json");
    let bundle = load_scenario(path)?;
    let validators = build_validators(
        &[
            ValidatorConfig::MinDistance { threshold: 8.0, subject: None },
            ValidatorConfig::Collision,
        ],
        &bundle,
    )?;
    let config = RunConfig {
        record_trace: true,
        ..RunConfig::default()
    };
    let report = run_scenario(&bundle, Box::new(BaselineReasoner::default()), validators, config)?;
    let trace = report.trace.as_deref().unwrap_or_default();
    for (i, pose) in trace.iter().enumerate().step_by(200) {
        println!("t={:>5.2}s x={:.3}", (i + 1) as f64 * config.dt, pose.x);
    }

    let stalled = bundle.scenario.objects.iter().find(|o| o.id == "stalled").expect("fixture has the stalled car");
    let ego = bundle.scenario.ego().expect("fixture has an ego");
    let last = trace.last().expect("the run took steps");
    let gap = clearance((last, &ego.shape), (&stalled.pose, &stalled.shape));
    println!("final gap {gap:.3} m, closest {:?}", report.validator("min_distance").and_then(|v| v.extreme));
    println!("passed: {} ({} violations)", report.passed, report.violations.len());
    Ok(())
}
