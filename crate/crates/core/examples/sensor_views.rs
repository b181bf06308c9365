//! What the ego perceives in the urban scenario, with and without
//! deterministic dropout and position noise.

use pearl_sim::factory::create_world;
use pearl_sim::formats::load_scenario;
use pearl_sim::sensor::{degrade, extract, DegradationConfig, SensorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/urban.json");
    let bundle = load_scenario(path)?;
    let mut built = create_world(&bundle)?;
    let ego = built.ego.clone().expect("the urban scenario has an ego");
    for _ in 0..100 {
        built.world.step(0.05)?;
    }
    let snapshot = built.world.snapshot();

    for config in [
        SensorConfig::default(),
        SensorConfig {
            range: 60.0,
            fov_half_angle: std::f64::consts::FRAC_PI_4,
            ..SensorConfig::default()
        },
    ] {
        let view = extract(&snapshot, &ego, &config)?;
        println!("range {} m, half angle {:.3} rad:\n{}", config.range, config.fov_half_angle, view.canonical());
    }

    let view = extract(&snapshot, &ego, &SensorConfig::default())?;
    let noisy = DegradationConfig {
        dropout_probability: 0.3,
        position_noise_sigma: 0.5,
        consumer_id: "baseline".into(),
    };
    let a = degrade(&view, &noisy, bundle.scenario.seed)?;
    let b = degrade(&view, &noisy, bundle.scenario.seed)?;
    println!("degraded (repeatable: {}):\n{}", a == b, a.canonical());
    Ok(())
}
