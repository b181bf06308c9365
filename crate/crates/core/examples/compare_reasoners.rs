//! Two differently tuned baseline reasoners on the same urban scenario.

use pearl_sim::formats::load_scenario;
use pearl_sim::harness::{compare_runs, RunConfig, ValidatorConfig};
use pearl_sim::reasoner::ReasonerSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/urban.json"))?;
    let reasoners = ReasonerSpec::parse_list("baseline,baseline:cruise=7,d_margin=10")?
        .iter()
        .map(ReasonerSpec::build)
        .collect::<Result<Vec<_>, _>>()?;
    let validators = [
        ValidatorConfig::Collision,
        ValidatorConfig::MinDistance { threshold: 1.0, subject: None },
        ValidatorConfig::SpeedLimit { limit: None, subject: None },
    ];
    let report = compare_runs(&bundle, reasoners, &validators, RunConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
