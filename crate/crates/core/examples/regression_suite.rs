//! Runs the bundled regression suite in parallel, writes report.json and
//! report.html, and appends the result to a history directory.
//!
//! Usage: `cargo run --example regression_suite -- [OUT_DIR]`

use std::path::PathBuf;

use pearl_sim::harness::{append_history, load_manifest, run_suite, write_reports, SuiteOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = load_manifest(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/regression.suite.json"))?;
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("pearl-sim-suite"));
    let report = run_suite(
        &manifest,
        &SuiteOptions {
            parallel: true,
            revision: "example".into(),
            ..SuiteOptions::default()
        },
    );
    for r in &report.reports {
        println!(
            "{} {:<20} {:>5} steps {:>6.3}s wall  hash {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.scenario_id,
            r.steps,
            r.wall_duration,
            r.trace_hash
        );
    }
    let (json, html) = write_reports(&report, &out)?;
    let entry = append_history(&report, &out.join("history"))?;
    println!("{}\n{}\n{}", json.display(), html.display(), entry.display());
    std::process::exit(report.exit_code());
}
