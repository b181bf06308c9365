use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_validators, run_scenario, HarnessError, RunConfig, TestReport, ValidatorConfig};
use crate::formats::ScenarioBundle;
use crate::geometry::Pose;
use crate::reasoner::Reasoner;

/// Ego positions closer than this count as the same pose.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub reasoner: String,
    pub passed: bool,
    /// True if the run could not be carried out or the reasoner could not
    /// plan the mission.
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_time: Option<f64>,
    pub violation_count: usize,
    pub trace_hash: String,
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// First step at which two runs put the ego in different places.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub a: String,
    pub b: String,
    /// `None` when the traces agree everywhere.
    pub step: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario_id: String,
    pub seed: u64,
    pub entries: Vec<ComparisonEntry>,
    pub divergences: Vec<Divergence>,
    /// Reasoner labels by completion time; runs that never completed last.
    pub ranking: Vec<String>,
}

impl ComparisonReport {
    pub fn entry(&self, reasoner: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.reasoner == reasoner)
    }
}

/// First step (1-based) at which the traces differ by more than the
/// tolerance, or where one of them has already ended.
pub fn divergence_step(a: &[Pose], b: &[Pose]) -> Option<u64> {
    for (i, (p, q)) in a.iter().zip(b).enumerate() {
        if p.position().distance(q.position()) > DIVERGENCE_TOLERANCE {
            return Some(i as u64 + 1);
        }
    }
    (a.len() != b.len()).then(|| a.len().min(b.len()) as u64 + 1)
}

fn entry(report: &TestReport) -> ComparisonEntry {
    ComparisonEntry {
        reasoner: report.reasoner.clone(),
        passed: report.passed,
        failed: report.error.is_some() || report.violations_of(super::PLANNING_VALIDATOR).next().is_some(),
        completion_time: report.completion_time,
        violation_count: report.violations.len(),
        trace_hash: report.trace_hash.clone(),
        steps: report.steps,
        error: report.error.clone(),
    }
}

/// Runs every reasoner on the same scenario and seed, in parallel, and
/// compares the outcomes.
///
/// Reasoners sharing a label are told apart by a `#n` suffix.
pub fn compare_runs(
    bundle: &ScenarioBundle,
    reasoners: Vec<Box<dyn Reasoner>>,
    validators: &[ValidatorConfig],
    config: RunConfig,
) -> Result<ComparisonReport, HarnessError> {
    if reasoners.len() < 2 {
        return Err(HarnessError::Config(format!(
            "comparison needs at least 2 reasoners, got {}",
            reasoners.len()
        )));
    }
    config.validate()?;
    // fail early on bad validator settings rather than once per run
    build_validators(validators, bundle)?;
    let config = RunConfig {
        record_trace: true,
        ..config
    };
    let mut labels: Vec<String> = Vec::with_capacity(reasoners.len());
    for r in &reasoners {
        let base = r.name().to_owned();
        let n = labels.iter().filter(|l| l.split('#').next() == Some(base.as_str())).count();
        labels.push(if n == 0 { base } else { format!("{base}#{}", n + 1) });
    }

    let reports: Vec<TestReport> = reasoners
        .into_par_iter()
        .zip(labels.par_iter())
        .map(|(reasoner, label)| {
            let validators = build_validators(validators, bundle).expect("validated above");
            let mut report = run_scenario(bundle, reasoner, validators, config)
                .unwrap_or_else(|e| TestReport::failed_to_start(&bundle.scenario.id, label.clone(), e.to_string()));
            report.reasoner = label.clone();
            report
        })
        .collect();

    let mut divergences = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            let empty = Vec::new();
            let a = reports[i].trace.as_ref().unwrap_or(&empty);
            let b = reports[j].trace.as_ref().unwrap_or(&empty);
            divergences.push(Divergence {
                a: reports[i].reasoner.clone(),
                b: reports[j].reasoner.clone(),
                step: divergence_step(a, b),
            });
        }
    }
    let entries: Vec<ComparisonEntry> = reports.iter().map(entry).collect();
    let mut order: Vec<&ComparisonEntry> = entries.iter().collect();
    order.sort_by(|a, b| match (a.completion_time, b.completion_time) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(ComparisonReport {
        scenario_id: bundle.scenario.id.clone(),
        seed: bundle.scenario.seed,
        ranking: order.iter().map(|e| e.reasoner.clone()).collect(),
        entries,
        divergences,
    })
}
