//! Scenario execution with step-hook validators, suites, run history and
//! multi-instance comparison.

mod compare;
mod suite;
mod validators;

pub use compare::{compare_runs, ComparisonEntry, ComparisonReport, Divergence};
pub use suite::{
    append_history, load_manifest, render_html, run_suite, write_reports, SuiteEntry, SuiteManifest, SuiteOptions,
    SuiteReport, SuiteTotals, EXIT_CONFIG_ERROR, EXIT_FAILURE, EXIT_SUCCESS,
};
pub use validators::{
    CheckpointCompletion, Collision, CorridorKeeping, FinishContext, LimitSource, MinDistance, SpeedLimit,
    StepContext, Timeout, Validator, ValidatorConfig,
};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::TraceHasher;
use crate::closed_loop::{ClosedLoop, LoopConfig, PlanEvent};
use crate::factory::BuildError;
use crate::formats::{FormatError, ScenarioBundle, Termination};
use crate::geometry::{Point, Pose};
use crate::reasoner::{Reasoner, SpecError};
use crate::world::{ObjectId, WorldError};

/// Default step size for regression runs.
pub const DEFAULT_DT: f64 = 0.01;
/// Default hard cap on simulated time per run.
pub const DEFAULT_TIMEOUT: f64 = 120.0;
/// A checkpoint counts as visited once the ego center is this close.
pub const CHECKPOINT_RADIUS: f64 = 2.5;

/// Name under which reasoner contract breaches are reported.
pub const CONTRACT_VALIDATOR: &str = "reasoner_contract";
/// Name under which planning failures are reported.
pub const PLANNING_VALIDATOR: &str = "reasoner_error";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Reasoner(#[from] SpecError),
    #[error("validator misconfigured: {0}")]
    Validator(String),
    #[error("{0}")]
    Config(String),
}

/// The violated quantity: `value relation threshold` holds when recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub quantity: String,
    pub value: f64,
    /// `>` or `<`.
    pub relation: String,
    pub threshold: f64,
}

impl Measure {
    /// True iff the recorded value really violates the threshold.
    pub fn holds(&self) -> bool {
        match self.relation.as_str() {
            ">" => self.value > self.threshold,
            "<" => self.value < self.threshold,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub validator: String,
    /// Number of completed steps when the violation was observed.
    pub step: u64,
    pub clock: f64,
    pub objects: Vec<ObjectId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,
    pub message: String,
}

impl Violation {
    #[allow(clippy::too_many_arguments)]
    pub fn measured(
        validator: &str,
        ctx: &StepContext<'_>,
        objects: Vec<ObjectId>,
        quantity: &str,
        value: f64,
        relation: &str,
        threshold: f64,
        message: String,
    ) -> Self {
        Self {
            validator: validator.into(),
            step: ctx.step,
            clock: ctx.snapshot.clock,
            objects,
            measure: Some(Measure {
                quantity: quantity.into(),
                value,
                relation: relation.into(),
                threshold,
            }),
            message,
        }
    }

    pub fn unmeasured(validator: &str, ctx: &StepContext<'_>, objects: Vec<ObjectId>, message: String) -> Self {
        Self {
            validator: validator.into(),
            step: ctx.step,
            clock: ctx.snapshot.clock,
            objects,
            measure: None,
            message,
        }
    }
}

/// Per-validator summary in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorVerdict {
    pub name: String,
    pub passed: bool,
    pub violations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extreme: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub scenario_id: String,
    pub reasoner: String,
    pub passed: bool,
    pub termination_met: bool,
    /// Clock at which the last checkpoint was visited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_time: Option<f64>,
    pub validators: Vec<ValidatorVerdict>,
    pub violations: Vec<Violation>,
    pub steps: u64,
    pub simulated_duration: f64,
    pub wall_duration: f64,
    /// 64-bit FNV-1a over the canonical per-step ego poses, as hex.
    pub trace_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Post-step ego poses, kept only when requested.
    #[serde(skip)]
    pub trace: Option<Vec<Pose>>,
}

impl TestReport {
    /// A report for a run that could not start.
    pub fn failed_to_start(scenario_id: impl Into<String>, reasoner: impl Into<String>, error: String) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            reasoner: reasoner.into(),
            passed: false,
            termination_met: false,
            completion_time: None,
            validators: Vec::new(),
            violations: Vec::new(),
            steps: 0,
            simulated_duration: 0.0,
            wall_duration: 0.0,
            trace_hash: format_hash(TraceHasher::new().finish()),
            error: Some(error),
            trace: None,
        }
    }

    pub fn validator(&self, name: &str) -> Option<&ValidatorVerdict> {
        self.validators.iter().find(|v| v.name == name)
    }

    pub fn violations_of<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Violation> + 'a {
        self.violations.iter().filter(move |v| v.validator == name)
    }

    /// Copy with wall-clock fields zeroed, for comparing reruns.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_duration: 0.0,
            trace: None,
            ..self.clone()
        }
    }
}

pub fn format_hash(h: u64) -> String {
    format!("{h:016x}")
}

/// Step size and limits of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub dt: f64,
    /// Hard cap on simulated seconds.
    pub timeout: f64,
    pub record_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            timeout: DEFAULT_TIMEOUT,
            record_trace: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(HarnessError::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.timeout.is_finite() && self.timeout > 0.0) {
            return Err(HarnessError::Config(format!("timeout must be > 0, got {}", self.timeout)));
        }
        Ok(())
    }
}

/// Tracks in-order checkpoint visits of the ego.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionTracker {
    checkpoints: Vec<Point>,
    next: usize,
    completed_at: Option<f64>,
}

impl MissionTracker {
    pub fn new(checkpoints: Vec<Point>) -> Self {
        Self {
            checkpoints,
            next: 0,
            completed_at: None,
        }
    }

    pub fn for_bundle(bundle: &ScenarioBundle) -> Option<Self> {
        let mission = bundle.mission.as_ref()?;
        let points = mission
            .checkpoints
            .iter()
            .map(|c| bundle.network.checkpoint_position(c).expect("mission linked"))
            .collect();
        Some(Self::new(points))
    }

    pub fn update(&mut self, ego: Point, clock: f64) {
        while self.next < self.checkpoints.len() && ego.distance(self.checkpoints[self.next]) <= CHECKPOINT_RADIUS {
            self.next += 1;
            if self.next == self.checkpoints.len() {
                self.completed_at = Some(clock);
            }
        }
    }

    pub fn visited(&self) -> usize {
        self.next
    }

    pub fn total(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_complete(&self) -> bool {
        self.next == self.checkpoints.len()
    }

    pub fn completed_at(&self) -> Option<f64> {
        self.completed_at
    }
}

/// Runs one scenario to termination or timeout with the given validators
/// observing every step.
pub fn run_scenario(
    bundle: &ScenarioBundle,
    reasoner: Box<dyn Reasoner>,
    mut validators: Vec<Box<dyn Validator>>,
    config: RunConfig,
) -> Result<TestReport, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let reasoner_name = reasoner.name().to_owned();
    let mut cl = ClosedLoop::new(bundle, Some(reasoner), LoopConfig::for_dt(config.dt))?;
    let ego = cl.ego().cloned();
    let mut tracker = MissionTracker::for_bundle(bundle);
    let max_steps = (config.timeout / config.dt).round() as u64;
    let duration_steps = match bundle.scenario.termination {
        Termination::Duration { seconds } => Some((seconds / config.dt).round() as u64),
        Termination::MissionComplete => None,
    };
    let termination_met = |steps: u64, tracker: &Option<MissionTracker>| match duration_steps {
        Some(n) => steps >= n,
        None => tracker.as_ref().is_some_and(MissionTracker::is_complete),
    };

    let mut hasher = TraceHasher::new();
    let mut trace = config.record_trace.then(Vec::new);
    let mut violations = Vec::new();

    while cl.steps() < max_steps && !termination_met(cl.steps(), &tracker) {
        let st = cl.step()?;
        let snapshot = cl.world().snapshot();
        let ego_state = ego.as_ref().and_then(|e| snapshot.get(e));
        if let Some(me) = ego_state {
            hasher.record(&[snapshot.clock, me.pose.x, me.pose.y, me.pose.heading]);
            if let Some(t) = trace.as_mut() {
                t.push(me.pose);
            }
            if let Some(tr) = tracker.as_mut() {
                tr.update(me.pose.position(), snapshot.clock);
            }
        }
        let ctx = StepContext {
            step: st.step,
            world: cl.world(),
            snapshot: &snapshot,
            report: &st.report,
            ego: ego.as_ref(),
            mission_complete: tracker.as_ref().is_some_and(MissionTracker::is_complete),
        };
        match &st.plan {
            Some(PlanEvent::Breach(b)) => {
                violations.push(Violation::unmeasured(CONTRACT_VALIDATOR, &ctx, ego.iter().cloned().collect(), b.to_string()))
            }
            Some(PlanEvent::Failed(e)) => {
                violations.push(Violation::unmeasured(PLANNING_VALIDATOR, &ctx, ego.iter().cloned().collect(), e.to_string()))
            }
            _ => {}
        }
        for v in validators.iter_mut() {
            violations.extend(v.on_step(&ctx));
        }
    }

    let snapshot = cl.world().snapshot();
    let finish = FinishContext {
        steps: cl.steps(),
        snapshot: &snapshot,
        mission_complete: tracker.as_ref().is_some_and(MissionTracker::is_complete),
    };
    for v in validators.iter_mut() {
        violations.extend(v.on_finish(&finish));
    }
    let verdicts: Vec<ValidatorVerdict> = validators
        .iter()
        .map(|v| ValidatorVerdict {
            name: v.name().to_owned(),
            passed: v.has_passed(),
            violations: violations.iter().filter(|x| x.validator == v.name()).count(),
            extreme: v.extreme(),
        })
        .collect();
    let terminated = termination_met(cl.steps(), &tracker);
    let passed = terminated && violations.is_empty() && verdicts.iter().all(|v| v.passed);
    Ok(TestReport {
        scenario_id: bundle.scenario.id.clone(),
        reasoner: reasoner_name,
        passed,
        termination_met: terminated,
        completion_time: tracker.as_ref().and_then(MissionTracker::completed_at),
        validators: verdicts,
        violations,
        steps: cl.steps(),
        simulated_duration: cl.world().clock(),
        wall_duration: started.elapsed().as_secs_f64(),
        trace_hash: format_hash(hasher.finish()),
        error: None,
        trace,
    })
}

/// Builds validators from their configurations.
pub fn build_validators(
    configs: &[ValidatorConfig],
    bundle: &ScenarioBundle,
) -> Result<Vec<Box<dyn Validator>>, HarnessError> {
    configs.iter().map(|c| c.build(bundle)).collect()
}
