use std::fs::{self, OpenOptions};
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_validators, run_scenario, HarnessError, RunConfig, TestReport, ValidatorConfig, DEFAULT_DT, DEFAULT_TIMEOUT};
use crate::formats::{canonical_json, from_str_with_path, load_scenario, FormatError};
use crate::reasoner::ReasonerSpec;
use crate::trajectory::InterpolationMode;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

fn default_name() -> String {
    "suite".into()
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT
}

fn default_reasoner() -> String {
    "baseline".into()
}

/// A list of scenarios with the validators to run them under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteManifest {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Hard cap on simulated seconds per scenario.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_reasoner")]
    pub reasoner: String,
    /// Applied to every scenario without its own list.
    #[serde(default)]
    pub validators: Vec<ValidatorConfig>,
    pub scenarios: Vec<SuiteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validators: Option<Vec<ValidatorConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Reads a manifest and resolves its scenario paths.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<SuiteManifest, FormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut manifest: SuiteManifest = from_str_with_path(&text).map_err(|e| e.in_file(path))?;
    if manifest.scenarios.is_empty() {
        return Err(FormatError::Invalid {
            file: Some(path.to_owned()),
            path: "scenarios".into(),
            message: "suite lists no scenarios".into(),
        });
    }
    let base = path.parent().unwrap_or(Path::new("."));
    for entry in &mut manifest.scenarios {
        entry.path = base.join(&entry.path);
    }
    Ok(manifest)
}

/// Overrides applied on top of a manifest.
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub parallel: bool,
    pub revision: String,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub mode: Option<InterpolationMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteTotals {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    /// UTC, RFC 3339.
    pub timestamp: String,
    pub revision: String,
    pub totals: SuiteTotals,
    pub reports: Vec<TestReport>,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.totals.failed == 0 {
            EXIT_SUCCESS
        } else {
            EXIT_FAILURE
        }
    }

    /// Copy with wall-clock fields cleared, for comparing reruns.
    pub fn without_timing(&self) -> Self {
        Self {
            timestamp: String::new(),
            reports: self.reports.iter().map(TestReport::without_timing).collect(),
            ..self.clone()
        }
    }
}

fn run_entry(manifest: &SuiteManifest, entry: &SuiteEntry, options: &SuiteOptions) -> TestReport {
    let label = entry.path.display().to_string();
    let reasoner_spec = entry.reasoner.as_deref().unwrap_or(&manifest.reasoner);
    let attempt = || -> Result<TestReport, HarnessError> {
        let mut bundle = load_scenario(&entry.path)?;
        if let Some(seed) = options.seed.or(entry.seed) {
            bundle = bundle.with_seed(seed);
        }
        if let Some(mode) = options.mode {
            bundle.scenario.interpolation = mode;
        }
        let reasoner = reasoner_spec.parse::<ReasonerSpec>()?.build()?;
        let configs = entry.validators.as_ref().unwrap_or(&manifest.validators);
        let validators = build_validators(configs, &bundle)?;
        let config = RunConfig {
            dt: options.dt.unwrap_or(manifest.dt),
            timeout: entry.timeout.unwrap_or(manifest.timeout),
            record_trace: false,
        };
        run_scenario(&bundle, reasoner, validators, config)
    };
    attempt().unwrap_or_else(|e| TestReport::failed_to_start(label, reasoner_spec, e.to_string()))
}

/// Runs every scenario of the manifest. Entries that fail to load or
/// configure are reported as failures; the rest of the suite still runs.
pub fn run_suite(manifest: &SuiteManifest, options: &SuiteOptions) -> SuiteReport {
    let reports: Vec<TestReport> = if options.parallel {
        manifest
            .scenarios
            .par_iter()
            .map(|e| run_entry(manifest, e, options))
            .collect()
    } else {
        manifest.scenarios.iter().map(|e| run_entry(manifest, e, options)).collect()
    };
    let passed = reports.iter().filter(|r| r.passed).count();
    SuiteReport {
        name: manifest.name.clone(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        revision: if options.revision.is_empty() { "unversioned".into() } else { options.revision.clone() },
        totals: SuiteTotals {
            total: reports.len(),
            passed,
            failed: reports.len() - passed,
        },
        reports,
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Static summary table.
pub fn render_html(report: &SuiteReport) -> String {
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n");
    h.push_str(&format!("<title>{} {}</title>\n", escape(&report.name), escape(&report.revision)));
    h.push_str(
        "<style>body{font-family:sans-serif}td,th{padding:4px 8px;border-bottom:1px solid #ddd}\
         .pass{color:#176f2c}.fail{color:#b00020;font-weight:bold}</style>\n</head><body>\n",
    );
    h.push_str(&format!(
        "<h1>{}</h1>\n<p>revision {} &middot; {} &middot; {}/{} passed</p>\n",
        escape(&report.name),
        escape(&report.revision),
        escape(&report.timestamp),
        report.totals.passed,
        report.totals.total
    ));
    h.push_str("<table>\n<tr><th>scenario</th><th>reasoner</th><th>result</th><th>violations</th><th>first failure</th><th>simulated s</th><th>wall s</th></tr>\n");
    for r in &report.reports {
        let first = match (&r.error, r.violations.first()) {
            (Some(e), _) => e.clone(),
            (None, Some(v)) => format!("{} at step {}: {}", v.validator, v.step, v.message),
            (None, None) if !r.termination_met => "termination condition not met".into(),
            _ => String::new(),
        };
        let (class, verdict) = if r.passed { ("pass", "PASS") } else { ("fail", "FAIL") };
        h.push_str(&format!(
            "<tr><td>{}</td><td>{}</td><td class=\"{class}\">{verdict}</td><td>{}</td><td>{}</td><td>{:.2}</td><td>{:.3}</td></tr>\n",
            escape(&r.scenario_id),
            escape(&r.reasoner),
            r.violations.len(),
            escape(&first),
            r.simulated_duration,
            r.wall_duration
        ));
    }
    h.push_str("</table>\n</body></html>\n");
    h
}

/// Writes `report.json` and `report.html` into `dir`.
pub fn write_reports(report: &SuiteReport, dir: &Path) -> io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    let html = dir.join("report.html");
    fs::write(&json, canonical_json(report))?;
    fs::write(&html, render_html(report))?;
    Ok((json, html))
}

/// Adds the report to an append-only history directory as
/// `<timestamp>-<revision>.json`; never overwrites an existing entry.
pub fn append_history(report: &SuiteReport, dir: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stamp: String = report.timestamp.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
    let rev: String = report
        .revision
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' { c } else { '_' })
        .collect();
    let body = canonical_json(report);
    for n in 0.. {
        let name = if n == 0 { format!("{stamp}-{rev}.json") } else { format!("{stamp}-{rev}-{n}.json") };
        let path = dir.join(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                f.write_all(body.as_bytes())?;
                return Ok(path);
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("unbounded loop returns")
}
