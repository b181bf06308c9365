use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pearl_sim::check::check_file;
use pearl_sim::formats::{canonical_json, load_scenario, ScenarioBundle};
use pearl_sim::harness::{
    append_history, build_validators, compare_runs, load_manifest, run_suite, write_reports, RunConfig, SuiteEntry,
    SuiteManifest, SuiteOptions, SuiteReport, ValidatorConfig, DEFAULT_DT, DEFAULT_TIMEOUT, EXIT_CONFIG_ERROR,
    EXIT_FAILURE, EXIT_SUCCESS,
};
use pearl_sim::reasoner::ReasonerSpec;
use pearl_sim::server::{serve, Session, SESSION_DT};
use pearl_sim::trajectory::InterpolationMode;

#[derive(Parser)]
#[command(name = "pearl-sim", version, about = "Deterministic 2-D driving simulator and scenario test harness")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Step size in seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Corridor interpolation: linear or bspline.
    #[arg(long, global = true)]
    mode: Option<InterpolationMode>,
    /// Revision label recorded in reports and history file names.
    #[arg(long, global = true, default_value = "")]
    revision: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario, or every scenario of a suite manifest.
    Run {
        scenario: Option<PathBuf>,
        #[arg(long, conflicts_with = "scenario")]
        suite: Option<PathBuf>,
        /// Write report.json and report.html here.
        #[arg(long)]
        report_dir: Option<PathBuf>,
        /// Append the report to this history directory.
        #[arg(long)]
        history_dir: Option<PathBuf>,
        #[arg(long, default_value = "baseline")]
        reasoner: String,
        /// Minimum clearance for single-scenario runs.
        #[arg(long, default_value_t = 1.0)]
        min_gap: f64,
        /// Simulated-time cap in seconds for single-scenario runs.
        #[arg(long, default_value_t = DEFAULT_TIMEOUT)]
        timeout: f64,
        /// Run suite scenarios one after another.
        #[arg(long)]
        serial: bool,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve a scenario to interactive clients.
    Serve {
        scenario: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "baseline")]
        reasoner: String,
        /// Leave the ego without a reasoner.
        #[arg(long)]
        no_reasoner: bool,
    },
    /// Run several reasoners on the same scenario and compare them.
    Compare {
        scenario: PathBuf,
        /// Comma-separated reasoner specs.
        #[arg(long)]
        reasoners: String,
        #[arg(long, default_value_t = 1.0)]
        min_gap: f64,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT)]
        timeout: f64,
        #[arg(long)]
        json: bool,
    },
    /// Parse and validate route networks, scenarios, missions and suites.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn config_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_CONFIG_ERROR
}

fn load(path: &Path, global: &Global) -> Result<ScenarioBundle, i32> {
    let mut bundle = load_scenario(path).map_err(config_error)?;
    if let Some(seed) = global.seed {
        bundle = bundle.with_seed(seed);
    }
    if let Some(mode) = global.mode {
        bundle.scenario.interpolation = mode;
    }
    Ok(bundle)
}

fn print_suite(report: &SuiteReport) {
    for r in &report.reports {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} [{}] steps={} sim={:.2}s wall={:.3}s violations={} hash={}",
            r.scenario_id,
            r.reasoner,
            r.steps,
            r.simulated_duration,
            r.wall_duration,
            r.violations.len(),
            r.trace_hash
        );
        if let Some(e) = &r.error {
            println!("    error: {e}");
        }
        for v in r.validators.iter().filter(|v| !v.passed) {
            let first = r.violations_of(&v.name).next().map(|x| format!(" first at step {}: {}", x.step, x.message));
            println!("    {} failed ({} violations){}", v.name, v.violations, first.unwrap_or_default());
        }
        if r.error.is_none() && !r.termination_met {
            println!("    termination condition not met");
        }
    }
    println!("{}/{} passed", report.totals.passed, report.totals.total);
}

#[allow(clippy::too_many_arguments)]
fn run(
    global: &Global,
    scenario: Option<PathBuf>,
    suite: Option<PathBuf>,
    report_dir: Option<PathBuf>,
    history_dir: Option<PathBuf>,
    reasoner: String,
    min_gap: f64,
    timeout: f64,
    serial: bool,
    json: bool,
) -> Result<i32, i32> {
    let manifest = match (scenario, suite) {
        (_, Some(path)) => load_manifest(&path).map_err(config_error)?,
        (Some(path), None) => {
            let bundle = load(&path, global)?;
            SuiteManifest {
                name: bundle.scenario.id.clone(),
                dt: DEFAULT_DT,
                timeout,
                reasoner,
                validators: ValidatorConfig::applicable(&bundle, min_gap, timeout),
                scenarios: vec![SuiteEntry {
                    path,
                    validators: None,
                    reasoner: None,
                    timeout: None,
                    seed: None,
                }],
            }
        }
        (None, None) => return Err(config_error("give a scenario file or --suite <manifest>")),
    };
    let options = SuiteOptions {
        parallel: !serial,
        revision: global.revision.clone(),
        seed: global.seed,
        dt: global.dt,
        mode: global.mode,
    };
    let report = run_suite(&manifest, &options);
    if json {
        println!("{}", canonical_json(&report));
    } else {
        print_suite(&report);
    }
    if let Some(dir) = report_dir {
        let (j, h) = write_reports(&report, &dir).map_err(config_error)?;
        eprintln!("wrote {} and {}", j.display(), h.display());
    }
    if let Some(dir) = history_dir {
        let p = append_history(&report, &dir).map_err(config_error)?;
        eprintln!("history entry {}", p.display());
    }
    if report.reports.iter().any(|r| r.error.is_some()) {
        return Ok(EXIT_CONFIG_ERROR);
    }
    Ok(report.exit_code())
}

fn serve_cmd(global: &Global, scenario: &Path, host: &str, port: u16, reasoner: &str, no_reasoner: bool) -> Result<i32, i32> {
    let bundle = load(scenario, global)?;
    let reasoner = if no_reasoner {
        None
    } else {
        Some(reasoner.parse::<ReasonerSpec>().and_then(|s| s.build()).map_err(config_error)?)
    };
    let configs = ValidatorConfig::applicable(&bundle, 1.0, DEFAULT_TIMEOUT)
        .into_iter()
        .filter(|c| !matches!(c, ValidatorConfig::Timeout { .. }))
        .collect::<Vec<_>>();
    let validators = build_validators(&configs, &bundle).map_err(config_error)?;
    let session = Session::new(&bundle, reasoner, validators, global.dt.unwrap_or(SESSION_DT)).map_err(config_error)?;
    let handle = serve(session, (host, port)).map_err(config_error)?;
    eprintln!(
        "serving `{}` on {} (newline-delimited JSON or WebSocket)",
        bundle.scenario.id,
        handle.local_addr()
    );
    handle.wait();
    Ok(EXIT_SUCCESS)
}

fn compare_cmd(global: &Global, scenario: &Path, reasoners: &str, min_gap: f64, timeout: f64, json: bool) -> Result<i32, i32> {
    let bundle = load(scenario, global)?;
    let specs = ReasonerSpec::parse_list(reasoners).map_err(config_error)?;
    let built = specs.iter().map(ReasonerSpec::build).collect::<Result<Vec<_>, _>>().map_err(config_error)?;
    let configs = ValidatorConfig::applicable(&bundle, min_gap, timeout);
    let config = RunConfig {
        dt: global.dt.unwrap_or(DEFAULT_DT),
        timeout,
        record_trace: true,
    };
    let report = compare_runs(&bundle, built, &configs, config).map_err(config_error)?;
    if json {
        println!("{}", canonical_json(&report));
    } else {
        println!("{} (seed {})", report.scenario_id, report.seed);
        for e in &report.entries {
            let time = e.completion_time.map(|t| format!("{t:.2}s")).unwrap_or_else(|| "-".into());
            let status = if e.failed {
                "FAILED"
            } else if e.passed {
                "pass"
            } else {
                "fail"
            };
            println!(
                "  {:<40} {status:<6} completion={time:<8} violations={:<5} hash={}",
                e.reasoner, e.violation_count, e.trace_hash
            );
        }
        for d in &report.divergences {
            match d.step {
                Some(s) => println!("  {} vs {}: diverge at step {s}", d.a, d.b),
                None => println!("  {} vs {}: identical traces", d.a, d.b),
            }
        }
        println!("  ranking: {}", report.ranking.join(" > "));
    }
    Ok(if report.entries.iter().all(|e| e.passed) { EXIT_SUCCESS } else { EXIT_FAILURE })
}

fn check_cmd(files: &[PathBuf]) -> i32 {
    let mut code = EXIT_SUCCESS;
    for f in files {
        match check_file(f) {
            Ok(a) => println!("ok {}: {a}", f.display()),
            Err(e) => {
                println!("error {e}");
                code = EXIT_CONFIG_ERROR;
            }
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    if let Some(dt) = g.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return ExitCode::from(config_error(format!("--dt must be > 0, got {dt}")) as u8);
        }
    }
    let result = match cli.command {
        Command::Run {
            scenario,
            suite,
            report_dir,
            history_dir,
            reasoner,
            min_gap,
            timeout,
            serial,
            json,
        } => run(g, scenario, suite, report_dir, history_dir, reasoner, min_gap, timeout, serial, json),
        Command::Serve {
            scenario,
            port,
            host,
            reasoner,
            no_reasoner,
        } => serve_cmd(g, &scenario, &host, port, &reasoner, no_reasoner),
        Command::Compare {
            scenario,
            reasoners,
            min_gap,
            timeout,
            json,
        } => compare_cmd(g, &scenario, &reasoners, min_gap, timeout, json),
        Command::Check { files } => Ok(check_cmd(&files)),
    };
    let code = result.unwrap_or_else(|c| c);
    ExitCode::from(code as u8)
}
