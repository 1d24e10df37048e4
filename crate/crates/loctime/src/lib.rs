//! Std companion of `loctime-core`. It turns a TOML config into a report
//! bundle, running replicas on a rayon pool.

use std::time::Instant;

use serde_json::{json, Value};

pub mod config;
pub mod error;
pub mod experiments;
pub mod pool;
pub mod report;

pub use config::{list_models, Experiment, ExperimentConfig, ModelSpec, Params};
pub use error::{exit, ErrorRecord, RunError};
pub use experiments::{execute, plan, Plan};
pub use pool::PoolRunner;
pub use report::{Check, ReportBundle, Table};

/// Result of static validation: the resolved plan plus model facts.
#[derive(Debug, Clone)]
pub struct Validation {
    pub plan: Plan,
    pub states: usize,
    pub reversible: bool,
}

/// Builds the model and resolves parameters without simulating.
pub fn validate(cfg: &ExperimentConfig) -> Result<Validation, RunError> {
    let model = cfg.model.build()?;
    let plan = plan(cfg, &model)?;
    let reversible = model.reversibility_violation() <= loctime_core::gaussian::REVERSIBILITY_TOL;
    Ok(Validation { plan, states: model.len(), reversible })
}

/// The resolved config as embedded in `summary.json`. Worker count and
/// output directory do not affect results, so they go to the runtime block.
pub fn config_value(cfg: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    let map = v.as_object_mut().expect("config is a table");
    map.remove("workers");
    map.remove("out_dir");
    v
}

/// Runs one experiment end to end and assembles the report bundle.
pub fn run(cfg: &ExperimentConfig) -> Result<ReportBundle, RunError> {
    let started = Instant::now();
    let model = cfg.model.build()?;
    let plan = plan(cfg, &model)?;
    let runner = PoolRunner::new(cfg.workers);
    let output = execute(&plan, cfg, &model, &runner)?;
    let passed = output.passed();
    let failed: Vec<&str> = output.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();

    let mut log = vec![
        format!(
            "loctime {} experiment={} seed={} workers={}",
            report::ARTIFACT_VERSION,
            cfg.experiment.name(),
            cfg.seed,
            cfg.workers
        ),
        format!("model: {} states, family {}", model.len(), model.family().name()),
    ];
    log.extend(output.log.iter().cloned());
    for c in &output.checks {
        let status = match (c.pass, c.label) {
            (true, Some(l)) => l,
            (true, None) => "pass",
            (false, _) => "FAIL",
        };
        log.push(format!(
            "[{status}] {}: estimate {:e} target {:e} tol {:e}",
            c.name, c.estimate, c.target, c.tolerance
        ));
    }
    log.push(format!("{} checks, {} failed", output.checks.len(), failed.len()));

    let summary = json!({
        "artifact_version": report::ARTIFACT_VERSION,
        "experiment": cfg.experiment.name(),
        "config": config_value(cfg),
        "plan": plan,
        "passed": passed,
        "failed_checks": failed,
        "checks": output.checks,
        "results": output.results,
        "tables": output.tables.iter().map(|t| format!("tables/{}.csv", t.name)).collect::<Vec<_>>(),
    });
    let runtime = json!({
        "workers": runner.workers(),
        "out_dir": cfg.out_dir,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    Ok(ReportBundle { summary, runtime, tables: output.tables, log, passed })
}
