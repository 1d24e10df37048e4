use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loctime::report::{error_summary, to_json_string, write_file};
use loctime::{config_value, exit, list_models, validate, Experiment, ExperimentConfig, RunError};

/// `loctime <experiment> --config <path>` runs an experiment; `list-models`
/// and `validate` are the only subcommands.
#[derive(Parser)]
#[command(name = "loctime", version, about = "Local-time continuity experiments on finite Markov chains")]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Print the model catalog as JSON.
    ListModels,
    /// Check a config and print the resolved plan without simulating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment name; overrides `experiment` in the config.
    experiment: Option<String>,
    #[arg(long, required = true)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, env = "LOCTIME_OUT_DIR")]
    out: Option<PathBuf>,
}

fn fail(err: &RunError, config: Option<&ExperimentConfig>, out: Option<&PathBuf>) -> ExitCode {
    let record = err.record();
    eprintln!("{}", serde_json::to_string(&record).expect("record serializes"));
    if let Some(dir) = out {
        let text = error_summary(config.map(config_value), &record);
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = write_file(&dir.join("summary.json"), &text);
        }
    }
    ExitCode::from(record.exit_code as u8)
}

fn resolve(args: &RunArgs) -> Result<ExperimentConfig, RunError> {
    let mut cfg = ExperimentConfig::load(args.config.as_deref().expect("clap enforces --config"))?;
    if let Some(name) = &args.experiment {
        cfg.experiment = Experiment::parse(name).ok_or_else(|| {
            let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            RunError::config("experiment", format!("unknown experiment `{name}`; expected one of {}", names.join(", ")))
        })?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(e) => return fail(&e, None, args.out.as_ref()),
    };
    let bundle = match loctime::run(&cfg) {
        Ok(b) => b,
        Err(e) => return fail(&e, Some(&cfg), Some(&cfg.out_dir)),
    };
    if let Err(e) = bundle.write(&cfg.out_dir) {
        return fail(&e, Some(&cfg), None);
    }
    for line in &bundle.log {
        println!("{line}");
    }
    println!("wrote {}", cfg.out_dir.display());
    if bundle.passed {
        ExitCode::from(exit::PASS as u8)
    } else {
        ExitCode::from(exit::CHECKS_FAILED as u8)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        None => run(cli.run),
        Some(Command::ListModels) => {
            print!("{}", to_json_string(&list_models()));
            ExitCode::SUCCESS
        }
        Some(Command::Validate { config }) => {
            let checked = ExperimentConfig::load(&config).and_then(|cfg| validate(&cfg).map(|v| (cfg, v)));
            match checked {
                Ok((cfg, v)) => {
                    print!(
                        "{}",
                        to_json_string(&serde_json::json!({
                            "valid": true,
                            "experiment": cfg.experiment.name(),
                            "states": v.states,
                            "reversible": v.reversible,
                            "plan": v.plan,
                        }))
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, None, None),
            }
        }
    }
}
