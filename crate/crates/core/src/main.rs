use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mfc_core::cli::{load_config, run_scenario, FlagOverrides, ScenarioName};

/// Run a named model-free control experiment and write its artifacts.
#[derive(Debug, Parser)]
#[command(name = "mfc", version)]
struct Args {
    /// Scenario name.
    #[arg(long, value_parser = scenario_names())]
    scenario: Option<String>,
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; artifacts go to `<out>/<scenario>/`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override one config key, e.g. `--set delta=0.8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn scenario_names() -> clap::builder::PossibleValuesParser {
    clap::builder::PossibleValuesParser::new(ScenarioName::ALL.map(|n| n.as_str()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let flags = FlagOverrides { scenario: args.scenario, out: args.out, seed: args.seed, sets: args.set };
    let cfg = match load_config(args.config.as_deref(), &flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("mfc: configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_scenario(&cfg) {
        Ok(outcome) => {
            for (k, v) in &outcome.metrics {
                println!("{k} = {v}");
            }
            println!("artifacts in {}", outcome.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mfc: {} failed: {e}", cfg.name);
            ExitCode::FAILURE
        }
    }
}
