use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use leosim::harness::{self, Experiment, HarnessError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "leosim", version, about = "LEO constellation latency and training-time simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inference latency of each architecture for the configured satellite counts.
    LatencyTable(Common),
    /// Centralized baseline vs. FedAvg time-to-accuracy curves.
    Train(Common),
    /// Simulated satellite-to-ground RTTs over one orbital period.
    RttScan(Common),
    /// Run whatever experiment the config file names.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON). Required for `simulate`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn scenario(experiment: Option<Experiment>, common: &Common) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = match (&common.config, experiment) {
        (Some(path), _) => harness::load_config(path)?,
        (None, Some(exp)) => ScenarioConfig::defaults(exp),
        (None, None) => {
            return Err(HarnessError::Config(harness::ConfigError::Schema {
                key: "--config".into(),
                message: "simulate needs a scenario file".into(),
            }))
        }
    };
    if let Some(exp) = experiment {
        if cfg.experiment != exp && exp == Experiment::TrainingCurve && cfg.train.is_none() {
            cfg.train = Some(Default::default());
        }
        cfg.experiment = exp;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match &cli.command {
        Command::LatencyTable(c) => (Some(Experiment::LatencyTable), c),
        Command::Train(c) => (Some(Experiment::TrainingCurve), c),
        Command::RttScan(c) => (Some(Experiment::RttScan), c),
        Command::Simulate(c) => (None, c),
    };
    let result = scenario(experiment, common).and_then(|cfg| harness::run_scenario(&cfg));
    match result {
        Ok(report) => {
            if !common.quiet {
                println!("{} [{}]", report.tool_version, report.scenario.experiment.as_str());
                for path in report.paths() {
                    println!("  wrote {}", path.display());
                }
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report.stats).unwrap_or_default()
                );
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
