use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rydsim::config::{preset, ExperimentConfig, ExperimentKind, PRESETS};
use rydsim::run::execute;
use rydsim::{Error, Result};

#[derive(Parser)]
#[command(name = "rydsim", version, about = "Rydberg atom-array simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collective Rabi oscillations of small blockaded clusters.
    Rabi(RunArgs),
    /// Detuning sweep across the ordering transition.
    Sweep(RunArgs),
    /// Sweep followed by a resonant hold.
    Quench(RunArgs),
    /// Classical thermal-ensemble observables.
    Thermal(RunArgs),
    /// Maximum-likelihood inversion of detection errors.
    Reconstruct(RunArgs),
    /// List the built-in presets, or print one as JSON.
    Presets {
        name: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration name (see `rydsim presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (default: out/<subcommand>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &RunArgs, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
    };
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "configuration is a '{}' experiment, not '{}'",
            cfg.kind.name(),
            kind.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.sampling.seed = Some(seed);
    }
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<()> {
    let (kind, args) = match command {
        Command::Presets { name: None } => {
            for name in PRESETS {
                println!("{name}");
            }
            return Ok(());
        }
        Command::Presets { name: Some(name) } => {
            println!("{}", preset(&name)?.to_json());
            return Ok(());
        }
        Command::Rabi(a) => (ExperimentKind::Rabi, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::Quench(a) => (ExperimentKind::Quench, a),
        Command::Thermal(a) => (ExperimentKind::Thermal, a),
        Command::Reconstruct(a) => (ExperimentKind::Reconstruct, a),
    };
    let cfg = load(&args, kind)?;
    let dir = args
        .out
        .or_else(|| cfg.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    for path in execute(&cfg, &dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rydsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
