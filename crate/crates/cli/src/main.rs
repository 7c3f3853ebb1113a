use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spfilter_cli::commands;
use spfilter_cli::config::{Experiment, ExperimentConfig};
use spfilter_cli::CliError;

#[derive(Parser)]
#[command(name = "spfilter", version, about = "Structure-preserving filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project the clamped sinusoid over an order sweep, filtered and unfiltered.
    Project(Flags),
    /// Smooth 2D advection on the composite triangle/quad mesh.
    Advect2d(Flags),
    /// Smooth 3D advection on a hexahedral mesh.
    Advect3d(Flags),
    /// Solid-body rotation of a slotted cylinder, a cone and a hump.
    Rotate(Flags),
    /// Torus-shaped field advected on hexahedral and tetrahedral meshes.
    Torus3d(Flags),
    /// Grid search for the line-search parameters c and gamma.
    Tune(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Skip the filtered run.
    #[arg(long)]
    no_filter: bool,
    /// Polynomial order(s), comma separated.
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Admissible negativity in field units.
    #[arg(long)]
    tol: Option<f64>,
    /// Line-search shrink factor and sufficient-decrease constant.
    #[arg(long)]
    c: Option<f64>,
    /// Initial line-search step.
    #[arg(long)]
    gamma: Option<f64>,
}

fn build(experiment: Experiment, flags: Flags) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::defaults(experiment);
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)?;
        cfg.apply_text(&text)?;
    }
    if let Some(dir) = flags.output {
        cfg.output = dir;
    }
    if flags.no_filter {
        cfg.filter = false;
    }
    let overrides = [
        ("orders", flags.order),
        ("dt", flags.dt.map(|v| v.to_string())),
        ("steps", flags.steps.map(|v| v.to_string())),
        ("tol", flags.tol.map(|v| v.to_string())),
        ("c", flags.c.map(|v| v.to_string())),
        ("gamma", flags.gamma.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            cfg.set(key, &value).map_err(CliError::Config)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::Project(f) => (Experiment::Project, f),
        Command::Advect2d(f) => (Experiment::Advect2d, f),
        Command::Advect3d(f) => (Experiment::Advect3d, f),
        Command::Rotate(f) => (Experiment::Rotate, f),
        Command::Torus3d(f) => (Experiment::Torus3d, f),
        Command::Tune(f) => (Experiment::Tune, f),
    };
    let result = build(experiment, flags).and_then(|cfg| {
        log::info!("running {} into {}", experiment.name(), cfg.output.display());
        commands::run(&cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
