use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;
use serde::Serialize;

mod commands;
mod config;

use config::ExperimentConfig;

/// Runs one experiment described by a TOML config and writes CSV artifacts.
///
/// Values are resolved in increasing order of precedence: the config file,
/// then each `--set` in the order given, then `--output-dir` and `--seed`.
#[derive(Parser, Debug)]
#[command(name = "qkrylov", version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Override a config value, e.g. `--set solve.length=8`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Directory for artifacts; overrides `output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Seed for all randomness; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    qkrylov_version: &'static str,
    cli_version: &'static str,
    wall_seconds: f64,
    artifacts: Vec<String>,
    config: &'a ExperimentConfig,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::load(&cli.config, &cli.set)?;
    if let Some(dir) = cli.output_dir {
        cfg.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    let started = Instant::now();
    let artifacts = commands::dispatch(&cfg)?;
    let wall_seconds = started.elapsed().as_secs_f64();

    let echo = cfg.output_dir.join("effective_config.toml");
    std::fs::write(&echo, cfg.to_toml_string()?).with_context(|| format!("writing {}", echo.display()))?;
    let manifest = Manifest {
        qkrylov_version: qkrylov::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        wall_seconds,
        artifacts: artifacts
            .iter()
            .filter_map(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .collect(),
        config: &cfg,
    };
    let path = cfg.output_dir.join("manifest.toml");
    std::fs::write(&path, toml::to_string(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {} artifacts to {} in {wall_seconds:.2}s", artifacts.len(), cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
