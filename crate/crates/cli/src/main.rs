use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zeno_lab::commands::{self, CommandOutput, Context};
use zeno_lab::config::RunConfig;
use zeno_lab::curve::write_atomic;
use zeno_lab::error::CliError;

/// Survival, pulsed-detection and resonance curves for unstable states.
#[derive(Parser)]
#[command(name = "zeno-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival probability on a time grid.
    Survival(Common),
    /// No-click probability under repeated band detection.
    Zeno(Common),
    /// Cross-check the state-vector simulation against the closed forms.
    Validate(Common),
    /// Self-energy, spectral function and Breit-Wigner comparison.
    Qft(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in parameter set; a config file given alongside overrides it.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (defaults to `output.dir`, then the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled trajectories.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(common: &Common) -> Result<(RunConfig, Context), CliError> {
    let preset = common
        .preset
        .as_deref()
        .map(commands::find_preset)
        .transpose()?;
    let user = match &common.config {
        Some(path) => std::fs::read_to_string(path)?,
        None if preset.is_some() => String::new(),
        None => return Err(CliError::config("config", "pass --config or --preset")),
    };
    let cfg = match &preset {
        Some(p) => RunConfig::parse_with_base(&commands::preset_config(p), &user)?,
        None => RunConfig::parse(&user)?,
    };
    Ok((
        cfg,
        Context {
            preset,
            seed: common.seed,
        },
    ))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("ZENO_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        CliError::config(
            "ZENO_LAB_THREADS",
            format!("`{value}` is not a thread count"),
        )
    })?;
    // a pool that is already initialised keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (name, common) = match &cli.command {
        Command::Survival(c) => ("survival", c),
        Command::Zeno(c) => ("zeno", c),
        Command::Validate(c) => ("validate", c),
        Command::Qft(c) => ("qft", c),
    };
    let (cfg, ctx) = load(common)?;
    let (output, failure): (CommandOutput, Option<CliError>) = match name {
        "survival" => (commands::cmd_survival(&cfg, &ctx)?, None),
        "zeno" => (commands::cmd_zeno(&cfg, &ctx)?, None),
        "validate" => commands::cmd_validate(&cfg, &ctx)?,
        _ => (commands::cmd_qft(&cfg, &ctx)?, None),
    };
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    for artifact in &output.artifacts {
        let path = write_atomic(&dir, &artifact.name, &artifact.contents)?;
        println!("{}", path.display());
    }
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
