//! `gmcc`: kernel evaluation, EMSE prediction and Monte Carlo experiments
//! driven by JSON configs.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use gmcc_core::harness::Execution;

use crate::commands::Rendered;
use crate::error::CliError;
use crate::output::Provenance;

#[derive(Debug, Parser)]
#[command(name = "gmcc", version, about = "Generalized correntropy filtering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel density and GMCC nonlinearity on a set of error values (CSV).
    KernelEval(Common),
    /// Steady-state EMSE prediction with diagnostics (JSON).
    Theory(Common),
    /// Probability of divergence over a step-size grid (CSV).
    Pod(Common),
    /// Simulated versus predicted steady-state EMSE (CSV).
    Emse(Common),
    /// Averaged learning curves of several algorithms (CSV).
    Converge(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Override a config value by dotted path, e.g. `setup.noise.c=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `--set num_runs=N`.
    #[arg(long)]
    runs: Option<usize>,
    /// Shorthand for `--set base_seed=S`.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn extra(&self, name: &str) -> Result<Vec<(&'static str, Value)>, CliError> {
        let mut extra = Vec::new();
        if let Some(n) = self.runs {
            extra.push(("num_runs", json!(n)));
        }
        if let Some(s) = self.seed {
            extra.push(("base_seed", json!(s)));
        }
        if !extra.is_empty() && matches!(name, "kernel-eval" | "theory") {
            return Err(CliError::Config(format!("{name} takes no --runs or --seed")));
        }
        Ok(extra)
    }
}

/// Sizes the global rayon pool from `GMCC_THREADS` (unset or 0 = automatic).
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GMCC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("GMCC_THREADS={raw}: expected a non-negative integer")))?;
    if n > 0 {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run_with<T, F>(name: &str, args: &Common, render: F) -> Result<Vec<String>, CliError>
where
    T: DeserializeOwned,
    F: FnOnce(&T, &Provenance<'_>) -> Result<Rendered, CliError>,
{
    let extra = args.extra(name)?;
    let loaded = config::load::<T>(&args.config, &args.overrides, &extra)?;
    let base_seed = loaded.effective.get("base_seed").and_then(Value::as_u64);
    let prov = Provenance {
        subcommand: name,
        config_hash: &loaded.hash,
        base_seed,
        effective_config: &loaded.effective,
    };
    let rendered = render(&loaded.config, &prov).map_err(|e| with_path(e, &args.config))?;
    output::emit(&args.out, &rendered.body, &prov)?;
    Ok(rendered.warnings)
}

fn with_path(err: CliError, path: &Path) -> CliError {
    match err {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    }
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    configure_threads()?;
    let exec = Execution::Parallel;
    match &cli.command {
        Command::KernelEval(a) => run_with("kernel-eval", a, commands::kernel_eval),
        Command::Theory(a) => run_with("theory", a, commands::theory),
        Command::Pod(a) => run_with("pod", a, |c, p| commands::pod(c, p, exec)),
        Command::Emse(a) => run_with("emse", a, |c, p| commands::emse(c, p, exec)),
        Command::Converge(a) => run_with("converge", a, |c, p| commands::converge(c, p, exec)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gmcc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
