use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

mod config;
mod error;
mod plot;
mod run;

use config::{ExperimentConfig, Mode};
use error::{CliError, Failure};
use run::Report;

#[derive(Parser)]
#[command(name = "ldgate", version, about = "Two-ion gates beyond the Lamb-Dicke limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the gate conditions for one set of resonance integers.
    SolveGate,
    /// Evolve a state under the pulse pair, optionally against a numeric oracle.
    Evolve,
    /// Success probability over a grid of one gate parameter.
    Sweep,
    /// Rotation-then-gate entangling sequence.
    Entangle,
    /// Full vs effective Hamiltonian over a range of Omega/nu.
    ValidateRwa,
    /// Every gate solution reachable from the seed grid.
    ScanIntegers,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Mode {
        match c {
            Command::SolveGate => Mode::SolveGate,
            Command::Evolve => Mode::Evolve,
            Command::Sweep => Mode::Sweep,
            Command::Entangle => Mode::Entangle,
            Command::ValidateRwa => Mode::ValidateRwa,
            Command::ScanIntegers => Mode::ScanIntegers,
        }
    }
}

#[derive(Args)]
struct Options {
    /// TOML config, or a summary.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    seed_eta1: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    seed_eta2: Option<f64>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.opts.config {
        Some(path) => config::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mode = Mode::from(cli.command);
    match cfg.mode {
        Some(m) if m != mode => {
            return Err(CliError::Config(format!(
                "config is for mode {} but {} was requested",
                m.name(),
                mode.name()
            )));
        }
        _ => cfg.mode = Some(mode),
    }
    if let Some(dir) = &cli.opts.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(j) = cli.opts.jobs {
        cfg.run.jobs = j;
    }
    if let Some(x) = cli.opts.seed_eta1 {
        cfg.gate.seed_eta1 = x;
    }
    if let Some(x) = cli.opts.seed_eta2 {
        cfg.gate.seed_eta2 = x;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn persist(cfg: &ExperimentConfig, hash: &str, report: &Report, failure: Option<&CliError>) -> Result<(), CliError> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    if let Some(csv) = &report.csv {
        write(&dir.join("results.csv"), csv)?;
    }
    if !report.plots.is_empty() {
        let plots = dir.join("plots");
        fs::create_dir_all(&plots).map_err(|source| CliError::Io { path: plots.clone(), source })?;
        for (name, svg) in &report.plots {
            write(&plots.join(format!("{name}.svg")), svg)?;
        }
    }
    let summary = json!({
        "toolkit_version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "mode": cfg.mode().name(),
        "status": failure.map_or("ok", |e| e.failure().status()),
        "error": failure.map(|e| e.to_string()),
        "config": cfg,
        "results": Value::Object(report.results.clone()),
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&dir.join("summary.json"), &(text + "\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.failure().exit_code());
        }
    };
    let hash = cfg.hash();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.run.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} workers: {e}", cfg.run.jobs);
            return ExitCode::from(1);
        }
    };
    let mut report = Report::default();
    let outcome = pool.install(|| run::run(&cfg, &hash, &mut report));
    let failure = outcome.err();
    if let Some(e) = &failure {
        eprintln!("error: {e}");
        if e.failure() == Failure::InvalidConfig {
            return ExitCode::from(2);
        }
    }
    if let Err(e) = persist(&cfg, &hash, &report, failure.as_ref()) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    println!("wrote {} (config hash {hash})", cfg.output.dir.display());
    match failure {
        Some(e) => ExitCode::from(e.failure().exit_code()),
        None => ExitCode::SUCCESS,
    }
}
