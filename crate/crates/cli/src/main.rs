//! `garland-kit`: normal forms, flow embeddings, garlands, atlases, map
//! orbits and phase portraits from JSON inputs.

mod commands;
mod input;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use garland_core::atlas::Window;
use garland_core::FlowModel;
use serde::Serialize;
use thiserror::Error;

use crate::input::Document;
use crate::output::{sha256_hex, Artifacts};

/// Smallest tolerance any override may request.
pub const TOL_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] garland_core::Error),
    #[error("schema violation {0}")]
    Schema(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// 1 for bad input, 2 for domain errors, 3 for solver failures.
    pub fn exit_code(&self) -> u8 {
        use garland_core::Error as E;
        match self {
            CliError::Core(E::Domain(_) | E::Unsupported(_)) => 2,
            CliError::Core(E::Solver(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Resonant normal form of a map series.
    Normalize,
    /// Flow embedding of the normal form and its residual decay.
    Embed,
    /// Equilibria and garland label of a truncated flow.
    Garland,
    /// Two-parameter region atlas in (mu1, mu2).
    Atlas,
    /// Period-q orbits of a map.
    Orbit,
    /// Trajectories of a truncated flow.
    Portrait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Symmetric,
    SymBreak,
    Reversible,
}

impl From<ModelArg> for FlowModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Symmetric => FlowModel::Symmetric,
            ModelArg::SymBreak => FlowModel::SymBreakConservative,
            ModelArg::Reversible => FlowModel::ReversibleNonCons,
        }
    }
}

#[derive(Debug, Clone, Serialize, Parser)]
#[command(name = "garland-kit", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Input document (schema "garland-kit/1").
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory for artifacts and manifest.json.
    #[arg(long, global = true, default_value = "garland-out")]
    pub out: PathBuf,
    /// Seed for randomized sampling (portrait initial points).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// mu1_min,mu1_max,mu2_min,mu2_max
    #[arg(long, global = true, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<Window>,
    /// Grid points per atlas axis.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    #[arg(long, global = true)]
    pub q: Option<u32>,
    #[arg(long, global = true)]
    pub p: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, global = true)]
    pub tol_newton: Option<f64>,
    #[arg(long, global = true)]
    pub tol_ode: Option<f64>,
    /// Orbit search radius.
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Orbit period; defaults to q.
    #[arg(long, global = true)]
    pub period: Option<u32>,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [mu1_min, mu1_max, mu2_min, mu2_max] = v[..] else {
        return Err(format!("expected 4 comma-separated numbers, got {}", v.len()));
    };
    let w = Window {
        mu1_min,
        mu1_max,
        mu2_min,
        mu2_max,
    };
    w.validate().map_err(|e| e.to_string())?;
    Ok(w)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    schema: &'static str,
    subcommand: Command,
    config: &'a Cli,
    input: Option<serde_json::Value>,
    input_sha256: Option<String>,
    threads: usize,
    wall_time_s: f64,
    notes: &'a [String],
    artifacts: &'a [output::ArtifactRecord],
    error: Option<String>,
    exit_code: u8,
}

fn configure_threads() -> Result<usize, CliError> {
    if let Ok(v) = std::env::var("GARLAND_KIT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("GARLAND_KIT_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn check_tolerances(cli: &Cli) -> Result<(), CliError> {
    for (name, v) in [("--tol-newton", cli.tol_newton), ("--tol-ode", cli.tol_ode)] {
        if let Some(v) = v {
            if !(v >= TOL_FLOOR && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} {v:e} is below the hard floor {TOL_FLOOR:e}")));
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let threads = configure_threads()?;
    check_tolerances(cli)?;
    let (doc, raw) = match &cli.input {
        Some(path) => {
            let (doc, text) = input::read(path)?;
            (doc, Some(text))
        }
        None => (Document::empty(), None),
    };
    let mut artifacts = Artifacts::new(&cli.out)?;
    let outcome = commands::dispatch(cli, &doc, raw.is_some(), &mut artifacts);
    let notes = outcome.as_ref().map(Vec::clone).unwrap_or_default();
    for n in &notes {
        eprintln!("note: {n}");
    }
    let manifest = Manifest {
        tool: "garland-kit",
        version: env!("CARGO_PKG_VERSION"),
        schema: input::SCHEMA,
        subcommand: cli.command,
        config: cli,
        input: raw.as_deref().map(serde_json::from_str).transpose().map_err(|e| CliError::Io(e.to_string()))?,
        input_sha256: raw.as_deref().map(|t| sha256_hex(t.as_bytes())),
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        notes: &notes,
        artifacts: artifacts.records(),
        error: outcome.as_ref().err().map(|e| e.to_string()),
        exit_code: outcome.as_ref().err().map_or(0, CliError::exit_code),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    let path = artifacts.dir().join("manifest.json");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    outcome?;
    for r in artifacts.records() {
        println!("{}", artifacts.dir().join(&r.file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("garland-kit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
