//! Driver for the posharm pipeline: configuration, deterministic seeding and
//! report emission.

pub mod config;
pub mod curve_file;
pub mod report;

mod commands;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "posharm", version, about = "Positive curves, harmonic maps into Y_d and stability certificates")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that override fields of the configuration file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub window: Option<f64>,
    #[arg(long, global = true, value_name = "PATH")]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Curvature calibration, inequality suites and the separation table.
    Geometry {
        #[command(subcommand)]
        action: GeometryAction,
    },
    Curve {
        #[command(subcommand)]
        action: CurveAction,
    },
    Embed {
        #[command(subcommand)]
        action: EmbedAction,
    },
    Harmonic {
        #[command(subcommand)]
        action: HarmonicAction,
    },
    Stability {
        #[command(subcommand)]
        action: StabilityAction,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum GeometryAction {
    Selftest,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CurveAction {
    /// Builds the curve and writes it back with sampled unipotents.
    Build,
    /// Sampled quasisymmetry constants of the maps and of the flag curve.
    CheckQs,
    /// Non-transverse parameters against random subspaces.
    CountNontransverse,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum EmbedAction {
    /// Evaluates the embedding on the mesh of `B(center, radius)`.
    Run,
    Constants,
    Morse,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum HarmonicAction {
    Solve,
    Exhaust,
    Diagnostics,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum StabilityAction {
    Certify,
    Drift,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Geometry { action: GeometryAction::Selftest } => "geometry selftest",
            Command::Curve { action: CurveAction::Build } => "curve build",
            Command::Curve { action: CurveAction::CheckQs } => "curve check-qs",
            Command::Curve { action: CurveAction::CountNontransverse } => "curve count-nontransverse",
            Command::Embed { action: EmbedAction::Run } => "embed run",
            Command::Embed { action: EmbedAction::Constants } => "embed constants",
            Command::Embed { action: EmbedAction::Morse } => "embed morse",
            Command::Harmonic { action: HarmonicAction::Solve } => "harmonic solve",
            Command::Harmonic { action: HarmonicAction::Exhaust } => "harmonic exhaust",
            Command::Harmonic { action: HarmonicAction::Diagnostics } => "harmonic diagnostics",
            Command::Stability { action: StabilityAction::Certify } => "stability certify",
            Command::Stability { action: StabilityAction::Drift } => "stability drift",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(std::io::Error),
    /// The report at `report` carries the diagnostic payload.
    Numerical {
        error: posharm::Error,
        report: PathBuf,
    },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Numerical { error, report } => write!(f, "{error} (details in {})", report.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Numerical { .. } => 3,
        }
    }
}

/// The configuration file (or defaults) with the flags applied, validated.
pub fn resolve_config(o: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    if let Some(v) = o.d {
        cfg.d = v;
    }
    if let Some(v) = o.radius {
        cfg.radius = v;
    }
    if let Some(v) = &o.radii {
        cfg.radii = v.clone();
    }
    if let Some(v) = o.delta {
        cfg.delta = v;
    }
    if let Some(v) = o.window {
        cfg.window = Some(v);
    }
    if let Some(v) = &o.curve {
        cfg.curve = Some(v.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and returns the path of its JSON report.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let cfg = resolve_config(&cli.overrides)?;
    run_with(&cli.command, &cfg)
}

pub fn run_with(command: &Command, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    match commands::execute(command, cfg) {
        Ok(outcome) => Ok(report::write_success(cfg, command.name(), &outcome)?),
        Err(commands::Failure::Config(e)) => Err(e.into()),
        Err(commands::Failure::Numerical(error)) => {
            let report = report::write_failure(cfg, command.name(), &error)?;
            Err(CliError::Numerical { error, report })
        }
    }
}
