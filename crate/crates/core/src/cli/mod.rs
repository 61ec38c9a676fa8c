//! Command-line driver: one config file in, JSON records and CSV tables out.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 physical precondition violated, 4 field mapping requested on a
//! zero-current state (the report is still written).

mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::RunSummary;
pub use config::{parse_config, ConfigError, RunConfig};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PHYSICS: i32 = 3;
pub const EXIT_ZERO_CURRENT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("zero-current state: the field mapping is undefined for at least one domain (report written)")]
    ZeroCurrentMapping(RunSummary),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Physics { source, .. }) if source.is_physics_precondition() => EXIT_PHYSICS,
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Core(crate::Error::ZeroCurrent { .. }) | CliError::ZeroCurrentMapping(_) => EXIT_ZERO_CURRENT,
            CliError::Core(e) if e.is_physics_precondition() => EXIT_PHYSICS,
            CliError::Core(_) | CliError::Io { .. } => EXIT_OTHER,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "locsym", version, about = "Local symmetry currents of 1D wave scattering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Scattering amplitudes and x-resolved fields per energy.
    Solve(#[command(flatten)] CommonArgs),
    /// `Q`, `Q̃`, `J` per symmetry domain and x-resolved currents.
    Invariants(#[command(flatten)] CommonArgs),
    /// Structural and field-based symmetry-domain detection.
    Detect(#[command(flatten)] CommonArgs),
    /// Complete local symmetry decomposition and its constraint check.
    Decompose(#[command(flatten)] CommonArgs),
    /// Field mapping residuals across symmetry domains.
    Mapcheck(#[command(flatten)] CommonArgs),
    /// Bloch analysis of the `[band]` cell.
    Band(#[command(flatten)] CommonArgs),
    /// `Q(E)` and `Q̃(E)` per domain over the energy list.
    Scan(#[command(flatten)] CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Invariants(_) => "invariants",
            Command::Detect(_) => "detect",
            Command::Decompose(_) => "decompose",
            Command::Mapcheck(_) => "mapcheck",
            Command::Band(_) => "band",
            Command::Scan(_) => "scan",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a)
            | Command::Invariants(a)
            | Command::Detect(a)
            | Command::Decompose(a)
            | Command::Mapcheck(a)
            | Command::Band(a)
            | Command::Scan(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tol_u_rel: Option<f64>,
    #[arg(long)]
    pub min_width_rel: Option<f64>,
    #[arg(long)]
    pub constancy: Option<f64>,
    #[arg(long)]
    pub zero_current_rel: Option<f64>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub field_tol: Option<f64>,
    #[arg(long)]
    pub field_points: Option<usize>,
    #[arg(long)]
    pub pad: Option<f64>,
}

impl CommonArgs {
    /// Applies flag overrides and revalidates.
    pub fn apply(&self, mut config: RunConfig) -> Result<RunConfig, ConfigError> {
        let t = &mut config.tolerances;
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { t.$field = v; } )* };
        }
        set!(tol_u_rel, min_width_rel, constancy, zero_current_rel, n_samples, grid_step, field_tol, field_points);
        if self.pad.is_some() {
            t.pad = self.pad;
        }
        if let Some(out) = &self.out {
            config.output.dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

/// Runs one subcommand on an already validated configuration, writing into
/// `config.output.dir` (created if missing).
pub fn run(command: &Command, config: &RunConfig) -> Result<RunSummary, CliError> {
    let out = config.output.dir.as_path();
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let ctx = commands::Context { config, out };
    match command {
        Command::Solve(_) => commands::run_solve(&ctx),
        Command::Invariants(_) => commands::run_invariants(&ctx),
        Command::Detect(_) => commands::run_detect(&ctx),
        Command::Decompose(_) => commands::run_decompose(&ctx),
        Command::Mapcheck(_) => commands::run_mapcheck(&ctx),
        Command::Band(_) => commands::run_band(&ctx),
        Command::Scan(_) => commands::run_scan(&ctx),
    }
}

/// Parses the config named by `command`, applies overrides and runs it.
pub fn execute(command: Command) -> Result<RunSummary, CliError> {
    let args = command.args();
    let config = args.apply(parse_config(&args.config)?)?;
    run(&command, &config)
}
