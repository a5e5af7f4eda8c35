//! `shapelab`: command-line driver for the finite-element shape laboratory.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 when a solver fails.
//! Nothing is written unless the whole run succeeds.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use shapelab_core::energy::VolumeTrack;
use shapelab_core::Error;

use crate::commands::Context;
use crate::config::{load_config, load_domain, ExperimentConfig};
use crate::output::Header;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) => match e {
                Error::InvalidDomain(_)
                | Error::StarShapeViolation { .. }
                | Error::InvalidParams(_)
                | Error::DegenerateMesh(_)
                | Error::GridTooCoarse { .. }
                | Error::HardCapViolation { .. }
                | Error::NotNested
                | Error::Precondition(_) => 2,
                Error::NoConvergence { .. }
                | Error::SolveFailure(_)
                | Error::SignViolation { .. }
                | Error::KinkAtConstraint { .. } => 3,
            },
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "shapelab", version, about = "Spectral shape functionals on star-shaped planar domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Domain file (TOML with r0, center, modes); overrides the config.
    #[arg(long, global = true)]
    domain: Option<PathBuf>,
    /// Mesh size; overrides the config.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// RNG seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Weight of the nonlinearity; overrides the config.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also write a gnuplot script next to the CSVs.
    #[arg(long, global = true)]
    plot: bool,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First two Dirichlet eigenvalues.
    Eig {
        /// Dump the mesh as mesh.csv.
        #[arg(long)]
        mesh: bool,
    },
    /// Torsion function and its energy identity.
    Torsion,
    /// Itemized energy of a domain.
    Energy,
    /// Distances to the matched ball.
    Distances,
    /// Shape derivatives against finite differences on random fields.
    HadamardCheck,
    /// Free-boundary residual along the boundary.
    FbResidual,
    /// Deficit scaling along single Fourier modes.
    StabilitySweep,
    /// Nested-domain eigenfunction estimate.
    KeyEstimate {
        #[arg(long)]
        inner: Option<PathBuf>,
        #[arg(long)]
        outer: Option<PathBuf>,
    },
    /// Armijo descent from a domain.
    Minimize {
        #[arg(long, value_enum)]
        track: Option<Track>,
    },
    /// One selection-principle step from a seed domain.
    Selection,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Track {
    Renormalize,
    Penalized,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eig { .. } => "eig",
            Command::Torsion => "torsion",
            Command::Energy => "energy",
            Command::Distances => "distances",
            Command::HadamardCheck => "hadamard-check",
            Command::FbResidual => "fb-residual",
            Command::StabilitySweep => "stability-sweep",
            Command::KeyEstimate { .. } => "key-estimate",
            Command::Minimize { .. } => "minimize",
            Command::Selection => "selection",
        }
    }

    fn default_h(&self) -> f64 {
        match self {
            Command::HadamardCheck => 0.04,
            _ => 0.02,
        }
    }
}

fn resolve(cli: &Cli) -> Result<Context, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = &cli.domain {
        cfg.domain = Some(load_domain(p)?);
    }
    if let Some(h) = cli.h {
        cfg.h = Some(h);
    }
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = cli.tau {
        cfg.energy.tau = t;
    }
    match &cli.command {
        Command::KeyEstimate { inner, outer } => {
            if let Some(p) = inner {
                cfg.inner = Some(load_domain(p)?);
            }
            if let Some(p) = outer {
                cfg.outer = Some(load_domain(p)?);
            }
        }
        Command::Minimize { track: Some(t) } => {
            cfg.optimizer.track = match t {
                Track::Renormalize => VolumeTrack::Renormalize,
                Track::Penalized => VolumeTrack::Penalized,
            };
        }
        _ => {}
    }
    let v = cfg.energy.v;
    if cfg.domain.is_none() {
        cfg.domain = match &cli.command {
            Command::Minimize { .. } | Command::Selection => Some(commands::default_seed(v)),
            Command::HadamardCheck => None,
            _ => Some(commands::unit_disk(v)),
        };
    }
    let h = cfg.h.unwrap_or_else(|| cli.command.default_h());
    if !(h > 0.0 && h.is_finite()) {
        return Err(CliError::Validation(format!("mesh size must be positive, got {h}")));
    }
    cfg.h = Some(h);
    cfg.energy.validate()?;
    cfg.optimizer.validate()?;
    let name = cli.command.name();
    let canonical = toml::to_string(&cfg).map_err(|e| CliError::Validation(e.to_string()))?;
    let header = Header::new(name, &format!("command = \"{name}\"\n{canonical}"), h, cfg.seed, cfg.energy);
    Ok(Context { cfg, h, header, plot: cli.plot })
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let ctx = resolve(cli)?;
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let out = match &cli.command {
        Command::Eig { mesh } => commands::eig(&ctx, *mesh),
        Command::Torsion => commands::torsion(&ctx),
        Command::Energy => commands::energy(&ctx),
        Command::Distances => commands::distances(&ctx),
        Command::HadamardCheck => commands::hadamard_check(&ctx),
        Command::FbResidual => commands::fb_residual_cmd(&ctx),
        Command::StabilitySweep => commands::stability_sweep_cmd(&ctx),
        Command::KeyEstimate { .. } => commands::key_estimate(&ctx),
        Command::Minimize { .. } => commands::minimize_cmd(&ctx),
        Command::Selection => commands::selection(&ctx),
    }?;
    out.write_all(&cli.out)?;
    Ok(out.summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            let _ = std::io::stdout().write_all(summary.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("shapelab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
