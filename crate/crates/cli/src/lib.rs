//! Library side of the `sta` binary: argument model, run configuration and
//! one function per subcommand. Each command returns an [`Outcome`] whose
//! JSON summary goes to stdout; CSV files go to `--out-dir`.

pub mod commands;
pub mod config;
pub mod output;
pub mod seeded;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Params, RunConfig};

/// Failures that map to exit code 2. Verification failures are not errors:
/// they come back as an [`Outcome`] with `passed == false` (exit code 1).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] sta_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Result of one command run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: serde_json::Value,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sta", version, about = "Invariant-based protocol design, verification and isospectral flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a protocol and verify it by propagation.
    Design {
        #[command(subcommand)]
        target: DesignTarget,
    },
    /// Verify a two-level Hamiltonian/invariant pair given as Pauli-coefficient CSVs.
    Verify(VerifyArgs),
    /// Run an isospectral flow.
    Flow {
        #[command(subcommand)]
        kind: FlowKind,
    },
    /// Spectral counterdiabatic term of a rotating two-level Hamiltonian.
    CdTerm(Params),
    /// Least-squares counterdiabatic term over a Pauli ansatz.
    CdVariational(Params),
    /// Independent runs over a list of values, executed concurrently.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum DesignTarget {
    /// Bloch-vector transport with a constant or y-axis field.
    #[command(name = "two-level")]
    TwoLevel(Params),
    /// Frequency ramp of a harmonic trap from the polynomial scale factor.
    Oscillator(Params),
}

#[derive(Debug, Subcommand)]
pub enum FlowKind {
    /// Wegner flow of a seeded random Hermitian matrix.
    Wegner(Params),
    /// Open Toda chain from seeded couplings.
    Toda(Params),
    /// Ground level of `−∂² + u` along a KdV soliton.
    Kdv(Params),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// CSV with columns `t,x,y,z`: `H = x σx + y σy + z σz`.
    #[arg(long)]
    pub hamiltonian: PathBuf,
    /// CSV with columns `t,x,y,z` for the invariant, same time column.
    #[arg(long)]
    pub invariant: PathBuf,
    /// Invariant eigenstate to transport (0 = lowest).
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    /// Bound on residual and drift; fidelity must reach `1 − tol`.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    /// Values are `h_over_h0`.
    TwoLevel,
    /// Values are `omega0_tf`.
    Oscillator,
    /// Values are seeds.
    Wegner,
    /// Values are seeds.
    Toda,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub params: Params,
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    use commands::*;
    match cli.command {
        Command::Design { target } => match target {
            DesignTarget::TwoLevel(p) => design::two_level(&RunConfig::resolve(&p, design::two_level_defaults())?),
            DesignTarget::Oscillator(p) => design::oscillator(&RunConfig::resolve(&p, design::oscillator_defaults())?),
        },
        Command::Verify(args) => verify::run(&args),
        Command::Flow { kind } => match kind {
            FlowKind::Wegner(p) => flow::wegner(&RunConfig::resolve(&p, flow::wegner_defaults())?),
            FlowKind::Toda(p) => flow::toda(&RunConfig::resolve(&p, flow::toda_defaults())?),
            FlowKind::Kdv(p) => flow::kdv(&RunConfig::resolve(&p, flow::kdv_defaults())?),
        },
        Command::CdTerm(p) => cd::term(&RunConfig::resolve(&p, cd::defaults())?),
        Command::CdVariational(p) => cd::variational(&RunConfig::resolve(&p, cd::defaults())?),
        Command::Sweep(args) => sweep::run(&args),
    }
}
