//! `lqcd`: generate gauge fields, run the Wilson solvers, sweep the FPGA
//! performance model and benchmark the host kernel.
//!
//! Exit codes are scripting-stable: 0 success (solver converged), 1 the run
//! finished but missed its goal (non-convergence, failed reproduction),
//! 2 usage errors, 3 I/O or format errors.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use lqcd_core::geometry::LatticeDims;

mod manifest;
mod run;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    NotReproduced(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::NotConverged(_) | Failure::NotReproduced(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
        }
    }
}

impl From<lqcd_core::io::IoError> for Failure {
    fn from(e: lqcd_core::io::IoError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<lqcd_core::perf::PerfError> for Failure {
    fn from(e: lqcd_core::perf::PerfError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<lqcd_core::fields::FieldError> for Failure {
    fn from(e: lqcd_core::fields::FieldError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<lqcd_core::solver::SolverError> for Failure {
    fn from(e: lqcd_core::solver::SolverError) -> Self {
        use lqcd_core::solver::SolverError;
        match &e {
            SolverError::BadConfig(_) => Failure::Usage(e.to_string()),
            SolverError::Breakdown { .. } => Failure::NotConverged(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

/// Lattice extents as given on the command line, validated on use.
#[derive(Debug, Clone, Copy)]
pub struct DimsArg(pub [usize; 4]);

impl DimsArg {
    pub fn lattice(&self) -> Result<LatticeDims, Failure> {
        let [t, x, y, z] = self.0;
        LatticeDims::new(t, x, y, z).map_err(|e| Failure::Usage(e.to_string()))
    }
}

fn parse_dims(text: &str) -> Result<DimsArg, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected T,X,Y,Z, got `{text}`"));
    }
    let mut dims = [0usize; 4];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad extent `{part}`: {e}"))?;
    }
    Ok(DimsArg(dims))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartKind {
    Hot,
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Cg,
    Rgcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Embedded,
    Streaming,
    Both,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }
        impl FromStr for $ty {
            type Err = Failure;
            fn from_str(s: &str) -> Result<Self, Failure> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Failure::Data(format!(
                        "unknown {} `{other}`", stringify!($ty)
                    ))),
                }
            }
        }
    };
}

keyword_enum!(StartKind { StartKind::Hot => "hot", StartKind::Cold => "cold" });
keyword_enum!(PrecisionArg { PrecisionArg::Single => "single", PrecisionArg::Double => "double" });
keyword_enum!(Algorithm { Algorithm::Cg => "cg", Algorithm::Rgcg => "rgcg" });
keyword_enum!(ScenarioArg {
    ScenarioArg::Embedded => "embedded",
    ScenarioArg::Streaming => "streaming",
    ScenarioArg::Both => "both",
});

/// Solver right-hand side: a keyword or a spinor file path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    Point,
    Random,
    Manufactured,
    File(String),
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Point => f.write_str("point"),
            SourceSpec::Random => f.write_str("random"),
            SourceSpec::Manufactured => f.write_str("manufactured"),
            SourceSpec::File(path) => f.write_str(path),
        }
    }
}

impl FromStr for SourceSpec {
    type Err = Failure;
    fn from_str(s: &str) -> Result<Self, Failure> {
        Ok(match s {
            "point" => SourceSpec::Point,
            "random" => SourceSpec::Random,
            "manufactured" => SourceSpec::Manufactured,
            path => SourceSpec::File(path.to_string()),
        })
    }
}

fn parse_source(text: &str) -> Result<SourceSpec, String> {
    text.parse().map_err(|e: Failure| e.to_string())
}

#[derive(Parser)]
#[command(name = "lqcd", version, about = "Wilson-fermion solver and FPGA performance-model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a gauge field file plus its run manifest.
    Gen(GenArgs),
    /// Solve the normal equations on a stored gauge field.
    Solve(SolveArgs),
    /// Emit the performance-model sweeps, anchor audit and scenario report.
    Perf(PerfArgs),
    /// Time the host stencil kernel with exact operation counts.
    Bench(BenchArgs),
    /// Replay a manifest into a new directory and verify bitwise equality.
    Rerun(RerunArgs),
}

#[derive(Args)]
pub struct GenArgs {
    /// Lattice extents T,X,Y,Z.
    #[arg(long, value_parser = parse_dims, default_value = "4,4,4,4")]
    pub dims: DimsArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// hot = Haar-random links, cold = identity links.
    #[arg(long, value_enum, default_value_t = StartKind::Hot)]
    pub start: StartKind,
    /// Stored word precision of the file.
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
    /// Store links in 10-word compressed form (raw fallback per link).
    #[arg(long)]
    pub compressed: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Gauge field file (any stored precision or compression).
    #[arg(long)]
    pub gauge: PathBuf,
    /// point | random | manufactured | path to a spinor file.
    #[arg(long, value_parser = parse_source, default_value = "point")]
    pub source: SourceSpec,
    /// Seed for random and manufactured sources.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Quark mass m_q.
    #[arg(long, default_value_t = 0.1)]
    pub mass: f64,
    /// Relative residual target.
    #[arg(long, default_value_t = 1e-9)]
    pub rmin: f64,
    /// 32-bit steps per inner block (rgcg).
    #[arg(long = "inner-k", default_value_t = 16)]
    pub inner_k: usize,
    /// Outer correction limit (rgcg).
    #[arg(long = "max-outer", default_value_t = 1000)]
    pub max_outer: usize,
    /// Total iteration limit (cg).
    #[arg(long = "max-iter", default_value_t = 20_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = Algorithm::Rgcg)]
    pub algorithm: Algorithm,
    /// Stored word precision of the solution file.
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    pub precision: PrecisionArg,
    /// Run the 32-bit inner solver on compressed links (rgcg).
    #[arg(long)]
    pub compressed: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PerfArgs {
    /// Device profile TOML; the built-in U250-class profile when omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Lattice extents for the footprint report.
    #[arg(long, value_parser = parse_dims, default_value = "12,8,8,8")]
    pub dims: DimsArg,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Both)]
    pub scenario: ScenarioArg,
    /// Target volume as a multiple of the footprint lattice.
    #[arg(long = "volume-factor", default_value_t = 4096)]
    pub volume_factor: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Gauge field file to benchmark on.
    #[arg(long)]
    pub gauge: PathBuf,
    /// Normal-operator applications to time.
    #[arg(long, default_value_t = 10)]
    pub reps: u32,
    #[arg(long, default_value_t = 0.1)]
    pub mass: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args)]
pub struct RerunArgs {
    /// Manifest of the run to reproduce.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fresh output directory (must differ from the original).
    #[arg(long)]
    pub out: PathBuf,
}

fn dispatch(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Gen(args) => run::gen(args),
        Command::Solve(args) => run::solve(args),
        Command::Perf(args) => run::perf(args),
        Command::Bench(args) => run::bench(args),
        Command::Rerun(args) => run::rerun(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
