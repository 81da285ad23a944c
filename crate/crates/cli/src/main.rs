mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tensoray::plan::SamplingPlan;
use tensoray::slice::Convention;
use tensoray::sobolev::SobolevParams;
use tensoray::tensor::FieldKind;

use crate::error::{CliError, CliResult};

/// Ray transform of symmetric tensor fields: generation, forward
/// transform, Sobolev-norm isometry, slice, inversion and moment checks.
#[derive(Debug, Parser)]
#[command(name = "tensoray", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a Gaussian test field to a tf2d file.
    Generate(GenerateArgs),
    /// Ray transform of a tf2d field into a sino2d file.
    Forward(ForwardArgs),
    /// Run a check and print a JSON report.
    Check {
        #[command(subcommand)]
        check: Check,
    },
    /// Convert a tf2d or sino2d file to CSV.
    ExportCsv(ExportArgs),
}

#[derive(Debug, Subcommand)]
enum Check {
    /// Compare field and sinogram Sobolev norms.
    Reshetnyak(ReshetnyakArgs),
    /// Forward-inverse round trip of a field, or inversion of a sinogram.
    Invert(InvertArgs),
    /// Moment conditions of a sinogram (or of the transform of a field).
    Moments(MomentArgs),
    /// Fourier slice residuals of a field.
    Slice(SliceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Solenoidal,
    Potential,
    Generic,
}

impl From<Kind> for FieldKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Solenoidal => FieldKind::Solenoidal,
            Kind::Potential => FieldKind::Potential,
            Kind::Generic => FieldKind::Generic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    Lemma,
    Fst,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Lemma => Convention::Lemma,
            ConventionArg::Fst => Convention::Fst,
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Tensor rank.
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, value_enum, default_value_t = Kind::Solenoidal)]
    kind: Kind,
    /// Samples per axis.
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Half-width of the square grid.
    #[arg(long, default_value_t = 8.0)]
    radius: f64,
    /// Draw the field centre uniformly from [-1, 1]².
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SinogramArgs {
    #[arg(long, default_value_t = 257)]
    np: usize,
    #[arg(long, default_value_t = 128)]
    ntheta: usize,
    /// Largest line offset; defaults to the grid radius.
    #[arg(long)]
    pmax: Option<f64>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    sinogram: SinogramArgs,
    /// Positive frequency nodes.
    #[arg(long, default_value_t = 512)]
    nq: usize,
    #[arg(long, default_value_t = 8.0)]
    qmax: f64,
}

impl PlanArgs {
    fn plan(&self) -> CliResult<SamplingPlan> {
        let plan = SamplingPlan {
            np: self.sinogram.np,
            ntheta: self.sinogram.ntheta,
            pmax: self.sinogram.pmax,
            nq: self.nq,
            qmax: self.qmax,
        };
        plan.validate()?;
        Ok(plan)
    }
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Angular smoothness.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    r: f64,
    /// Spatial smoothness.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    s: f64,
    /// Weight index.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t: f64,
}

impl ParamArgs {
    fn params(&self) -> CliResult<SobolevParams> {
        let p = SobolevParams::new(self.r, self.s, self.t);
        p.check_field()?;
        p.shifted().check_sinogram()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct ForwardArgs {
    input: PathBuf,
    #[command(flatten)]
    sinogram: SinogramArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ReshetnyakArgs {
    input: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value_t = ConventionArg::Lemma)]
    convention: ConventionArg,
    #[command(flatten)]
    plan: PlanArgs,
    /// Allowed deviation of the ratio from its expected value.
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
}

#[derive(Debug, Args)]
struct InvertArgs {
    input: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value_t = ConventionArg::Lemma)]
    convention: ConventionArg,
    #[command(flatten)]
    plan: PlanArgs,
    /// Round-trip error bound (field input).
    #[arg(long, default_value_t = 2e-2)]
    tol: f64,
    /// Output grid size (sinogram input).
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Output grid radius (sinogram input); defaults to the sinogram's pmax.
    #[arg(long)]
    radius: Option<f64>,
    /// Where to write the reconstructed field (sinogram input).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MomentArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 4)]
    rmax: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Sinogram sampling when the input is a field.
    #[command(flatten)]
    sinogram: SinogramArgs,
}

#[derive(Debug, Args)]
struct SliceArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ConventionArg::Lemma)]
    convention: ConventionArg,
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

#[derive(Debug, Args)]
struct ExportArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("TENSORRAY_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Invalid(format!("TENSORRAY_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<bool> {
    configure_threads()?;
    match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Forward(a) => commands::forward(&a),
        Command::Check { check } => match check {
            Check::Reshetnyak(a) => commands::reshetnyak(&a),
            Check::Invert(a) => commands::invert(&a),
            Check::Moments(a) => commands::moments(&a),
            Check::Slice(a) => commands::slice(&a),
        },
        Command::ExportCsv(a) => commands::export_csv(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
