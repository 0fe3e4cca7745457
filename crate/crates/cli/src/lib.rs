//! Command-line front end for `cbnorm`: reads JSON problem files, computes
//! norms and fidelities, and re-verifies certificates.

pub mod format;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cbnorm::dnorm::{cb_spectral_norm, diamond_norm, verify_certificate, MethodChoice, NormOptions};
use cbnorm::fidelity::{check_alberti_certificate, fidelity_closed_form, fidelity_sdp};
use cbnorm::{SdpOptions, SolveStatus};
use clap::{Parser, Subcommand, ValueEnum};

use format::{
    to_json_matrix, to_pretty, AlbertiCertificate, CertificateFile, CertifyReport, ChannelReportFile, FidelityReport,
    Kind, NormKind, Problem, ProblemFile, ResultFile,
};

const TOOL: &str = env!("CARGO_PKG_NAME");
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "cbnorm",
    version,
    about = "Diamond and completely bounded spectral norms with certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a norm and write a result file with its certificate.
    Compute(ComputeArgs),
    /// Re-verify a certificate against a problem without solving.
    Certify(CertifyArgs),
    /// Rewrite a map in another representation.
    Convert(ConvertArgs),
    /// Fidelity of two PSD operators with an Alberti certificate.
    Fidelity(FidelityArgs),
    /// Report complete positivity and trace preservation.
    CheckChannel(CheckChannelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Diamond,
    CbSpectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    General,
    ChannelDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Choi,
    Kraus,
    Stinespring,
}

#[derive(Debug, clap::Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = NormArg::Diamond)]
    pub norm: NormArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Relative gap and feasibility tolerance of the solver.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Also write the certificate to this path.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Seed for the induced-norm lower bound (see `--restarts`).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random restarts of the induced-norm lower bound; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Solver iteration log on stderr.
    #[arg(long)]
    pub verbose: bool,
    /// Record wall time in the result (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, clap::Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Certificate file, or a result file embedding one.
    #[arg(long)]
    pub certificate: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, clap::Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub to: TargetArg,
    /// Relative rank cutoff for Stinespring pairs.
    #[arg(long, default_value_t = 1e-9)]
    pub rank_tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct FidelityArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, clap::Args)]
pub struct CheckChannelArgs {
    #[arg(long)]
    pub input: PathBuf,
}

/// How a successful run ended; errors map to exit code 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    NonOptimal,
    InvalidCertificate,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::NonOptimal => 2,
            Outcome::InvalidCertificate => 3,
        }
    }
}

pub const INPUT_ERROR: u8 = 1;

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::Compute(a) => compute(&a, out),
        Command::Certify(a) => certify(&a, out),
        Command::Convert(a) => convert(&a, out),
        Command::Fidelity(a) => fidelity(&a, out),
        Command::CheckChannel(a) => check_channel(&a, out),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_problem(path: &Path) -> Result<ProblemFile> {
    ProblemFile::parse(&read(path)?).with_context(|| format!("invalid problem file {}", path.display()))
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => out.write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

fn solver_options(tol: f64, verbose: bool) -> Result<SdpOptions> {
    if !(tol > 0.0 && tol.is_finite()) {
        bail!("--tol must be a positive number");
    }
    Ok(SdpOptions {
        gap_tol: tol,
        feas_tol: tol,
        verbose,
        ..SdpOptions::default()
    })
}

fn compute(args: &ComputeArgs, out: &mut dyn Write) -> Result<Outcome> {
    let file = read_problem(&args.input)?;
    let phi = file
        .map()
        .with_context(|| format!("invalid problem file {}", args.input.display()))?;
    let options = NormOptions {
        method: match args.method {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::General => MethodChoice::General,
            MethodArg::ChannelDiff => MethodChoice::ChannelDiff,
        },
        sdp: solver_options(args.tol, args.verbose)?,
        ..NormOptions::default()
    };
    let start = Instant::now();
    let (norm, res) = match args.norm {
        NormArg::Diamond => (NormKind::Diamond, diamond_norm(&phi, &options)?),
        NormArg::CbSpectral => (NormKind::CbSpectral, cb_spectral_norm(&phi, &options)?),
    };
    let oracle = if args.restarts > 0 {
        let target = match norm {
            NormKind::Diamond => phi.clone(),
            NormKind::CbSpectral => phi.adjoint(),
        };
        Some(target.induced_trace_norm_lower_bound(args.restarts, args.seed)?)
    } else {
        None
    };
    let elapsed = start.elapsed().as_secs_f64();
    let certificate = CertificateFile::new(norm, phi.dims(), &res.certificate);
    let (status, iterations, gap) = match res.solver {
        Some(s) => (s.status, s.iterations, s.gap),
        None => (SolveStatus::Optimal, 0, 0.0),
    };
    let result = ResultFile {
        tool: TOOL.into(),
        version: VERSION.into(),
        norm,
        method: res.method.as_str().into(),
        value: res.value,
        lower_bound: res.lower_bound,
        upper_bound: res.upper_bound,
        status: status.as_str().into(),
        iterations,
        gap,
        warnings: res.warnings.clone(),
        oracle_lower_bound: oracle,
        wall_time_seconds: args.timing.then_some(elapsed),
        certificate,
    };
    if let Some(path) = &args.certificate {
        emit(&to_pretty(&result.certificate)?, Some(path), out)?;
    }
    emit(&to_pretty(&result)?, args.output.as_deref(), out)?;
    Ok(if res.is_optimal() {
        Outcome::Ok
    } else {
        Outcome::NonOptimal
    })
}

fn certify(args: &CertifyArgs, out: &mut dyn Write) -> Result<Outcome> {
    if !(args.tol >= 0.0 && args.tol.is_finite()) {
        bail!("--tol must be a non-negative number");
    }
    let file = read_problem(&args.input)?;
    let phi = file
        .map()
        .with_context(|| format!("invalid problem file {}", args.input.display()))?;
    let cert_file = CertificateFile::parse(&read(&args.certificate)?)
        .with_context(|| format!("invalid certificate file {}", args.certificate.display()))?;
    if (cert_file.dim_in, cert_file.dim_out) != phi.dims() {
        bail!(
            "certificate is for a {}→{} map but the problem is {}→{}",
            cert_file.dim_in,
            cert_file.dim_out,
            phi.dims().0,
            phi.dims().1
        );
    }
    // A cb-spectral certificate witnesses the diamond norm of the adjoint.
    let target = match cert_file.norm {
        NormKind::Diamond => phi,
        NormKind::CbSpectral => phi.adjoint(),
    };
    let (n, m) = target.dims();
    let cert = cert_file
        .certificate(n, m)
        .with_context(|| format!("invalid certificate file {}", args.certificate.display()))?;
    let check = verify_certificate(&target, &cert, args.tol)?;
    let report = CertifyReport::from(check);
    emit(&to_pretty(&report)?, None, out)?;
    Ok(if report.valid {
        Outcome::Ok
    } else {
        Outcome::InvalidCertificate
    })
}

fn convert(args: &ConvertArgs, out: &mut dyn Write) -> Result<Outcome> {
    let file = read_problem(&args.input)?;
    let phi = file
        .map()
        .with_context(|| format!("invalid problem file {}", args.input.display()))?;
    let kind = match args.to {
        TargetArg::Choi => Kind::Choi,
        TargetArg::Kraus => Kind::Kraus,
        TargetArg::Stinespring => Kind::StinespringPair,
    };
    let converted = ProblemFile::from_map(&phi, kind, args.rank_tol)?;
    emit(&to_pretty(&converted)?, args.output.as_deref(), out)?;
    Ok(Outcome::Ok)
}

fn fidelity(args: &FidelityArgs, out: &mut dyn Write) -> Result<Outcome> {
    let file = read_problem(&args.input)?;
    let Problem::Fidelity { p, q } = file
        .problem()
        .with_context(|| format!("invalid problem file {}", args.input.display()))?
    else {
        bail!("at `kind`: expected a fidelity problem");
    };
    let n = p.dim();
    let res = fidelity_sdp(&p, &q, n, &solver_options(args.tol, args.verbose)?)?;
    let closed = fidelity_closed_form(&p, &q)?;
    let (alberti_bound, z) = match &res.dual {
        Some(z) => (check_alberti_certificate(&p, &q, z)?, to_json_matrix(z.matrix())),
        None => (0.0, Vec::new()),
    };
    let status = res.status.unwrap_or(SolveStatus::Optimal);
    let report = FidelityReport {
        tool: TOOL.into(),
        version: VERSION.into(),
        fidelity: res.fidelity,
        fidelity_squared: res.fidelity_squared,
        closed_form_fidelity: closed,
        status: status.as_str().into(),
        gap: res.gap,
        alberti_bound,
        certificate: AlbertiCertificate { z },
    };
    emit(&to_pretty(&report)?, args.output.as_deref(), out)?;
    Ok(if status == SolveStatus::Optimal {
        Outcome::Ok
    } else {
        Outcome::NonOptimal
    })
}

fn check_channel(args: &CheckChannelArgs, out: &mut dyn Write) -> Result<Outcome> {
    let file = read_problem(&args.input)?;
    let text = if file.kind == Kind::ChannelPair {
        // Report each operand; their difference is never a channel.
        let payload: format::ChannelPairPayload =
            serde_json::from_value(file.payload.clone()).context("at `payload`: malformed channel pair")?;
        let mut reports = serde_json::Map::new();
        for (name, operand) in [("first", &payload.first), ("second", &payload.second)] {
            let single = ProblemFile {
                version: file.version.clone(),
                kind: operand.kind,
                dim_in: file.dim_in,
                dim_out: file.dim_out,
                payload: operand.payload.clone(),
            };
            let op = single.map().with_context(|| format!("at `payload.{name}`"))?;
            let report = ChannelReportFile::from(op.is_channel()?);
            reports.insert(name.into(), serde_json::to_value(report)?);
        }
        to_pretty(&reports)?
    } else {
        let phi = file
            .map()
            .with_context(|| format!("invalid problem file {}", args.input.display()))?;
        to_pretty(&ChannelReportFile::from(phi.is_channel()?))?
    };
    emit(&text, None, out)?;
    Ok(Outcome::Ok)
}
