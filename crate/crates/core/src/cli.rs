//! Command-line front end.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage error,
//! 3 construction error (bad group, non-cnd ψ in `verify`, cocycle failure).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cocycle::{self, CndCertificate, DEFAULT_CND_TOL, SCHOENBERG_TIMES};
use crate::crossed::{DilationContext, DEFAULT_TOLERANCE};
use crate::descriptor::ProblemDescriptor;
use crate::dilation::{self, DilationReport, DEFAULT_RANDOM_INPUTS, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, GroupAlgebraElement};
use crate::step::{time_to_f64, Time};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONSTRUCTION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "markov-dilation",
    version,
    about = "Build and verify Markov dilations of Fourier-multiplier semigroups on finite groups"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify that ψ is conditionally negative definite.
    CheckCnd(CheckCndArgs),
    /// Build the dilation and run every verification suite.
    Verify(VerifyArgs),
    /// Print the intermediate elements of the identity for one (s, u, t).
    Explain(ExplainArgs),
}

#[derive(Debug, Args)]
pub struct CheckCndArgs {
    /// Problem descriptor (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated nonnegative rationals, e.g. "0,1/4,1/2,1".
    #[arg(long, default_value = "0,1/4,1/2,1,3/2,2", value_parser = parse_times)]
    pub times: TimeGrid,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Monte Carlo paths per estimate; 0 skips the Monte Carlo section.
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Horizon C of the reversed dilation, as p/q.
    #[arg(long, value_parser = parse_time)]
    pub horizon: Option<Time>,
    /// Random instances per structural property.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Random group-algebra inputs in addition to every λ_s.
    #[arg(long, default_value_t = DEFAULT_RANDOM_INPUTS)]
    pub random_inputs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// s,i,j,delta: shift entry (i, j) of π_s after construction.
    #[arg(long, hide = true)]
    pub corrupt_pi: Option<String>,
    /// s,delta: shift ψ(s) without rebuilding the cocycle.
    #[arg(long, hide = true)]
    pub corrupt_psi: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Group element index.
    #[arg(long)]
    pub s: usize,
    #[arg(long, value_parser = parse_time)]
    pub u: Time,
    #[arg(long, value_parser = parse_time)]
    pub t: Time,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_time(text: &str) -> std::result::Result<Time, String> {
    let t: Time = text
        .trim()
        .parse()
        .map_err(|_| format!("'{text}' is not a rational p/q"))?;
    if t < Time::default() {
        return Err(format!("time {t} is negative"));
    }
    Ok(t)
}

/// Sorted, deduplicated time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid(pub Vec<Time>);

/// Parses a comma-separated grid; the result is sorted and deduplicated.
pub fn parse_times(text: &str) -> std::result::Result<TimeGrid, String> {
    let mut times = text
        .split(',')
        .map(parse_time)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    times.sort();
    times.dedup();
    Ok(TimeGrid(times))
}

fn parse_fields(text: &str, n: usize, what: &str) -> Result<Vec<String>> {
    let fields: Vec<String> = text.split(',').map(|f| f.trim().to_string()).collect();
    if fields.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{what} expects {n} comma-separated fields"
        )));
    }
    Ok(fields)
}

fn parse_field<T: std::str::FromStr>(field: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse '{field}'")))
}

#[derive(Serialize)]
struct SchoenbergEntry {
    t: f64,
    min_eigenvalue: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CndReport {
    schema_version: u32,
    group: String,
    psi: Vec<f64>,
    pass: bool,
    certificate: CndCertificate,
    schoenberg: Vec<SchoenbergEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cocycle_dim: Option<usize>,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidGroup(_) | Error::InvalidPsi(_) | Error::Construction(_) => EXIT_CONSTRUCTION,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
        }
    };
    let outcome = match cli.command {
        Command::CheckCnd(a) => check_cnd(&a),
        Command::Verify(a) => verify(&a),
        Command::Explain(a) => explain(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(path: &PathBuf) -> Result<(ProblemDescriptor, Arc<FiniteGroup>)> {
    let text = fs::read_to_string(path)?;
    let problem = ProblemDescriptor::from_json(&text)?;
    let group = problem.group.build()?;
    Ok((problem, group))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn check_cnd(args: &CheckCndArgs) -> Result<i32> {
    let (problem, group) = load(&args.input)?;
    let values = match problem.psi.values(&group) {
        Ok(v) => v,
        Err(Error::InvalidPsi(msg)) => return Err(Error::InvalidArgument(msg)),
        Err(e) => return Err(e),
    };
    let certificate = cocycle::is_cnd(&values, &group, DEFAULT_CND_TOL);
    let schoenberg: Vec<SchoenbergEntry> = if certificate.is_cnd {
        SCHOENBERG_TIMES
            .iter()
            .map(|&t| {
                let m = cocycle::schoenberg_min_eigenvalue(&values, &group, t);
                SchoenbergEntry {
                    t,
                    min_eigenvalue: m,
                    pass: m >= -dilation::tol::SCHOENBERG,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let cocycle_dim = if certificate.is_cnd {
        let psi = cocycle::CndFunction::new(&group, values.clone(), DEFAULT_CND_TOL)?;
        Some(psi.build_cocycle(cocycle::DEFAULT_RANK_TOL)?.dim())
    } else {
        None
    };
    let pass = certificate.is_cnd && schoenberg.iter().all(|e| e.pass);
    if let Some(reason) = &certificate.reason {
        eprintln!("FAIL {reason}");
    }
    let report = CndReport {
        schema_version: SCHEMA_VERSION,
        group: group.name().to_string(),
        psi: values,
        pass,
        certificate,
        schoenberg,
        cocycle_dim,
    };
    emit(&args.out, &serde_json::to_string_pretty(&report)?)?;
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

fn build_context(args: &VerifyArgs) -> Result<Arc<DilationContext>> {
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(Error::InvalidArgument("--tol must be positive".into()));
    }
    if let Some(h) = args.horizon {
        if h <= Time::default() {
            return Err(Error::InvalidArgument("--horizon must be positive".into()));
        }
    }
    if args.mc_samples != 0 && args.mc_samples < crate::mc::MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "--mc-samples must be 0 or at least {}",
            crate::mc::MIN_SAMPLES
        )));
    }
    let (problem, group) = load(&args.input)?;
    let psi = problem.psi.build(&group)?;
    let mut ctx = DilationContext::new(psi, args.tol, args.horizon)?;
    if let Some(arg) = &args.corrupt_pi {
        let f = parse_fields(arg, 4, "--corrupt-pi")?;
        ctx = ctx
            .with_perturbed_pi(
                parse_field(&f[0])?,
                parse_field(&f[1])?,
                parse_field(&f[2])?,
                parse_field(&f[3])?,
            )
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    if let Some(arg) = &args.corrupt_psi {
        let f = parse_fields(arg, 2, "--corrupt-psi")?;
        ctx = ctx
            .with_perturbed_psi(parse_field(&f[0])?, parse_field(&f[1])?)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(ctx)
}

/// Full pipeline behind `verify`, without the file output.
pub fn verify_report(args: &VerifyArgs) -> Result<DilationReport> {
    let ctx = build_context(args)?;
    let start = Instant::now();
    let inputs = dilation::default_inputs(&ctx, args.random_inputs, args.seed);
    let mut report = DilationReport::new(&ctx);
    report.extend(dilation::verify_structure(
        &ctx,
        args.samples.max(1),
        args.seed,
    )?);
    report.extend(dilation::verify_markov(
        &ctx,
        &dilation::forward_pairs(&args.times.0),
        &inputs,
    )?);
    if let Some(h) = ctx.horizon() {
        report.extend(dilation::verify_reversed(
            &ctx,
            &dilation::reversed_pairs(&args.times.0, h),
            &inputs,
        )?);
    }
    if args.mc_samples > 0 {
        report.set_monte_carlo(dilation::monte_carlo_suite(
            &ctx,
            20,
            10,
            args.mc_samples,
            args.seed,
        )?);
    }
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn verify(args: &VerifyArgs) -> Result<i32> {
    let report = verify_report(args)?;
    for c in report.failures() {
        eprintln!(
            "FAIL {} input={} u={} t={} residual={:e} tolerance={:e}",
            c.kind,
            c.params.input.as_deref().unwrap_or("-"),
            c.params.u.as_deref().unwrap_or("-"),
            c.params.t.as_deref().unwrap_or("-"),
            c.residual,
            c.tolerance
        );
    }
    if let Some(mc) = &report.monte_carlo {
        if !mc.pass {
            eprintln!(
                "FAIL monte_carlo fraction_within={:.3} increments={}",
                mc.fraction_within, mc.increments.pass
            );
        }
    }
    emit(&args.out, &serde_json::to_string_pretty(&report)?)?;
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

/// The trace printed by `explain`.
pub fn explain_text(problem: &ProblemDescriptor, s: usize, u: Time, t: Time) -> Result<String> {
    use std::fmt::Write as _;
    if u > t {
        return Err(Error::InvalidTimes(u, t));
    }
    let group = problem.group.build()?;
    if s >= group.order() {
        return Err(Error::InvalidArgument(format!(
            "element {s} out of range for {}",
            group.name()
        )));
    }
    let psi = problem.psi.build(&group)?;
    let ctx = DilationContext::new(psi, DEFAULT_TOLERANCE, None)?;
    let a = GroupAlgebraElement::basis(&group, s);
    let pi = ctx.pi_t(t, &a)?;
    let (lhs, rhs) = dilation::markov_sides(&ctx, &a, u, t)?;
    let diff = lhs.sub(&rhs)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "group {}  s = {s}  psi(s) = {}  u = {u}  t = {t}",
        group.name(),
        ctx.psi().value(s)
    );
    let _ = writeln!(out, "b(s) = {:?}", ctx.cocycle().b(s));
    let _ = writeln!(out, "\npi_t(lambda_s) =\n{pi}");
    let _ = writeln!(out, "\nE_u pi_t(lambda_s) =\n{lhs}");
    let _ = writeln!(out, "\npi_u T_(t-u)(lambda_s) =\n{rhs}");
    let damping = (-time_to_f64(t - u) * ctx.psi().value(s)).exp();
    let _ = writeln!(out, "\nexp(-(t-u) psi(s)) = {damping:.10}");
    let _ = writeln!(out, "difference =\n{diff}");
    let _ = write!(out, "residual = {:e}", lhs.distance(&rhs)?);
    Ok(out)
}

fn explain(args: &ExplainArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.input)?;
    let problem = ProblemDescriptor::from_json(&text)?;
    emit(&args.out, &explain_text(&problem, args.s, args.u, args.t)?)?;
    Ok(EXIT_PASS)
}
