//! Command-line front end. Every subcommand prints JSON (one object per line
//! where several results are produced); experiments can also emit CSV.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::distributions::{DistSpec, LogBase, PropertyKind};
use crate::error::{Error, Result};
use crate::estimators::{
    sml_plugin, support_coverage_estimate, support_estimate, EstimatorConfig, Mode, SplitEstimator,
    SplitSample,
};
use crate::harness::{
    bounded_difference_probe, run_experiment, verify_ml_metatheorem, ExperimentConfig,
    VerifyOptions,
};
use crate::pml::{default_support_range, pml_exact_tiny, pml_optimize, pml_plugin, PmlSettings};
use crate::poly_approx::{best_poly_approx, best_poly_approx_anchored, Interval, Target};
use crate::profiles::Profile;

#[derive(Debug, Parser)]
#[command(
    name = "symprop",
    version,
    about = "Estimate symmetric properties of discrete distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a property from samples (one whitespace-separated sequence per line).
    Estimate(EstimateArgs),
    /// Compute the PML distribution of a profile.
    Pml(PmlArgs),
    /// Best uniform polynomial approximation on an interval.
    Polyapprox(PolyArgs),
    /// Run a Monte-Carlo experiment described by a JSON config.
    Experiment(ExperimentArgs),
    /// Exhaustively check the PML competitiveness bounds on two symbols.
    Verify(VerifyArgs),
    /// Largest single-sample change of an entropy estimator.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PropertyArg {
    Entropy,
    Support,
    Coverage,
    Dtu,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum EstimatorArg {
    /// poly for entropy and dtu, gt for support and coverage
    Auto,
    Sml,
    Poly,
    Gt,
    Pml,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long, value_enum)]
    property: PropertyArg,
    #[arg(long, value_enum, default_value = "auto")]
    estimator: EstimatorArg,
    /// Alphabet size (entropy, dtu) or support lower-bound parameter (support).
    #[arg(long)]
    k: Option<usize>,
    /// Coverage horizon.
    #[arg(long)]
    m: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "paper")]
    mode: ModeArg,
    /// Input file; `-` reads standard input.
    #[arg(long)]
    input: PathBuf,
    /// Report entropy in bits instead of nats.
    #[arg(long)]
    bits: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Performance,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => Mode::Paper,
            ModeArg::Performance => Mode::Performance,
        }
    }
}

#[derive(Debug, Args)]
struct PmlArgs {
    /// Comma-separated multiplicities, e.g. `1,1,2`.
    #[arg(long)]
    profile: String,
    /// Inclusive support range `a..b`.
    #[arg(long)]
    support: Option<String>,
    #[arg(long, default_value_t = crate::pml::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid-certified search for tiny profiles (support bounded by the range end).
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    /// -y ln y
    NegYLogY,
    /// |y - center|
    Abs,
}

#[derive(Debug, Args)]
struct PolyArgs {
    #[arg(long, value_enum)]
    target: TargetArg,
    #[arg(long, default_value_t = 0.0)]
    center: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    hi: f64,
    #[arg(long)]
    degree: usize,
    /// Constrain the polynomial to agree with the target at `lo`.
    #[arg(long)]
    anchored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.4])]
    epsilon: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.1])]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 0.005)]
    candidate_step: f64,
    /// Include per-grid-point details.
    #[arg(long)]
    full: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum ProbeEstimator {
    Poly,
    Sml,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long, default_value = "uniform:1000")]
    dist: String,
    /// Half-sample size for poly; total sample size for sml.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Alphabet bound; defaults to the distribution's alphabet.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "poly")]
    estimator: ProbeEstimator,
    #[arg(long, value_enum, default_value = "paper")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampled swaps when the exhaustive scan is too large (sml only).
    #[arg(long, default_value_t = 10_000)]
    swaps: usize,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Parses whitespace-separated nonnegative integers, one sequence per line.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_sequences(text: &str) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let seq = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u32>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("`{tok}` is not a nonnegative integer symbol"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        out.push(seq);
    }
    Ok(out)
}

fn read_input(path: &PathBuf) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::Read::read_to_string(&mut io::stdin(), &mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| {
            Failure::Runtime(Error::InvalidArgument(format!(
                "cannot read {}: {e}",
                path.display()
            )))
        })
    }
}

fn print_json<T: Serialize>(out: &mut impl Write, value: &T) -> CliResult<()> {
    serde_json::to_writer(&mut *out, value).map_err(Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn estimate(args: EstimateArgs, out: &mut impl Write) -> CliResult<()> {
    let cfg = EstimatorConfig::for_mode(args.mode.into()).with_epsilon(args.epsilon);
    cfg.validate()?;
    let need_k = |what: &str| match args.k {
        Some(k) => Ok(k),
        None => usage(format!("--k is required for {what}")),
    };
    let property = match args.property {
        PropertyArg::Entropy => PropertyKind::Entropy,
        PropertyArg::Support => PropertyKind::SupportSize,
        PropertyArg::Coverage => match args.m {
            Some(m) => PropertyKind::SupportCoverage { m },
            None => return usage("--m is required for coverage"),
        },
        PropertyArg::Dtu => PropertyKind::DistanceToUniform { k: need_k("dtu")? },
    };
    let estimator = match (args.estimator, property) {
        (EstimatorArg::Auto, PropertyKind::Entropy | PropertyKind::DistanceToUniform { .. }) => {
            EstimatorArg::Poly
        }
        (EstimatorArg::Auto, _) => EstimatorArg::Gt,
        (e, _) => e,
    };
    let k = match (estimator, property) {
        (EstimatorArg::Poly, PropertyKind::Entropy) => Some(need_k("the entropy estimator")?),
        (_, PropertyKind::SupportSize) => Some(need_k("support")?),
        _ => args.k,
    };
    let sequences = parse_sequences(&read_input(&args.input)?)?;
    let base = if args.bits {
        LogBase::Bits
    } else {
        LogBase::Nats
    };
    for (i, seq) in sequences.iter().enumerate() {
        let value: Result<f64> = match (estimator, property) {
            (EstimatorArg::Sml, PropertyKind::SupportSize) => {
                sml_plugin(seq, property).map(|v| v / k.unwrap_or(1) as f64)
            }
            (EstimatorArg::Sml, _) => sml_plugin(seq, property),
            (EstimatorArg::Pml, PropertyKind::SupportSize) => {
                pml_plugin(seq, property, &PmlSettings::default())
                    .map(|v| v / k.unwrap_or(1) as f64)
            }
            (EstimatorArg::Pml, _) => pml_plugin(seq, property, &PmlSettings::default()),
            (EstimatorArg::Poly, PropertyKind::Entropy) => SplitSample::new(seq)
                .and_then(|s| SplitEstimator::entropy(s.n(), k.unwrap_or(0), &cfg)?.estimate(&s)),
            (EstimatorArg::Poly, PropertyKind::DistanceToUniform { k }) => SplitSample::new(seq)
                .and_then(|s| SplitEstimator::distance_to_uniform(s.n(), k, &cfg)?.estimate(&s)),
            (EstimatorArg::Gt, PropertyKind::SupportSize) => {
                support_estimate(seq, k.unwrap_or(0), args.epsilon)
            }
            (EstimatorArg::Gt, PropertyKind::SupportCoverage { m }) => {
                support_coverage_estimate(seq, m, &cfg)
            }
            _ => {
                return usage(format!(
                    "estimator {estimator:?} does not apply to {:?}",
                    args.property
                ))
            }
        };
        let value = value.map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line: i + 1,
                msg: other.to_string(),
            },
        })?;
        let value = if property == PropertyKind::Entropy {
            base.from_nats(value)
        } else {
            value
        };
        print_json(
            out,
            &json!({
                "estimate": value,
                "n": seq.len(),
                "property": property,
                "estimator": format!("{estimator:?}").to_lowercase(),
                "config_used": cfg,
            }),
        )?;
    }
    Ok(())
}

fn parse_range(text: &str) -> CliResult<(usize, usize)> {
    let parse = |s: &str| s.trim().parse::<usize>().ok();
    match text.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            match (parse(a), parse(b)) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => usage(format!("malformed support range `{text}`, expected a..b")),
            }
        }
        None => usage(format!("malformed support range `{text}`, expected a..b")),
    }
}

fn pml(args: PmlArgs, out: &mut impl Write) -> CliResult<()> {
    let profile: Profile = args.profile.parse()?;
    let (lo, hi) = match &args.support {
        Some(s) => parse_range(s)?,
        None => {
            let r = default_support_range(&profile);
            (*r.start(), *r.end())
        }
    };
    let result = if args.exact {
        pml_exact_tiny(&profile, hi)?
    } else {
        pml_optimize(&profile, lo..=hi, args.restarts, args.seed)?
    };
    print_json(
        out,
        &json!({
            "support": result.support(),
            "probs": result.dist.probs(),
            "log_likelihood": result.log_likelihood,
            "likelihood": result.likelihood(),
            "beta_empirical": result.beta_empirical,
            "support_size_searched": result.support_size_searched,
        }),
    )
}

fn polyapprox(args: PolyArgs, out: &mut impl Write) -> CliResult<()> {
    let target = match args.target {
        TargetArg::NegYLogY => Target::NegYLogY,
        TargetArg::Abs => Target::AbsShift { c: args.center },
    };
    let interval = Interval::new(args.lo, args.hi)?;
    let approx = if args.anchored {
        best_poly_approx_anchored(target, interval, args.degree)?
    } else {
        best_poly_approx(target, interval, args.degree)?
    };
    print_json(
        out,
        &json!({
            "degree": approx.degree,
            "coeffs": approx.coeffs,
            "interval": approx.interval,
            "sup_error": approx.sup_error,
            "max_abs_coeff": approx.max_abs_coeff(),
        }),
    )
}

fn experiment(args: ExperimentArgs, out: &mut impl Write) -> CliResult<()> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        Failure::Runtime(Error::InvalidArgument(format!(
            "cannot read config {}: {e}",
            args.config.display()
        )))
    })?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let report = run_experiment(&cfg)?;
    let body = match args.format {
        FormatArg::Csv => report.to_csv_string()?,
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(Error::from)?;
            s.push('\n');
            s
        }
    };
    match args.out {
        Some(path) => fs::write(path, body)?,
        None => out.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn verify(args: VerifyArgs, out: &mut impl Write) -> CliResult<bool> {
    let mut opts = VerifyOptions::entropy(args.n, args.epsilon, args.step, args.beta);
    opts.candidate_step = args.candidate_step;
    let mut report = verify_ml_metatheorem(&opts)?;
    if !args.full {
        report.epsilons.iter_mut().for_each(|e| e.points.clear());
    }
    print_json(out, &report)?;
    Ok(report.holds)
}

fn probe(args: ProbeArgs, out: &mut impl Write) -> CliResult<bool> {
    let spec: DistSpec = args.dist.parse()?;
    let dist = spec.build()?;
    let k = args.k.unwrap_or(spec.k());
    let alphabet: Vec<u32> = (0..k as u32).collect();
    match args.estimator {
        ProbeEstimator::Poly => {
            let cfg = EstimatorConfig::for_mode(args.mode.into());
            let est = SplitEstimator::entropy(args.n, k, &cfg)?;
            let split = SplitSample::new(&dist.sample(2 * args.n, args.seed))?;
            let change = est.max_single_swap_change(&split, &alphabet)?;
            let bound = est.bounded_difference_bound();
            print_json(
                out,
                &json!({
                    "estimator": "poly",
                    "n": args.n,
                    "k": k,
                    "degree": est.degree(),
                    "max_change": change,
                    "bound": bound,
                    "holds": change <= bound,
                }),
            )?;
            Ok(change <= bound)
        }
        ProbeEstimator::Sml => {
            let samples = dist.sample(args.n, args.seed);
            let f = |s: &[u32]| sml_plugin(s, PropertyKind::Entropy);
            let change = bounded_difference_probe(f, &samples, args.swaps, &alphabet, args.seed)?;
            print_json(
                out,
                &json!({ "estimator": "sml", "n": args.n, "k": k, "max_change": change }),
            )?;
            Ok(true)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code: 0 on success, 2 on usage errors, 1 on runtime errors or failed checks.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => estimate(a, out).map(|_| true),
        Command::Pml(a) => pml(a, out).map(|_| true),
        Command::Polyapprox(a) => polyapprox(a, out).map(|_| true),
        Command::Experiment(a) => experiment(a, out).map(|_| true),
        Command::Verify(a) => verify(a, out),
        Command::Probe(a) => probe(a, out),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => {
            let _ = writeln!(err, "error: check failed");
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "usage error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
