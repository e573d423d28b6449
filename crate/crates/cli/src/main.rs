//! `twisted`: Rauzy classes, Lyapunov spectra, structure verification and substitution
//! certificates from the command line. Results are JSON on stdout or in `--out`.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 reducible permutation,
//! 4 overflow or non-finite arithmetic, 5 verification failure, 6 not certified.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use twisted_cocycle::combinatorics::Permutation;
use twisted_cocycle::fixtures::verify_fixture;
use twisted_cocycle::lyapunov::{
    benettin_spectrum, sample_lengths, BenettinConfig, MeasureKind, MeasureSpec, ITERATION_CAP,
};
use twisted_cocycle::mahler::MahlerConfig;
use twisted_cocycle::renormalization::IetPoint;
use twisted_cocycle::structures::{
    verify_block_form, verify_step_identities, IdentityReport, IdentityResidual, StructurePoint,
};
use twisted_cocycle::substitution::{
    certify, chi_plus_direct, log_det_samples, write_log_det_csv, ChiPlus, SingularityCertificate, Substitution2,
    Verdict,
};
use twisted_cocycle::Error;

const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_REDUCIBLE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_VERIFY: u8 = 5;
const EXIT_NOT_CERTIFIED: u8 = 6;

#[derive(Parser)]
#[command(name = "twisted", version, about = "Twisted Rauzy–Veech cocycles and spectral cocycles of substitutions")]
struct Cli {
    /// Write the JSON result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for seed-parallel work.
    #[arg(long, global = true, env = "TWISTED_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rauzy class of a permutation with genus, κ and σ cycles.
    RauzyClass(RauzyArgs),
    /// Lyapunov spectrum of the twisted cocycle over the Zorich map.
    Spectrum(SpectrumArgs),
    /// Transformation laws along a random orbit, or a built-in fixture.
    Verify(VerifyArgs),
    /// Singular-spectrum certificate for a two-letter substitution.
    CertifySub(CertifyArgs),
}

#[derive(Args)]
struct RauzyArgs {
    /// Permutation as two rows, e.g. "ABCD/DCBA".
    #[arg(long)]
    perm: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Lebesgue,
    Hpi,
    Qk,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    perm: String,
    #[arg(long, value_enum, default_value = "lebesgue")]
    measure: Measure,
    /// Denominator for `--measure qk`.
    #[arg(long)]
    k: Option<u32>,
    /// Zorich steps per seed after burn-in.
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    #[arg(long, default_value_t = 8)]
    seeds: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Zorich steps between re-orthonormalizations.
    #[arg(long, default_value_t = 1)]
    qr_interval: usize,
    #[arg(long, default_value_t = 1_000)]
    burn_in: usize,
    /// Use the dual cocycle `(ℬ^*)^{-1}`.
    #[arg(long)]
    dual: bool,
    /// Loop iterations allowed inside one Zorich step.
    #[arg(long, default_value_t = ITERATION_CAP)]
    cap: usize,
    /// Write running estimates per seed to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Checkpoints per seed in the CSV.
    #[arg(long, default_value_t = 100)]
    checkpoints: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    perm: Option<String>,
    /// Rauzy steps along the random orbit.
    #[arg(long, default_value_t = 1_000)]
    steps: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Built-in fixture: example-5.1 or example-5.2.
    #[arg(long)]
    fixture: Option<String>,
    /// Exact rational arithmetic; fixtures are always checked exactly.
    #[arg(long, requires = "fixture")]
    exact: bool,
    /// Random rational points per fixture identity.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args)]
struct CertifyArgs {
    /// Substitution as "0->w0;1->w1".
    #[arg(long)]
    rule: String,
    #[arg(long, default_value_t = 60)]
    nmax: u32,
    /// Gauss–Legendre nodes for bivariate Mahler measures.
    #[arg(long, default_value_t = 512)]
    nodes: usize,
    /// Monte Carlo samples for the Mahler cross-check.
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per seed for a direct estimate of ∫ log|det ℬ|; 0 skips it.
    #[arg(long, default_value_t = 0)]
    direct_samples: usize,
    #[arg(long, default_value_t = 8)]
    direct_seeds: usize,
    /// Write (ζ, log|det ℬ(ζ)|) samples to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    csv_samples: usize,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::InvalidArgument(_) | Error::NotPrimitive | Error::InvalidMove(_) => EXIT_INPUT,
            Error::Reducible(_) => EXIT_REDUCIBLE,
            Error::ZorichOverflow(_) | Error::NonFinite(_) | Error::Tie(_) => EXIT_NUMERIC,
            _ => EXIT_INTERNAL,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: EXIT_INTERNAL, message: e.to_string() }
    }
}

/// JSON to emit and the exit code that goes with it.
struct Output {
    json: String,
    code: u8,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure { code: EXIT_INTERNAL, message: e.to_string() })
}

fn rauzy_class(args: &RauzyArgs) -> Result<Output, Failure> {
    let p = Permutation::parse_irreducible(&args.perm)?;
    Ok(Output { json: to_json(&p.rauzy_class()?.report())?, code: 0 })
}

fn spectrum(args: &SpectrumArgs) -> Result<Output, Failure> {
    let p = Permutation::parse_irreducible(&args.perm)?;
    let measure = match args.measure {
        Measure::Lebesgue => MeasureSpec::lebesgue(),
        Measure::Hpi => MeasureSpec::hpi(),
        Measure::Qk => MeasureSpec { kind: MeasureKind::Qk, k: args.k },
    };
    let cfg = BenettinConfig {
        steps: args.steps,
        seeds: args.seeds,
        seed: args.seed,
        qr_interval: args.qr_interval,
        burn_in: args.burn_in,
        dual: args.dual,
        checkpoints: if args.csv.is_some() { args.checkpoints } else { 0 },
        cap: args.cap,
    };
    let est = benettin_spectrum(&p, &measure, &cfg)?;
    if let Some(path) = &args.csv {
        fs::write(path, est.trajectory_csv())?;
    }
    Ok(Output { json: to_json(&est)?, code: 0 })
}

#[derive(Serialize)]
struct VerifyOutput {
    target: String,
    steps: usize,
    tolerance: f64,
    seed: u64,
    pass: bool,
    identities: Vec<IdentityResidual>,
}

fn verify(args: &VerifyArgs) -> Result<Output, Failure> {
    let (target, steps, report) = match (&args.fixture, &args.perm) {
        (Some(name), _) => (name.clone(), 0, verify_fixture(name, args.samples, args.seed)?),
        (None, Some(perm)) => {
            if args.steps == 0 || args.tol.is_nan() || args.tol < 0.0 {
                return Err(Error::InvalidArgument("steps must be positive and tol nonnegative".into()).into());
            }
            let p = Permutation::parse_irreducible(perm)?;
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let lambda = sample_lengths(p.d(), &mut rng);
            let eta: Vec<f64> = (0..p.d()).map(|_| rng.gen()).collect();
            let mut x = StructurePoint::new(IetPoint::new(lambda, p.clone())?, eta);
            let mut report = IdentityReport::default();
            for _ in 0..args.steps {
                report.record("block_form", verify_block_form(&x)?.max_residual(), args.tol);
                x = verify_step_identities(&x, args.tol, &mut report)?;
            }
            (p.to_string(), args.steps, report)
        }
        (None, None) => unreachable!("clap requires --perm or --fixture"),
    };
    let pass = report.pass();
    for e in report.entries.iter().filter(|e| !e.pass) {
        eprintln!("identity {} failed: residual {:e} > {:e}", e.identity_name, e.max_residual, e.tolerance);
    }
    let out = VerifyOutput { target, steps, tolerance: args.tol, seed: args.seed, pass, identities: report.entries };
    Ok(Output { json: to_json(&out)?, code: if pass { 0 } else { EXIT_VERIFY } })
}

#[derive(Serialize)]
struct CertifyOutput {
    #[serde(flatten)]
    certificate: SingularityCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_plus_direct: Option<ChiPlus>,
}

fn certify_sub(args: &CertifyArgs) -> Result<Output, Failure> {
    let s = Substitution2::parse(&args.rule)?;
    if args.nodes < 2 {
        return Err(Error::InvalidArgument("need at least 2 quadrature nodes".into()).into());
    }
    let mahler = MahlerConfig { nodes: args.nodes, mc_samples: args.mc_samples, seed: args.seed };
    let certificate = certify(&s, args.nmax, &mahler)?;
    let chi_plus_direct =
        (args.direct_samples > 0).then(|| chi_plus_direct(&s, args.direct_samples, args.direct_seeds, args.seed));
    if let Some(path) = &args.csv {
        let mut file = std::io::BufWriter::new(fs::File::create(path)?);
        write_log_det_csv(&mut file, &log_det_samples(&s, args.csv_samples, args.seed))?;
    }
    let code = if certificate.verdict == Verdict::Certified { 0 } else { EXIT_NOT_CERTIFIED };
    Ok(Output { json: to_json(&CertifyOutput { certificate, chi_plus_direct })?, code })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: EXIT_INTERNAL, message: e.to_string() })?;
    }
    let out = match &cli.command {
        Command::RauzyClass(a) => rauzy_class(a)?,
        Command::Spectrum(a) => spectrum(a)?,
        Command::Verify(a) => verify(a)?,
        Command::CertifySub(a) => certify_sub(a)?,
    };
    match &cli.out {
        Some(path) => fs::write(path, format!("{}\n", out.json))?,
        None => match writeln!(std::io::stdout().lock(), "{}", out.json) {
            // A closed pipe (`| head`) is the reader's choice, not a failure.
            Err(e) if e.kind() != ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        },
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(out)) => ExitCode::from(out.code),
        Ok(Err(f)) => {
            eprintln!("{}", serde_json::json!({ "error": f.message, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
