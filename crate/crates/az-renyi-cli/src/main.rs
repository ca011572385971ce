//! Command-line front end for the az-renyi toolkit.
//!
//! stdout carries only machine-readable payload (JSON, or nothing when the
//! output goes to a file); diagnostics go to stderr. Exit codes: 0 success
//! or property pass, 1 property violation found, 2 input error, 3 I/O error.

mod files;
mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};

use az_renyi::analysis::{sweep, SweepGrid};
use az_renyi::channels::{make_channel, ChannelSpec};
use az_renyi::divergence::{self, AlphaZ, DivValue};
use az_renyi::{sample, PositiveOperator};
use clap::{Args, Parser, Subcommand, ValueEnum};

use files::{ChannelFile, MatrixFile};
use suites::Suite;

#[derive(Parser)]
#[command(
    name = "az-renyi",
    version,
    about = "Evaluate the alpha-z family of Renyi divergences on density matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate Q and D for one pair of operators at a single parameter point
    Compute(ComputeArgs),
    /// Evaluate a parameter grid and write the rows as CSV
    Sweep(SweepArgs),
    /// Run a seeded property suite and print a JSON report
    Check(CheckArgs),
    /// Generate a seeded random state or channel file
    Random(RandomArgs),
}

#[derive(Args)]
struct ComputeArgs {
    /// First operator, as a JSON matrix file
    #[arg(long)]
    psi: PathBuf,
    /// Second operator, as a JSON matrix file
    #[arg(long)]
    phi: PathBuf,
    /// Renyi order alpha
    #[arg(long)]
    alpha: f64,
    /// Power-mean parameter z, or `inf`; required unless the variant fixes it
    #[arg(long)]
    z: Option<String>,
    /// Named member of the family
    #[arg(long, value_enum, default_value_t = Variant::Auto)]
    variant: Variant,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    /// Use alpha and z as given
    Auto,
    /// The z = 1 family
    Petz,
    /// The z = alpha family
    Sandwiched,
    /// The alpha = 1 relative entropy
    D1,
}

#[derive(Args)]
struct SweepArgs {
    /// First operator, as a JSON matrix file
    #[arg(long)]
    psi: PathBuf,
    /// Second operator, as a JSON matrix file
    #[arg(long)]
    phi: PathBuf,
    /// Comma-separated alpha values, ascending, none equal to 1
    #[arg(long)]
    alphas: String,
    /// Comma-separated z values, ascending; `inf` may be appended
    #[arg(long)]
    zs: String,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Property suite to run
    #[arg(long, value_enum)]
    suite: Suite,
    /// Seed for the instance stream
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeded instances per suite
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Matrix dimension of the drawn instances (2 through 8)
    #[arg(long, default_value_t = 3)]
    dim: usize,
}

#[derive(Args)]
struct RandomArgs {
    /// What to generate
    #[arg(long, value_enum)]
    kind: RandomKind,
    /// Matrix dimension
    #[arg(long)]
    dim: usize,
    /// Generator seed
    #[arg(long)]
    seed: u64,
    /// State rank (states only; defaults to full rank)
    #[arg(long)]
    rank: Option<usize>,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RandomKind {
    State,
    Channel,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Io(m) => m,
        }
    }
}

impl From<az_renyi::Error> for Failure {
    fn from(e: az_renyi::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn input<T>(message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Input(message.into()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_state(path: &Path) -> Result<PositiveOperator, Failure> {
    let text = read_text(path)?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let m = file
        .to_matrix()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    PositiveOperator::from_hermitian(m)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_pair(psi: &Path, phi: &Path) -> Result<(PositiveOperator, PositiveOperator), Failure> {
    let psi = load_state(psi)?;
    let phi = load_state(phi)?;
    if psi.dim() != phi.dim() {
        return input(format!(
            "operator dimensions disagree: {} vs {}",
            psi.dim(),
            phi.dim()
        ));
    }
    Ok((psi, phi))
}

enum ZArg {
    Finite(f64),
    Infinite,
}

fn parse_z(raw: &str) -> Result<ZArg, Failure> {
    let token = raw.trim();
    if token == "inf" {
        return Ok(ZArg::Infinite);
    }
    match token.parse::<f64>() {
        Ok(v) => Ok(ZArg::Finite(v)),
        Err(_) => input(format!("--z must be a number or `inf`, got {raw:?}")),
    }
}

/// Resolves `--z` for a variant that fixes the value, allowing an explicit
/// flag only when it restates the same number.
fn fixed_z(implied: f64, given: &Option<String>, variant: &str) -> Result<f64, Failure> {
    match given {
        None => Ok(implied),
        Some(raw) => match parse_z(raw)? {
            ZArg::Finite(v) if v == implied => Ok(implied),
            _ => input(format!("--variant {variant} fixes z = {implied}; drop --z or pass that value")),
        },
    }
}

fn div_json(v: &DivValue) -> serde_json::Value {
    match v {
        DivValue::Finite(x) => serde_json::json!(x),
        DivValue::PlusInfinity => serde_json::json!("inf"),
    }
}

fn cmd_compute(args: ComputeArgs) -> Result<i32, Failure> {
    let (psi, phi) = load_pair(&args.psi, &args.phi)?;

    if args.variant == Variant::D1 {
        if args.alpha != 1.0 {
            return input("variant d1 evaluates the alpha = 1 divergence; pass --alpha 1");
        }
        if args.z.is_some() {
            return input("--z does not apply to variant d1");
        }
        let d = divergence::relative_entropy_d1(&psi, &phi)?;
        let payload = serde_json::json!({
            "Q": serde_json::Value::Null,
            "D": div_json(&d),
            "region": "d1",
            "psi_trace": psi.trace(),
        });
        println!("{payload}");
        return Ok(0);
    }

    if args.alpha == 1.0 {
        return input("alpha = 1 lies outside the two-parameter family; use --variant d1");
    }
    let z = match args.variant {
        Variant::Auto => match &args.z {
            None => return input("--z is required (or pick a variant that fixes it)"),
            Some(raw) => parse_z(raw)?,
        },
        Variant::Petz => ZArg::Finite(fixed_z(1.0, &args.z, "petz")?),
        Variant::Sandwiched => ZArg::Finite(fixed_z(args.alpha, &args.z, "sandwiched")?),
        Variant::D1 => unreachable!("handled above"),
    };

    let (q, region) = match z {
        ZArg::Finite(zv) => {
            let par = AlphaZ::new(args.alpha, zv)?;
            (divergence::q_alpha_z(&psi, &phi, &par)?, par.classify())
        }
        ZArg::Infinite => {
            let par = AlphaZ::new(args.alpha, f64::INFINITY)?;
            (
                divergence::q_alpha_inf(&psi, &phi, args.alpha)?,
                par.classify(),
            )
        }
    };
    let d = divergence::d_from_q(q, psi.trace(), args.alpha)?;
    let payload = serde_json::json!({
        "Q": div_json(&q),
        "D": div_json(&d),
        "region": region.to_string(),
        "psi_trace": psi.trace(),
    });
    println!("{payload}");
    Ok(0)
}

fn parse_alpha_list(raw: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Input(format!("--alphas contains a non-number: {tok:?}")))
        })
        .collect()
}

fn parse_z_list(raw: &str) -> Result<(Vec<f64>, bool), Failure> {
    let mut zs = Vec::new();
    let mut include_inf = false;
    for tok in raw.split(',') {
        match parse_z(tok)? {
            ZArg::Finite(v) => zs.push(v),
            ZArg::Infinite => include_inf = true,
        }
    }
    Ok((zs, include_inf))
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, Failure> {
    let (psi, phi) = load_pair(&args.psi, &args.phi)?;
    let alphas = parse_alpha_list(&args.alphas)?;
    let (zs, include_inf) = parse_z_list(&args.zs)?;
    let grid = SweepGrid::new(alphas, zs, include_inf)?;
    let report = sweep(&psi, &phi, &grid)?;
    write_text(&args.out, &report.to_csv())?;
    eprintln!("{} rows -> {}", report.rows.len(), args.out.display());
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> Result<i32, Failure> {
    if !(2..=8).contains(&args.dim) {
        return input("--dim must lie between 2 and 8");
    }
    if args.trials == 0 {
        return input("--trials must be positive");
    }
    let report = suites::run_suite(args.suite, args.seed, args.trials, args.dim)?;
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Input(format!("report serialization failed: {e}")))?;
    println!("{text}");
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_random(args: RandomArgs) -> Result<i32, Failure> {
    if args.dim == 0 {
        return input("--dim must be positive");
    }
    let text = match args.kind {
        RandomKind::State => {
            let rank = args.rank.unwrap_or(args.dim);
            if rank == 0 || rank > args.dim {
                return input(format!(
                    "--rank must lie between 1 and the dimension {}",
                    args.dim
                ));
            }
            let mut rng = sample::rng(args.seed);
            let state = sample::random_state(args.dim, rank, &mut rng)?;
            serde_json::to_string_pretty(&MatrixFile::from_matrix(state.entries()))
        }
        RandomKind::Channel => {
            if args.rank.is_some() {
                return input("--rank applies only to --kind state");
            }
            let map = make_channel(&ChannelSpec::RandomCptp {
                dim_in: args.dim,
                dim_out: args.dim,
                seed: args.seed,
            })?;
            let file = ChannelFile::from_kraus_map(&map)
                .expect("a generated channel is square and carries Kraus operators");
            serde_json::to_string_pretty(&file)
        }
    }
    .map_err(|e| Failure::Input(format!("serialization failed: {e}")))?;
    write_text(&args.out, &(text + "\n"))?;
    eprintln!("wrote {}", args.out.display());
    Ok(0)
}

/// Honors `AZ_RENYI_THREADS` before any parallel work starts; a bad value
/// is diagnosed and ignored.
fn configure_threads() {
    if let Ok(raw) = std::env::var("AZ_RENYI_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring AZ_RENYI_THREADS={raw:?}: expected a positive integer"),
        }
    }
}

fn main() {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(args) => cmd_compute(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Check(args) => cmd_check(args),
        Command::Random(args) => cmd_random(args),
    };
    let code = match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.code()
        }
    };
    let _ = std::io::stdout().flush();
    std::process::exit(code);
}
