//! `converse-kit`: evaluate application bounds, run sweeps and invariant
//! suites, and build packings.
//!
//! Exit codes: 0 success, 1 suite failure, 2 configuration error (including
//! malformed flags), 3 I/O error. `CONVERSE_KIT_THREADS` caps the worker
//! pool. Output files are written atomically and embed a run manifest.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use converse_kit::applications::{
    strong_risk_argmax, sweep, ActiveConfig, AppConfig, CsConfig, DensityConfig, DEFAULT_BETA, DEFAULT_C0,
};
use converse_kit::oracle::{suites, BumpShape};
use converse_kit::packing::{cs_random_packing, gv_greedy, gv_size_bound, GreedyOrder};
use converse_kit::report::{comparison_json, document, sweep_csv, to_json_compact, to_json_string, RunManifest};
use converse_kit::Error;

#[derive(Parser, Debug)]
#[command(name = "converse-kit", version, about = "Minimax risk lower bounds: strong converse vs. Fano")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one application bound and write its JSON report.
    Bound {
        #[command(subcommand)]
        app: AppArgs,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Run a randomised invariant suite.
    Verify(VerifyArgs),
    /// Evaluate a bound over a range of one parameter and write CSV.
    Sweep {
        #[command(subcommand)]
        app: AppArgs,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Construct a packing and write it in the text format.
    Pack {
        #[command(subcommand)]
        kind: PackKind,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug, Clone)]
enum AppArgs {
    /// Density estimation over the hypercube class.
    Density(DensityArgs),
    /// Active learning of boundary fragments.
    Active(ActiveArgs),
    /// Sparse recovery from linear measurements.
    Cs(CsArgs),
}

#[derive(Args, Debug, Clone)]
struct DensityArgs {
    #[arg(long, default_value_t = 1e6)]
    n: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    #[arg(long, value_enum, default_value_t = Shape::Sine)]
    g: Shape,
    /// Override ∫g² of the chosen bump.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_C0)]
    c0: f64,
    /// Override c·sup|g|.
    #[arg(long)]
    c_g: Option<f64>,
    /// Let ν approach its limit as n grows, with this exponent (e.g. 26).
    #[arg(long)]
    nu_schedule: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Shape {
    Sine,
    Quadratic,
}

#[derive(Args, Debug, Clone)]
struct ActiveArgs {
    #[arg(long, default_value_t = 1e6)]
    n: f64,
    #[arg(long, default_value_t = 2)]
    d: u32,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 0.1)]
    c: f64,
    #[arg(long = "H", default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

#[derive(Args, Debug, Clone)]
struct CsArgs {
    #[arg(long, default_value_t = 1e6)]
    n: f64,
    #[arg(long, default_value_t = 128.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// ‖A‖_F²; defaults to n.
    #[arg(long)]
    frob2: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Trimming fraction; defaults to 1/log M.
    #[arg(long)]
    delta_m: Option<f64>,
}

impl AppArgs {
    fn to_config(&self) -> AppConfig {
        match self {
            AppArgs::Density(a) => {
                let shape = match a.g {
                    Shape::Sine => BumpShape::Sine,
                    Shape::Quadratic => BumpShape::Quadratic,
                };
                let mut cfg = DensityConfig::with_shape(a.n, a.nu, a.c, shape);
                cfg.c0 = a.c0;
                cfg.a = a.a.unwrap_or(cfg.a);
                cfg.c_g = a.c_g.unwrap_or(cfg.c_g);
                cfg.nu_schedule = a.nu_schedule;
                AppConfig::Density(cfg)
            }
            AppArgs::Active(a) => AppConfig::Active(ActiveConfig {
                n: a.n,
                d: a.d,
                alpha: a.alpha,
                kappa: a.kappa,
                l: a.l,
                c: a.c,
                h: a.h,
                nu: a.nu,
                lambda: a.lambda,
            }),
            AppArgs::Cs(a) => AppConfig::Cs(CsConfig {
                n: a.n,
                k: a.k,
                sigma_sq: a.sigma2,
                frob_norm_sq: a.frob2.unwrap_or(a.n),
                lambda: a.lambda,
                delta: a.delta,
                beta: a.beta,
                delta_m: a.delta_m,
            }),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct RangeArgs {
    /// Parameter to vary.
    #[arg(long, global = true, default_value = "n")]
    vary: String,
    /// Explicit values, comma separated.
    #[arg(long, global = true, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    values: Vec<f64>,
    #[arg(long, global = true, requires = "to")]
    from: Option<f64>,
    #[arg(long, global = true, requires = "from")]
    to: Option<f64>,
    #[arg(long, global = true, default_value_t = 9)]
    points: usize,
    #[arg(long, global = true, value_enum, default_value_t = Scale::Log)]
    scale: Scale,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Scale {
    Log,
    Linear,
}

impl RangeArgs {
    fn values(&self) -> Result<Vec<f64>, Error> {
        match (self.from, self.to) {
            (Some(lo), Some(hi)) => {
                if self.points == 0 {
                    return Ok(Vec::new());
                }
                if self.scale == Scale::Log && !(lo > 0.0 && hi > 0.0) {
                    return Err(Error::Config("log-spaced ranges need positive end points".into()));
                }
                let k = self.points;
                Ok((0..k)
                    .map(|i| {
                        let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
                        match self.scale {
                            Scale::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                            Scale::Linear => lo + t * (hi - lo),
                        }
                    })
                    .map(|v| if (v - v.round()).abs() < 1e-9 * v.abs().max(1.0) { v.round() } else { v })
                    .collect())
            }
            _ => Ok(self.values.clone()),
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of random instances.
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Word length for the packing suite.
    #[arg(long, default_value_t = 12)]
    m: u32,
    /// Minimum distance for the packing suite.
    #[arg(long, default_value_t = 4)]
    dmin: u32,
    /// Also write the summary as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Suite {
    Soundness,
    Divergence,
    FanoRecovery,
    Packing,
}

#[derive(Subcommand, Debug)]
enum PackKind {
    /// Greedy binary code in {0,1}^m.
    Gv {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        dmin: u32,
        /// Visit words in a seeded random order instead of lexicographically.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Random unit-norm k-sparse vectors in R^n.
    Cs {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Target number of codewords.
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_attempts: usize,
    },
}

enum Failure {
    Suite(String),
    Config(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Suite(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Suite(m) | Failure::Config(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads().and_then(|()| run(cli)) {
        eprintln!("error: {}", f.message());
        return ExitCode::from(f.code());
    }
    ExitCode::SUCCESS
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CONVERSE_KIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Config(format!("CONVERSE_KIT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size the worker pool: {e}")))
}

fn manifest(command: &str, config: Value, seed: Option<u64>) -> RunManifest {
    RunManifest::new(command, config, seed, chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

/// Writes to `path` via a temporary file in the same directory, or to
/// stdout when no path is given.
fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.map_or("stdout".into(), |p| p.display().to_string())));
    let Some(path) = path else {
        return std::io::stdout().write_all(contents.as_bytes()).map_err(io_err);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bound { app, out } => {
            let cfg = app.to_config();
            let report = cfg.evaluate()?;
            let m = manifest(&format!("bound {}", cfg.app()), serde_json::to_value(cfg).expect("plain data"), None);
            emit(out.as_deref(), &to_json_string(&document(&m, comparison_json(&report))))
        }
        Command::Sweep { app, range, out } => {
            let cfg = app.to_config();
            let values = range.values()?;
            let reports = sweep(&cfg, &range.vary, &values)?;
            let m = manifest(
                &format!("sweep {}", cfg.app()),
                json!({ "template": cfg, "vary": range.vary, "values": values }),
                None,
            );
            emit(out.as_deref(), &sweep_csv(&m, &values, &reports))?;
            if let Some((i, interior)) = strong_risk_argmax(&reports) {
                eprintln!(
                    "largest strong risk bound at {} = {} ({})",
                    range.vary,
                    values[i],
                    if interior { "interior" } else { "at the end of the range" }
                );
            }
            Ok(())
        }
        Command::Verify(args) => verify(args),
        Command::Pack { kind, out } => pack(kind, out.as_deref()),
    }
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let summary = match args.suite {
        Suite::Soundness => suites::soundness(args.seed, args.count),
        Suite::FanoRecovery => suites::fano_recovery(args.seed, args.count),
        Suite::Divergence => suites::divergence(args.seed, args.count.min(1000)),
        Suite::Packing => {
            let summary = suites::packing(args.m, args.dmin, args.seed, args.count)?;
            let code = gv_greedy(args.m, args.dmin, GreedyOrder::Lexicographic)?;
            println!(
                "greedy code m = {} d_min = {}: size {} (GV count {})",
                args.m,
                args.dmin,
                code.len(),
                gv_size_bound(args.m, args.dmin)
            );
            summary
        }
    };
    println!("{}", summary.line());
    for f in &summary.failures {
        println!("  {f}");
    }
    if let Some(out) = &args.out {
        let cfg = json!({ "suite": summary.suite, "count": args.count, "m": args.m, "dmin": args.dmin });
        let m = manifest(&format!("verify {}", summary.suite), cfg, Some(args.seed));
        let body = serde_json::to_value(&summary).expect("plain data");
        emit(Some(out), &to_json_string(&document(&m, body)))?;
    }
    if summary.ok() {
        Ok(())
    } else {
        Err(Failure::Suite(format!("{}: {} of {} instances failed", summary.suite, summary.total - summary.passed, summary.total)))
    }
}

fn pack(kind: PackKind, out: Option<&Path>) -> Result<(), Failure> {
    let (cfg, seed, text) = match kind {
        PackKind::Gv { m, dmin, seed } => {
            let order = seed.map_or(GreedyOrder::Lexicographic, GreedyOrder::SeededRandom);
            let code = gv_greedy(m, dmin, order)?;
            eprintln!("greedy code: {} words (GV count {})", code.len(), gv_size_bound(m, dmin));
            (json!({ "kind": "gv", "m": m, "dmin": dmin }), seed, code.to_text())
        }
        PackKind::Cs { n, k, count, seed, max_attempts } => {
            let cfg = json!({ "kind": "cs", "n": n, "k": k, "count": count, "max_attempts": max_attempts });
            match cs_random_packing(n, k, count, seed, max_attempts) {
                Ok(p) => {
                    eprintln!("sparse packing: {} codewords, beta_hat = {}", p.len(), p.beta_hat());
                    (cfg, Some(seed), p.to_text())
                }
                Err(Error::IncompletePacking { found, target, attempts, .. }) => {
                    return Err(Failure::Suite(format!(
                        "only {found} of {target} codewords found after {attempts} attempts"
                    )))
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let m = manifest("pack", cfg, seed);
    emit(out, &format!("# manifest: {}\n{text}", to_json_compact(&m)))
}
