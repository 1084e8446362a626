//! `qmf`: synthetic cloud generation, denoising, penalty tuning, and
//! benchmarking from the command line.
//!
//! The binary is a thin front end over the `qmf` library: every subcommand
//! parses and validates its inputs, calls one library entry point, and
//! serializes the result. Exit codes: 0 success, 1 runtime or I/O failure,
//! 2 usage error. Outputs are byte-identical across reruns and thread
//! counts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmf::datasets::{benchmark_sweep, evaluate, generate, DeltaRule, GenSpec, Method, Shape};
use qmf::denoise::{
    build_chart, denoise_all, BandwidthRule, DenoiseConfig, Neighborhood, PointStatus, Weighting,
};
use qmf::features::feature_len;
use qmf::fit::init_embedding;
use qmf::io;
use qmf::ridge::{tune_lambda, tuning_curve, RegConfig, RegMode, TuneStatus};

const FORMAT_HELP: &str = "\
File formats:
  cloud CSV      one row per point, comma-separated coordinates, header
                 `x0,x1,...`; reals carry 17 significant digits
  truth sidecar  `<name>.truth.json` next to a cloud CSV, describing the
                 clean manifold the cloud was sampled from
  denoise report JSON array of {index, status, lambda_used, iterations,
                 warning} entries, one per point
  tuning CSV     header `lambda,s,s_prime,s_double_prime`
  bench CSV      header `method,K,mse,sd`

Threads: worker count comes from --threads, then the QMF_THREADS
environment variable, then the available parallelism. Results do not
depend on the thread count.";

#[derive(Parser)]
#[command(
    name = "qmf",
    version,
    about = "Quadratic matrix factorization tools for manifold denoising",
    after_help = FORMAT_HELP
)]
struct Cli {
    /// Worker threads for batch denoising (overrides QMF_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a noisy point cloud near a reference manifold.
    Generate(GenerateArgs),
    /// Denoise every point of a cloud with local quadratic fits.
    Denoise(DenoiseArgs),
    /// Export the penalty curve s(lambda) and the tuned lambda* for one chart.
    Tune(TuneArgs),
    /// Compare denoising methods over seeded clouds and chart sizes.
    Bench(BenchArgs),
}

/// Chart weighting switch: `e` is equal weights, `k` is Gaussian kernel
/// weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    E,
    K,
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON file holding a generation spec; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifold to sample: circle, sphere, sine, or swiss (long names work too).
    #[arg(long)]
    shape: Option<String>,
    /// Number of points.
    #[arg(long)]
    n: Option<usize>,
    /// Standard deviation of the ambient Gaussian noise.
    #[arg(long)]
    sigma: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; the truth sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DenoiseArgs {
    /// Input cloud CSV.
    #[arg(long)]
    input: PathBuf,
    /// JSON file holding a denoise config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifold dimension of the local fits.
    #[arg(long)]
    d: Option<usize>,
    /// Chart size: the K nearest neighbors of each target.
    #[arg(long, conflicts_with = "radius")]
    k: Option<usize>,
    /// Chart radius: all points within this distance of each target.
    #[arg(long)]
    radius: Option<f64>,
    /// Chart weighting: e = equal, k = kernel.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Kernel bandwidth: "sphere-paper", "knn-dist", or a fixed number.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Sensitivity target: a positive number or "sphere-paper".
    #[arg(long, conflicts_with = "lambda")]
    delta: Option<String>,
    /// Fixed penalty weight; 0 disables regularization.
    #[arg(long)]
    lambda: Option<f64>,
    /// Output CSV for the denoised cloud.
    #[arg(long)]
    out: PathBuf,
    /// Per-point JSON report (default: output path with a .report.json suffix).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    /// Input cloud CSV.
    #[arg(long)]
    input: PathBuf,
    /// Manifold dimension of the chart fit.
    #[arg(long)]
    d: usize,
    /// Chart size around the target point.
    #[arg(long, conflicts_with = "radius")]
    k: Option<usize>,
    /// Chart radius around the target point.
    #[arg(long)]
    radius: Option<f64>,
    /// Index of the target point inside the input cloud.
    #[arg(long, default_value_t = 0)]
    target: usize,
    /// Chart weighting: e = equal, k = kernel.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Kernel bandwidth: "sphere-paper", "knn-dist", or a fixed number.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Sensitivity defining lambda* through s'(lambda*) = -delta.
    #[arg(long)]
    delta: f64,
    /// Smallest grid penalty.
    #[arg(long, default_value_t = 1e-4)]
    grid_min: f64,
    /// Largest grid penalty.
    #[arg(long, default_value_t = 1e2)]
    grid_max: f64,
    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 50)]
    grid_points: usize,
    /// Output CSV for the curve.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Manifold to sample: circle, sphere, sine, or swiss.
    #[arg(long)]
    shape: String,
    /// Points per cloud.
    #[arg(long, default_value_t = 240)]
    n: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Comma-separated methods: rqmf-e, rqmf-k, local-pca, lmf.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    /// Comma-separated chart sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Independently seeded clouds per cell.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Base RNG seed; repeat r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sensitivity rule: a positive number or "sphere-paper".
    #[arg(long, default_value = "sphere-paper")]
    delta: String,
    /// Output CSV for the table.
    #[arg(long)]
    out: PathBuf,
}

/// Failures split by exit code: usage errors exit 2, runtime errors exit 1.
enum Failure {
    Usage(String),
    Runtime(String),
}

type CmdResult<T = ()> = Result<T, Failure>;

fn usage<T>(message: impl Into<String>) -> CmdResult<T> {
    Err(Failure::Usage(message.into()))
}

fn rt(err: qmf::Error) -> Failure {
    Failure::Runtime(err.to_string())
}

fn us(err: qmf::Error) -> Failure {
    Failure::Usage(err.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Denoise(args) => cmd_denoise(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Applies --threads, then QMF_THREADS, then leaves the default pool alone.
fn configure_threads(flag: Option<usize>) -> CmdResult {
    let count = match flag {
        Some(n) => Some(n),
        None => match std::env::var("QMF_THREADS") {
            Ok(text) => Some(text.trim().parse::<usize>().map_err(|_| {
                Failure::Usage(format!("QMF_THREADS must be a positive integer, got {text:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = count {
        if n == 0 {
            return usage("thread count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|err| Failure::Runtime(err.to_string()))?;
    }
    Ok(())
}

/// Reads an optional JSON config file. Open/read problems are runtime
/// failures; malformed content or unknown keys are usage errors.
fn read_config<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>) -> CmdResult<Option<T>> {
    let Some(path) = path else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|err| Failure::Runtime(format!("{}: {err}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|err| Failure::Usage(format!("{}: {err}", path.display())))
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let base: Option<GenSpec> = read_config(&args.config)?;
    let shape = match &args.shape {
        Some(text) => Shape::from_str(text).map_err(us)?,
        None => match &base {
            Some(spec) => spec.shape,
            None => return usage("--shape is required (or provide --config)"),
        },
    };
    let n = match args.n.or(base.map(|b| b.n)) {
        Some(n) => n,
        None => return usage("--n is required (or provide --config)"),
    };
    let noise_sigma = match args.sigma.or(base.map(|b| b.noise_sigma)) {
        Some(s) => s,
        None => return usage("--sigma is required (or provide --config)"),
    };
    let seed = args.seed.or(base.map(|b| b.seed)).unwrap_or(0);

    let spec = GenSpec {
        shape,
        n,
        noise_sigma,
        seed,
    };
    let cloud = generate(&spec).map_err(us)?;
    io::save_cloud(&args.out, &cloud).map_err(rt)?;
    println!("wrote {} points to {}", cloud.len(), args.out.display());
    Ok(())
}

/// Parses a bandwidth rule flag: preset name or a positive number.
fn parse_bandwidth(text: &str) -> CmdResult<BandwidthRule> {
    match text {
        "sphere-paper" => Ok(BandwidthRule::SpherePaper),
        "knn-dist" => Ok(BandwidthRule::KnnDist),
        other => match other.parse::<f64>() {
            Ok(h) if h.is_finite() && h > 0.0 => Ok(BandwidthRule::Fixed(h)),
            _ => usage(format!(
                "bandwidth must be \"sphere-paper\", \"knn-dist\", or a positive number, got {other:?}"
            )),
        },
    }
}

/// Resolves the regularization mode from --delta/--lambda. The sphere-paper
/// delta preset needs a K-style chart because the preset is a function of K.
fn resolve_reg(
    delta: &Option<String>,
    lambda: Option<f64>,
    neighborhood: Neighborhood,
    weighting: Weighting,
) -> CmdResult<Option<RegMode>> {
    if let Some(lambda) = lambda {
        let mode = RegMode::Lambda(lambda);
        mode.validate().map_err(us)?;
        return Ok(Some(mode));
    }
    let Some(text) = delta else {
        return Ok(None);
    };
    let rule = DeltaRule::from_str(text).map_err(us)?;
    let value = match rule {
        DeltaRule::Fixed(v) => v,
        DeltaRule::SpherePaper => {
            let Neighborhood::Knn(k) = neighborhood else {
                return usage("--delta sphere-paper needs --k, not --radius");
            };
            let method = match weighting {
                Weighting::Equal => Method::RqmfE,
                Weighting::Gaussian => Method::RqmfK,
            };
            rule.delta_for(method, k)
        }
    };
    Ok(Some(RegMode::Delta(value)))
}

fn cmd_denoise(args: DenoiseArgs) -> CmdResult {
    let base: Option<DenoiseConfig> = read_config(&args.config)?;

    let d = match args.d.or(base.as_ref().map(|c| c.d)) {
        Some(d) => d,
        None => return usage("--d is required (or provide --config)"),
    };
    let neighborhood = if let Some(k) = args.k {
        Neighborhood::Knn(k)
    } else if let Some(radius) = args.radius {
        Neighborhood::Radius(radius)
    } else if let Some(cfg) = &base {
        cfg.neighborhood
    } else {
        return usage("--k or --radius is required (or provide --config)");
    };
    let weighting = match args.mode {
        Some(Mode::E) => Weighting::Equal,
        Some(Mode::K) => Weighting::Gaussian,
        None => base.as_ref().map(|c| c.weighting).unwrap_or(Weighting::Equal),
    };
    let bandwidth_rule = match &args.bandwidth {
        Some(text) => parse_bandwidth(text)?,
        None => base
            .as_ref()
            .map(|c| c.bandwidth_rule)
            .unwrap_or(BandwidthRule::SpherePaper),
    };
    let reg_mode = match resolve_reg(&args.delta, args.lambda, neighborhood, weighting)? {
        Some(mode) => mode,
        None => match &base {
            Some(cfg) => cfg.reg.reg,
            None => return usage("--delta or --lambda is required (or provide --config)"),
        },
    };

    let mut cfg = base.unwrap_or_else(|| {
        DenoiseConfig::new(d, neighborhood, RegConfig::lambda(0.0))
    });
    cfg.d = d;
    cfg.neighborhood = neighborhood;
    cfg.weighting = weighting;
    cfg.bandwidth_rule = bandwidth_rule;
    cfg.reg.reg = reg_mode;
    cfg.reg.weights = None;

    let cloud = io::load_cloud(&args.input).map_err(rt)?;
    if let Neighborhood::Knn(k) = cfg.neighborhood {
        let threshold = feature_len(cfg.d);
        if k <= threshold {
            eprintln!(
                "warning: chart size {k} is not above the feature dimension {threshold}; \
                 fits may be unstable"
            );
        }
    }

    let output = denoise_all(&cloud, &cfg).map_err(rt)?;

    io::save_cloud(&args.out, &output.cloud).map_err(rt)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| report_sibling(&args.out));
    io::write_json(&report_path, &output.reports).map_err(rt)?;

    let denoised = count_status(&output.reports, PointStatus::Denoised);
    let fallback = count_status(&output.reports, PointStatus::Fallback);
    let failed = count_status(&output.reports, PointStatus::Failed);
    println!(
        "denoised {} points ({} quadratic, {} fallback, {} failed)",
        output.reports.len(),
        denoised,
        fallback,
        failed
    );
    if let Some(truth) = &output.cloud.truth {
        let score = evaluate(&output.cloud, truth).map_err(rt)?;
        println!("mse = {}", score.mse);
        println!("sd = {}", score.sd);
    }
    Ok(())
}

fn count_status(reports: &[qmf::denoise::PointReport], status: PointStatus) -> usize {
    reports.iter().filter(|r| r.status == status).count()
}

/// `out.csv` maps to `out.report.json`.
fn report_sibling(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "denoise".to_string());
    out.with_file_name(format!("{stem}.report.json"))
}

fn cmd_tune(args: TuneArgs) -> CmdResult {
    if !(args.grid_min > 0.0 && args.grid_min.is_finite()) {
        return usage("--grid-min must be positive");
    }
    if !(args.grid_max >= args.grid_min && args.grid_max.is_finite()) {
        return usage("--grid-max must be at least --grid-min");
    }
    if args.grid_points == 0 {
        return usage("--grid-points must be at least 1");
    }
    let neighborhood = if let Some(k) = args.k {
        Neighborhood::Knn(k)
    } else if let Some(radius) = args.radius {
        Neighborhood::Radius(radius)
    } else {
        return usage("--k or --radius is required");
    };
    let weighting = match args.mode {
        Some(Mode::K) => Weighting::Gaussian,
        _ => Weighting::Equal,
    };
    let bandwidth_rule = match &args.bandwidth {
        Some(text) => parse_bandwidth(text)?,
        None => BandwidthRule::SpherePaper,
    };

    let cloud = io::load_cloud(&args.input).map_err(rt)?;
    if args.target >= cloud.len() {
        return usage(format!(
            "--target {} is out of range for a cloud of {} points",
            args.target,
            cloud.len()
        ));
    }

    let mut cfg = DenoiseConfig::new(args.d, neighborhood, RegConfig::delta(args.delta));
    cfg.weighting = weighting;
    cfg.bandwidth_rule = bandwidth_rule;
    let y = cloud.points.column(args.target).into_owned();
    let chart = build_chart(&cloud, &y, &cfg).map_err(us)?;

    // Penalty diagnostics run on the chart's PCA embedding, the same
    // starting point the quadratic solver uses.
    let members = chart.members(&cloud);
    let mean = members.column_mean();
    let mut centered = members.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let embedding = init_embedding(&centered, args.d).map_err(rt)?;

    let grid = log_grid(args.grid_min, args.grid_max, args.grid_points);
    let curve = tuning_curve(&centered, &embedding, &chart.weights, &grid).map_err(rt)?;
    let tuned = tune_lambda(&centered, &embedding, &chart.weights, args.delta).map_err(rt)?;

    let file = std::fs::File::create(&args.out)
        .map_err(|err| Failure::Runtime(format!("{}: {err}", args.out.display())))?;
    io::write_tuning_curve_csv(std::io::BufWriter::new(file), &curve).map_err(rt)?;

    match tuned.status {
        TuneStatus::Interior => {}
        TuneStatus::Floored => eprintln!(
            "warning: the curve is already flatter than delta = {}; lambda* pinned at the floor",
            args.delta
        ),
        TuneStatus::Ceiling => eprintln!(
            "warning: the curve stays steeper than delta = {} over the whole bracket; \
             lambda* pinned at the ceiling",
            args.delta
        ),
    }
    println!("lambda_star = {}", tuned.lambda);
    println!("status = {}", match tuned.status {
        TuneStatus::Interior => "interior",
        TuneStatus::Floored => "floored",
        TuneStatus::Ceiling => "ceiling",
    });
    println!("wrote {} grid rows to {}", grid.len(), args.out.display());
    Ok(())
}

/// Log-spaced grid including both endpoints.
fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 || min == max {
        return vec![min];
    }
    let (lo, hi) = (min.ln(), max.ln());
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let shape = Shape::from_str(&args.shape).map_err(us)?;
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|text| Method::from_str(text).map_err(us))
        .collect::<CmdResult<_>>()?;
    let rule = DeltaRule::from_str(&args.delta).map_err(us)?;
    let spec = GenSpec {
        shape,
        n: args.n,
        noise_sigma: args.sigma,
        seed: args.seed,
    };

    let table =
        benchmark_sweep(&spec, &methods, &args.k, &rule, args.repeats, args.seed).map_err(us)?;

    for failure in &table.failures {
        eprintln!("warning: {failure}");
    }
    let file = std::fs::File::create(&args.out)
        .map_err(|err| Failure::Runtime(format!("{}: {err}", args.out.display())))?;
    io::write_bench_csv(std::io::BufWriter::new(file), &table).map_err(rt)?;
    println!("wrote {} rows to {}", table.rows.len(), args.out.display());
    Ok(())
}
