//! Command-line front end: synthetic data generation, private CDF
//! estimation, benchmark sweeps, simulated federation, streaming state
//! updates, and private boxplots.
//!
//! Exit codes: 0 on success, 2 for configuration problems (bad flags,
//! bad config file, invalid parameters), 3 for data problems (unreadable
//! or malformed inputs, values outside declared bounds, incompatible
//! states).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use dpcdf::data::{read_value_column, RawDataset, RngSeed};
use dpcdf::error::Error;
use dpcdf::estimators::{
    aq_estimate, cdf_from_noisy_moments, hq_estimate, pp_estimate, AqParams, CdfEstimate,
    EstimateMeta, HqParams, MethodMeta,
};
use dpcdf::experiment::{
    render_results, run_benchmark, strip_wall_times, ExperimentConfig,
};
use dpcdf::federation::{aggregate, site_contribution, update, MomentState, SiteContribution};
use dpcdf::mechanisms::PrivacyParams;
use dpcdf::metrics::DistributionSpec;
use dpcdf::sampling::{boxplot_stats, resample_from_cdf, sample_distribution};

#[derive(Parser)]
#[command(
    name = "dpcdf",
    version,
    about = "Differentially private CDF estimation via orthogonal-series moment perturbation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic dataset and write it as a one-column CSV.
    Sample(SampleArgs),
    /// Estimate a private CDF from a one-column CSV.
    Estimate(EstimateArgs),
    /// Run a configured benchmark sweep and write a results CSV.
    Benchmark(BenchmarkArgs),
    /// Aggregate per-site data or contribution files into one CDF.
    Federated(FederatedArgs),
    /// Fold a new data batch into a moment state.
    Update(UpdateArgs),
    /// Private boxplot: PP estimate, resample, summarize.
    Boxplot(BoxplotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Normal,
    Lognormal,
    Beta,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pp,
    Hq,
    Aq,
}

#[derive(clap::Args)]
struct SampleArgs {
    /// Distribution family.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Mean (normal).
    #[arg(long, default_value_t = 0.0)]
    mean: f64,
    /// Standard deviation (normal).
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    /// Log-scale mean (lognormal).
    #[arg(long, default_value_t = 0.0)]
    logmean: f64,
    /// Log-scale standard deviation (lognormal).
    #[arg(long, default_value_t = 1.0)]
    logsd: f64,
    /// First shape (beta).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Second shape (beta).
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Lower endpoint (uniform).
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    /// Upper endpoint (uniform).
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Number of draws.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit a `value` header line.
    #[arg(long)]
    header: bool,
    /// Output file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// One-column CSV of raw values.
    #[arg(long)]
    input: PathBuf,
    /// Estimator to run.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Privacy budget epsilon.
    #[arg(long)]
    epsilon: f64,
    /// Privacy budget delta; defaults to n^(-3/2) of the input size.
    #[arg(long)]
    delta: Option<f64>,
    /// Projection order (pp).
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Histogram bin count (hq).
    #[arg(long, default_value_t = 30)]
    bins: usize,
    /// Quantile iterations (aq).
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Known data bounds as `lo,hi`.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: (f64, f64),
    /// Output grid size.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the first input line.
    #[arg(long)]
    has_header: bool,
    /// Output file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchmarkArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Keep measured wall times instead of zeroing them.
    #[arg(long)]
    timings: bool,
    /// Output file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct FederatedArgs {
    /// Per-site one-column CSVs; each site is perturbed locally here.
    #[arg(long, num_args = 1.., required_unless_present = "contributions", conflicts_with = "contributions")]
    sites: Vec<PathBuf>,
    /// Per-site contribution JSON files (already perturbed).
    #[arg(long, num_args = 1..)]
    contributions: Vec<PathBuf>,
    /// Per-site privacy budget epsilon (CSV mode).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Per-site delta; defaults to each site's n^(-3/2) (CSV mode).
    #[arg(long)]
    delta: Option<f64>,
    /// Projection order (CSV mode).
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Known data bounds as `lo,hi` (shared by all sites).
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: (f64, f64),
    /// Output grid size.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    /// RNG seed (CSV mode).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the first line of each site CSV.
    #[arg(long)]
    has_header: bool,
    /// CDF output file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the aggregated moment state JSON here.
    #[arg(long)]
    emit_state: Option<PathBuf>,
}

#[derive(clap::Args)]
struct UpdateArgs {
    /// Existing moment state JSON; omitted = start from empty.
    #[arg(long)]
    state: Option<PathBuf>,
    /// New batch as a one-column CSV.
    #[arg(long)]
    batch: PathBuf,
    /// Privacy budget epsilon for this batch.
    #[arg(long)]
    epsilon: f64,
    /// Delta for this batch; defaults to the batch's n^(-3/2).
    #[arg(long)]
    delta: Option<f64>,
    /// Projection order; must match the state's order.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Known data bounds as `lo,hi`.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: (f64, f64),
    /// Output grid size for --output.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the first batch line.
    #[arg(long)]
    has_header: bool,
    /// New state JSON file; stdout if omitted.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Optional CDF CSV of the updated state.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BoxplotArgs {
    /// One-column CSV of raw values.
    #[arg(long)]
    input: PathBuf,
    /// Privacy budget epsilon.
    #[arg(long)]
    epsilon: f64,
    /// Privacy budget delta; defaults to n^(-3/2) of the input size.
    #[arg(long)]
    delta: Option<f64>,
    /// Projection order.
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Known data bounds as `lo,hi`.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: (f64, f64),
    /// CDF grid size.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    /// Resample count; defaults to the input size.
    #[arg(long)]
    resamples: Option<usize>,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the first input line.
    #[arg(long)]
    has_header: bool,
    /// Summary JSON file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad bound {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad bound {hi:?}"))?;
    Ok((lo, hi))
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => run_sample(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Benchmark(args) => run_benchmark_cmd(args),
        Command::Federated(args) => run_federated(args),
        Command::Update(args) => run_update(args),
        Command::Boxplot(args) => run_boxplot(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

// 3 = the inputs are at fault, 2 = the invocation or config is.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyDataset
        | Error::NonPositiveN
        | Error::OutOfBounds { .. }
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::MismatchedOrder
        | Error::EmptyContributionList
        | Error::DegenerateCdf => 3,
        _ => 2,
    }
}

fn write_output(path: &Option<PathBuf>, content: &str) -> dpcdf::Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, content)?),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn default_delta(n: usize) -> f64 {
    (n as f64).powf(-1.5)
}

fn cdf_csv(estimate: &CdfEstimate) -> String {
    let mut out = String::from("x,cdf\n");
    for (x, v) in estimate.xs().iter().zip(estimate.values()) {
        out.push_str(&format!("{x},{v}\n"));
    }
    out
}

fn pretty_json<T: serde::Serialize>(value: &T) -> dpcdf::Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParameters(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn read_dataset(path: &Path, has_header: bool, bounds: (f64, f64)) -> dpcdf::Result<RawDataset> {
    let values = read_value_column(path, has_header)?;
    RawDataset::new(values, bounds)
}

fn run_sample(args: SampleArgs) -> dpcdf::Result<()> {
    let spec = match args.family {
        FamilyArg::Normal => DistributionSpec::Normal {
            mean: args.mean,
            sd: args.sd,
        },
        FamilyArg::Lognormal => DistributionSpec::Lognormal {
            logmean: args.logmean,
            logsd: args.logsd,
        },
        FamilyArg::Beta => DistributionSpec::Beta {
            alpha: args.alpha,
            beta: args.beta,
        },
        FamilyArg::Uniform => DistributionSpec::Uniform {
            lo: args.lo,
            hi: args.hi,
        },
    };
    let data = sample_distribution(&spec, args.n, RngSeed::new(args.seed, 0))?;
    let mut out = String::new();
    if args.header {
        out.push_str("value\n");
    }
    for v in data.values() {
        out.push_str(&format!("{v}\n"));
    }
    write_output(&args.output, &out)
}

fn run_estimate(args: EstimateArgs) -> dpcdf::Result<()> {
    let data = read_dataset(&args.input, args.has_header, args.bounds)?;
    let delta = args.delta.unwrap_or_else(|| default_delta(data.n()));
    let params = PrivacyParams::new(args.epsilon, delta)?;
    let seed = RngSeed::new(args.seed, 0);
    let estimate = match args.method {
        MethodArg::Pp => pp_estimate(&data, params, args.k, args.grid, seed)?,
        MethodArg::Hq => hq_estimate(&data, params, HqParams::new(args.bins)?, args.grid, seed)?,
        MethodArg::Aq => aq_estimate(
            &data,
            params,
            AqParams::new(args.iterations)?,
            args.grid,
            seed,
        )?,
    };
    write_output(&args.output, &cdf_csv(&estimate))
}

fn run_benchmark_cmd(args: BenchmarkArgs) -> dpcdf::Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        Error::ConfigInvalid(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::ConfigInvalid(format!("bad config: {e}")))?;
    let mut rows = run_benchmark(&config)?;
    if !args.timings {
        strip_wall_times(&mut rows);
    }
    write_output(&args.output, &render_results(&rows)?)
}

fn run_federated(args: FederatedArgs) -> dpcdf::Result<()> {
    let contributions: Vec<SiteContribution> = if !args.sites.is_empty() {
        let epsilon = args.epsilon.ok_or_else(|| {
            Error::ConfigInvalid("--epsilon is required with --sites".into())
        })?;
        args.sites
            .iter()
            .enumerate()
            .map(|(i, path)| {
                let data = read_dataset(path, args.has_header, args.bounds)?;
                let delta = args.delta.unwrap_or_else(|| default_delta(data.n()));
                let params = PrivacyParams::new(epsilon, delta)?;
                site_contribution(&data, params, args.k, RngSeed::new(args.seed, i as u64))
            })
            .collect::<dpcdf::Result<_>>()?
    } else {
        args.contributions
            .iter()
            .map(|path| {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    line: e.line(),
                    message: format!("{}: {e}", path.display()),
                })
            })
            .collect::<dpcdf::Result<_>>()?
    };

    let state = aggregate(&contributions)?;
    let moments = state.moments().expect("aggregate of nonempty list");
    let meta = EstimateMeta::new(
        MethodMeta::PpAggregate {
            k_order: moments.k_order(),
            sites: contributions.len(),
        },
        contributions[0].params(),
        RngSeed::new(args.seed, 0),
    );
    let estimate = cdf_from_noisy_moments(moments, args.bounds, args.grid, meta)?;
    if let Some(path) = &args.emit_state {
        std::fs::write(path, pretty_json(&state)?)?;
    }
    write_output(&args.output, &cdf_csv(&estimate))
}

fn run_update(args: UpdateArgs) -> dpcdf::Result<()> {
    let state = match &args.state {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<MomentState>(&text).map_err(|e| Error::Parse {
                line: e.line(),
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => MomentState::empty(),
    };
    let data = read_dataset(&args.batch, args.has_header, args.bounds)?;
    let delta = args.delta.unwrap_or_else(|| default_delta(data.n()));
    let params = PrivacyParams::new(args.epsilon, delta)?;
    // Distinct stream per chain position, so successive updates with the
    // same master seed draw independent noise.
    let seed = RngSeed::new(args.seed, state.n_total() as u64);
    let contribution = site_contribution(&data, params, args.k, seed)?;
    let new_state = update(&state, &contribution)?;

    if let Some(path) = &args.output {
        let moments = new_state.moments().expect("nonempty after update");
        let meta = EstimateMeta::new(
            MethodMeta::PpStream {
                k_order: moments.k_order(),
                rounds: 1,
            },
            params,
            seed,
        );
        let estimate = cdf_from_noisy_moments(moments, args.bounds, args.grid, meta)?;
        std::fs::write(path, cdf_csv(&estimate))?;
    }
    write_output(&args.state_out, &pretty_json(&new_state)?)
}

fn run_boxplot(args: BoxplotArgs) -> dpcdf::Result<()> {
    let data = read_dataset(&args.input, args.has_header, args.bounds)?;
    let delta = args.delta.unwrap_or_else(|| default_delta(data.n()));
    let params = PrivacyParams::new(args.epsilon, delta)?;
    let estimate = pp_estimate(&data, params, args.k, args.grid, RngSeed::new(args.seed, 0))?;
    let m = args.resamples.unwrap_or_else(|| data.n());
    let samples = resample_from_cdf(&estimate, m, RngSeed::new(args.seed, 1))?;
    let summary = boxplot_stats(&samples)?;
    write_output(&args.output, &pretty_json(&summary)?)
}
