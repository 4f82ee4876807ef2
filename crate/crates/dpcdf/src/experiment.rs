//! Experiment configuration, benchmark orchestration, and result
//! serialization.
//!
//! A benchmark sweeps an epsilon grid, repeats each cell over seeded
//! runs, and scores every estimator against the sampled distribution's
//! true CDF on a shared grid. All methods at a given (epsilon, run) see
//! the identical dataset, so comparisons between methods are paired.
//! Randomness derives entirely from the master seed through disjoint,
//! purpose-tagged stream indices; rerunning a config reproduces every
//! estimate bit for bit.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{RawDataset, RngSeed};
use crate::error::{Error, Result};
use crate::estimators::{
    aq_estimate, cdf_from_noisy_moments, histogram_counts, hq_cdf_from_noisy_counts, hq_estimate,
    pp_estimate, uniform_grid, AqParams, CdfEstimate, EstimateMeta, HqParams, MethodMeta,
    DEFAULT_GRID_SIZE,
};
use crate::federation::{aggregate, site_contribution, update, MomentState};
use crate::legendre::MAX_ORDER;
use crate::mechanisms::{calibrate_analytic_gaussian, gaussian_perturb, PrivacyParams};
use crate::metrics::{emd, energy_distance, ks_distance, DistributionSpec};
use crate::sampling::sample_distribution;

/// Default epsilon sweep for benchmark configs.
pub const DEFAULT_EPSILONS: [f64; 5] = [0.05, 0.1, 0.25, 0.5, 1.0];

/// Name of the sample-size-coupled delta rule.
pub const DELTA_RULE_N_POW: &str = "n^(-3/2)";

const RESULTS_HEADER: &str = "method,epsilon,run,ks,emd,energy,wall_time_ms";

/// How delta is derived from the sample count: a fixed value, or the
/// named rule delta = n^(-3/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaRule {
    Fixed(f64),
    Named(String),
}

impl Default for DeltaRule {
    fn default() -> Self {
        DeltaRule::Named(DELTA_RULE_N_POW.to_string())
    }
}

impl DeltaRule {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        match self {
            DeltaRule::Fixed(delta) => Ok(*delta),
            DeltaRule::Named(name) if name == DELTA_RULE_N_POW => Ok((n as f64).powf(-1.5)),
            DeltaRule::Named(name) => Err(Error::ConfigInvalid(format!(
                "unknown delta rule {name:?}; use a number or {DELTA_RULE_N_POW:?}"
            ))),
        }
    }
}

/// Deployment shape being simulated for each run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    /// All data at one curator; each method runs once.
    Single,
    /// Data split across sites that each release noisy moments (or
    /// noisy histogram counts) once; the server only post-processes.
    Federated { sites: usize },
    /// Data arrives in batches; the projection state is updated per
    /// batch while the baselines recompute on the cumulative data with
    /// their budget split across rounds.
    Streaming { batches: usize },
}

/// Full description of one benchmark sweep. Fields left out of a config
/// file take these defaults: normal(0,1), n = 10^4, the epsilon grid
/// {0.05, 0.1, 0.25, 0.5, 1.0}, delta = n^(-3/2), K = 6, 30 bins,
/// 50 iterations, 50 runs, grid 1000, seed 0, single mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub distribution: DistributionSpec,
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub delta_rule: DeltaRule,
    pub k_order: usize,
    pub hq_bins: usize,
    pub aq_iterations: usize,
    pub runs: usize,
    pub grid_size: usize,
    pub master_seed: u64,
    pub mode: Mode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            distribution: DistributionSpec::Normal { mean: 0.0, sd: 1.0 },
            n: 10_000,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            delta_rule: DeltaRule::default(),
            k_order: 6,
            hq_bins: 30,
            aq_iterations: 50,
            runs: 50,
            grid_size: DEFAULT_GRID_SIZE,
            master_seed: 0,
            mode: Mode::Single,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ConfigInvalid(msg));
        if let Err(e) = self.distribution.validate() {
            return fail(e.to_string());
        }
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.epsilons.is_empty() {
            return fail("epsilons must be nonempty".into());
        }
        if self.epsilons.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return fail("epsilons must all be positive and finite".into());
        }
        if self.grid_size < 2 {
            return fail("grid_size must be at least 2".into());
        }
        if self.k_order > MAX_ORDER {
            return fail(format!("k_order must be at most {MAX_ORDER}"));
        }
        if self.hq_bins == 0 {
            return fail("hq_bins must be at least 1".into());
        }
        if self.aq_iterations == 0 {
            return fail("aq_iterations must be at least 1".into());
        }
        let delta = self.delta_rule.resolve(self.n)?;
        if !(delta > 0.0 && delta < 1.0) {
            return fail(format!("resolved delta {delta} must lie in (0, 1)"));
        }
        // Stream indices pack the run, epsilon, and site/batch counters
        // into 16-bit lanes.
        if self.runs > u16::MAX as usize || self.epsilons.len() > u16::MAX as usize {
            return fail("runs and epsilon count must be at most 65535".into());
        }
        match self.mode {
            Mode::Single => {}
            Mode::Federated { sites } => {
                if sites == 0 || sites > self.n || sites > u16::MAX as usize {
                    return fail(format!(
                        "federated sites must be in 1..=min(n, 65535), got {sites}"
                    ));
                }
            }
            Mode::Streaming { batches } => {
                if batches == 0 || batches > self.n || batches > u16::MAX as usize {
                    return fail(format!(
                        "streaming batches must be in 1..=min(n, 65535), got {batches}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One method's scores for one (epsilon, run) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub epsilon: f64,
    pub run_index: usize,
    pub ks: f64,
    pub emd: f64,
    pub energy: f64,
    pub wall_time_ms: f64,
}

// Stream-index purposes; each (purpose, eps, run, sub) tuple owns an
// independent ChaCha stream off the master seed.
const STREAM_DATA: u64 = 1;
const STREAM_PP: u64 = 2;
const STREAM_HQ: u64 = 3;
const STREAM_AQ: u64 = 4;

fn stream_index(purpose: u64, eps_idx: usize, run: usize, sub: usize) -> u64 {
    purpose << 48 | (eps_idx as u64) << 32 | (run as u64) << 16 | sub as u64
}

/// Runs the configured sweep and returns one row per (method, epsilon,
/// run), sorted by that key. Every estimate is deterministic in the
/// config; only `wall_time_ms` varies between reruns.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let spec = &config.distribution;
    let (lo, hi) = spec.declared_bounds();
    let grid = uniform_grid(lo, hi, config.grid_size)?;
    let reference = CdfEstimate::from_fn(grid, |x| spec.cdf(x), EstimateMeta::reference())?;
    let delta = config.delta_rule.resolve(config.n)?;

    let mut rows = Vec::with_capacity(3 * config.epsilons.len() * config.runs);
    for (eps_idx, &epsilon) in config.epsilons.iter().enumerate() {
        let params = PrivacyParams::new(epsilon, delta)
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        for run in 0..config.runs {
            let data = sample_distribution(
                spec,
                config.n,
                self_seed(config, STREAM_DATA, eps_idx, run, 0),
            )?;
            let estimates = match config.mode {
                Mode::Single => single_round(&data, config, params, eps_idx, run)?,
                Mode::Federated { sites } => {
                    federated_round(&data, config, params, sites, eps_idx, run)?
                }
                Mode::Streaming { batches } => {
                    streaming_round(&data, config, params, batches, eps_idx, run)?
                }
            };
            for (estimate, wall_time_ms) in estimates {
                rows.push(ResultRow {
                    method: estimate.meta().method.label().to_string(),
                    epsilon,
                    run_index: run,
                    ks: ks_distance(&estimate, &reference)?,
                    emd: emd(&estimate, &reference)?,
                    energy: energy_distance(&estimate, &reference)?,
                    wall_time_ms,
                });
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn self_seed(
    config: &ExperimentConfig,
    purpose: u64,
    eps_idx: usize,
    run: usize,
    sub: usize,
) -> RngSeed {
    RngSeed::new(config.master_seed, stream_index(purpose, eps_idx, run, sub))
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed().as_secs_f64() * 1e3))
}

fn single_round(
    data: &RawDataset,
    config: &ExperimentConfig,
    params: PrivacyParams,
    eps_idx: usize,
    run: usize,
) -> Result<Vec<(CdfEstimate, f64)>> {
    let pp = timed(|| {
        pp_estimate(
            data,
            params,
            config.k_order,
            config.grid_size,
            self_seed(config, STREAM_PP, eps_idx, run, 0),
        )
    })?;
    let hq = timed(|| {
        hq_estimate(
            data,
            params,
            HqParams::new(config.hq_bins)?,
            config.grid_size,
            self_seed(config, STREAM_HQ, eps_idx, run, 0),
        )
    })?;
    let aq = timed(|| {
        aq_estimate(
            data,
            params,
            AqParams::new(config.aq_iterations)?,
            config.grid_size,
            self_seed(config, STREAM_AQ, eps_idx, run, 0),
        )
    })?;
    Ok(vec![pp, hq, aq])
}

/// Splits the dataset into near-equal contiguous chunks sharing the
/// parent's declared bounds. Every chunk is nonempty when parts <= n.
fn split_dataset(data: &RawDataset, parts: usize) -> Result<Vec<RawDataset>> {
    let n = data.n();
    (0..parts)
        .map(|p| {
            let chunk = data.values()[p * n / parts..(p + 1) * n / parts].to_vec();
            RawDataset::new(chunk, data.bounds())
        })
        .collect()
}

fn federated_round(
    data: &RawDataset,
    config: &ExperimentConfig,
    params: PrivacyParams,
    sites: usize,
    eps_idx: usize,
    run: usize,
) -> Result<Vec<(CdfEstimate, f64)>> {
    let site_data = split_dataset(data, sites)?;

    // PP: each site releases one noisy moment vector calibrated to its
    // own sample count; the server's weighted average and projection are
    // post-processing.
    let pp = timed(|| {
        let contributions = site_data
            .iter()
            .enumerate()
            .map(|(s, d)| {
                site_contribution(
                    d,
                    params,
                    config.k_order,
                    self_seed(config, STREAM_PP, eps_idx, run, s),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let state = aggregate(&contributions)?;
        let meta = EstimateMeta::new(
            MethodMeta::PpAggregate {
                k_order: config.k_order,
                sites,
            },
            params,
            self_seed(config, STREAM_PP, eps_idx, run, 0),
        );
        cdf_from_noisy_moments(
            state.moments().expect("aggregate of >= 1 site"),
            data.bounds(),
            config.grid_size,
            meta,
        )
    })?;

    // HQ: each site perturbs its own bin counts over the shared bin
    // edges; summed noisy counts are post-processed centrally.
    let hq = timed(|| {
        let calibration = calibrate_analytic_gaussian(params, std::f64::consts::SQRT_2)?;
        let mut summed = vec![0.0; config.hq_bins];
        for (s, d) in site_data.iter().enumerate() {
            let counts = histogram_counts(d, config.hq_bins);
            let noisy = gaussian_perturb(
                &counts,
                &calibration,
                self_seed(config, STREAM_HQ, eps_idx, run, s),
            );
            for (acc, c) in summed.iter_mut().zip(&noisy) {
                *acc += c;
            }
        }
        let meta = EstimateMeta::new(
            MethodMeta::Hq {
                bins: config.hq_bins,
            },
            params,
            self_seed(config, STREAM_HQ, eps_idx, run, 0),
        );
        hq_cdf_from_noisy_counts(&summed, data.bounds(), config.grid_size, meta)
    })?;

    // AQ is interactive by construction, so it runs at the curator over
    // the pooled data; the federated comparison charges it its usual
    // budget.
    let aq = timed(|| {
        aq_estimate(
            data,
            params,
            AqParams::new(config.aq_iterations)?,
            config.grid_size,
            self_seed(config, STREAM_AQ, eps_idx, run, 0),
        )
    })?;

    Ok(vec![pp, hq, aq])
}

fn streaming_round(
    data: &RawDataset,
    config: &ExperimentConfig,
    params: PrivacyParams,
    batches: usize,
    eps_idx: usize,
    run: usize,
) -> Result<Vec<(CdfEstimate, f64)>> {
    let batch_data = split_dataset(data, batches)?;

    // PP folds each arriving batch into the moment state. A batch is
    // queried once, at the full per-batch budget; earlier data is never
    // touched again.
    let pp = timed(|| {
        let mut state = MomentState::empty();
        for (b, d) in batch_data.iter().enumerate() {
            let contribution = site_contribution(
                d,
                params,
                config.k_order,
                self_seed(config, STREAM_PP, eps_idx, run, b),
            )?;
            state = update(&state, &contribution)?;
        }
        let meta = EstimateMeta::new(
            MethodMeta::PpStream {
                k_order: config.k_order,
                rounds: batches,
            },
            params,
            self_seed(config, STREAM_PP, eps_idx, run, 0),
        );
        cdf_from_noisy_moments(
            state.moments().expect(">= 1 batch"),
            data.bounds(),
            config.grid_size,
            meta,
        )
    })?;

    // The baselines have no sufficient statistic to update, so a release
    // every round re-queries all data seen so far; sequential composition
    // leaves each recomputation 1/batches of the budget. Scored on the
    // final round, where the cumulative data is the full dataset.
    let per_round = params.split(batches)?;
    let hq = timed(|| {
        hq_estimate(
            data,
            per_round,
            HqParams::new(config.hq_bins)?,
            config.grid_size,
            self_seed(config, STREAM_HQ, eps_idx, run, 0),
        )
    })?;
    let aq = timed(|| {
        aq_estimate(
            data,
            per_round,
            AqParams::new(config.aq_iterations)?,
            config.grid_size,
            self_seed(config, STREAM_AQ, eps_idx, run, 0),
        )
    })?;

    Ok(vec![pp, hq, aq])
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.run_index.cmp(&b.run_index))
    });
}

/// Zeroes the timing column, leaving only config-determined fields; used
/// where byte-identical reruns matter more than profiling.
pub fn strip_wall_times(rows: &mut [ResultRow]) {
    for row in rows {
        row.wall_time_ms = 0.0;
    }
}

/// Renders rows as CSV. Floats use the shortest representation that
/// parses back to the same value, so render/parse round-trips exactly.
pub fn render_results(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidParameters("no result rows to emit".into()));
    }
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method, r.epsilon, r.run_index, r.ks, r.emd, r.energy, r.wall_time_ms
        )
        .expect("string write");
    }
    Ok(out)
}

/// Writes [`render_results`] output to a file.
pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    let rendered = render_results(rows)?;
    std::fs::write(path, rendered)?;
    Ok(())
}

/// Parses a results CSV produced by [`render_results`].
pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RESULTS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {RESULTS_HEADER:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid number {:?}", fields[i]),
            })
        };
        rows.push(ResultRow {
            method: fields[0].to_string(),
            epsilon: num(1)?,
            run_index: fields[2].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid run index {:?}", fields[2]),
            })?,
            ks: num(3)?,
            emd: num(4)?,
            energy: num(5)?,
            wall_time_ms: num(6)?,
        });
    }
    Ok(rows)
}
