//! The three differentially private CDF estimators and shared
//! post-processing.
//!
//! * `pp_estimate`: perturbs the moment vector once and reconstructs the
//!   CDF as a degree-K Legendre series. One query, full budget.
//! * `hq_estimate`: perturbs histogram counts over uniform bins and
//!   accumulates them into a step CDF. One query, full budget.
//! * `aq_estimate`: adaptively refines quantiles by noisy below/above
//!   counts, splitting the budget uniformly across iterations.
//!
//! All estimators evaluate on a uniform grid over the declared bounds and
//! finish with the same post-processing: isotonic regression followed by
//! clamping to [0, 1]. Both steps are data-independent transformations of
//! an already-private value, so they cost no additional budget.

use std::f64::consts::SQRT_2;

use crate::data::{
    empirical_moments, AffineTransform, MomentVector, RawDataset, RngSeed,
};
use crate::error::{Error, Result};
use crate::legendre::{
    eval_series, moments_from_coeffs, projection_coeffs, ProjectionCoefficients, MAX_ORDER,
};
use crate::mechanisms::{
    calibrate_analytic_gaussian, moment_sensitivity, noise_vector, NoiseCalibration,
    PrivacyParams,
};

/// Default evaluation grid resolution.
pub const DEFAULT_GRID_SIZE: usize = 1000;

/// Which estimator produced a CDF, with its method-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodMeta {
    Pp {
        k_order: usize,
    },
    Hq {
        bins: usize,
    },
    Aq {
        iterations: usize,
        /// How the budget is divided across iterations.
        budget_split: &'static str,
        /// How a quantile is derived from the two noisy counts.
        quantile_rule: &'static str,
    },
    /// Projection CDF rebuilt from decentralized aggregated moments.
    PpAggregate {
        k_order: usize,
        sites: usize,
    },
    /// Projection CDF rebuilt from a streaming moment state.
    PpStream {
        k_order: usize,
        rounds: usize,
    },
    /// Not an estimate: a reference CDF (e.g. a true distribution on a grid).
    Reference,
}

impl MethodMeta {
    /// Short column tag for result tables.
    pub fn label(&self) -> &'static str {
        match self {
            MethodMeta::Pp { .. } | MethodMeta::PpAggregate { .. } | MethodMeta::PpStream { .. } => {
                "pp"
            }
            MethodMeta::Hq { .. } => "hq",
            MethodMeta::Aq { .. } => "aq",
            MethodMeta::Reference => "reference",
        }
    }
}

/// Provenance attached to every CDF estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMeta {
    pub method: MethodMeta,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: Option<RngSeed>,
}

impl EstimateMeta {
    pub fn new(method: MethodMeta, params: PrivacyParams, seed: RngSeed) -> Self {
        Self {
            method,
            epsilon: params.epsilon(),
            delta: params.delta(),
            seed: Some(seed),
        }
    }

    /// Meta for a non-private reference CDF.
    pub fn reference() -> Self {
        Self {
            method: MethodMeta::Reference,
            epsilon: 0.0,
            delta: 0.0,
            seed: None,
        }
    }
}

/// A CDF tabulated on a strictly increasing grid, guaranteed monotone and
/// within [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CdfEstimate {
    xs: Vec<f64>,
    values: Vec<f64>,
    meta: EstimateMeta,
}

impl CdfEstimate {
    pub fn new(xs: Vec<f64>, values: Vec<f64>, meta: EstimateMeta) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Error::InvalidParameters(format!(
                "grid and values must share a length of at least 2, got {} and {}",
                xs.len(),
                values.len()
            )));
        }
        // partial_cmp keeps NaN entries falling into the error arm
        for pair in xs.windows(2) {
            if pair[0].partial_cmp(&pair[1]) != Some(std::cmp::Ordering::Less) {
                return Err(Error::InvalidParameters(
                    "grid must be strictly increasing".into(),
                ));
            }
        }
        for pair in values.windows(2) {
            if !matches!(
                pair[0].partial_cmp(&pair[1]),
                Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)
            ) {
                return Err(Error::InvalidParameters(
                    "CDF values must be nondecreasing".into(),
                ));
            }
        }
        if values.iter().any(|v| !(*v >= 0.0 && *v <= 1.0)) {
            return Err(Error::InvalidParameters(
                "CDF values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { xs, values, meta })
    }

    /// Tabulates a function on the grid; useful for reference CDFs.
    pub fn from_fn(xs: Vec<f64>, f: impl Fn(f64) -> f64, meta: EstimateMeta) -> Result<Self> {
        let values = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, values, meta)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &EstimateMeta {
        &self.meta
    }
}

/// Uniform grid of `m >= 2` points spanning [lo, hi], endpoints exact.
pub fn uniform_grid(lo: f64, hi: f64, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidParameters(format!(
            "grid size must be at least 2, got {m}"
        )));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::DegenerateBounds { lo, hi });
    }
    let step = (hi - lo) / (m - 1) as f64;
    let mut xs: Vec<f64> = (0..m).map(|j| lo + step * j as f64).collect();
    xs[m - 1] = hi;
    for pair in xs.windows(2) {
        if pair[0].partial_cmp(&pair[1]) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidParameters(
                "grid resolution exceeds floating-point spacing of the bounds".into(),
            ));
        }
    }
    Ok(xs)
}

/// Pool-adjacent-violators: the l2-closest nondecreasing sequence.
pub fn isotonic_project(values: &[f64]) -> Vec<f64> {
    // Blocks of (sum, count); merging two blocks averages their members.
    let mut sums: Vec<f64> = Vec::with_capacity(values.len());
    let mut counts: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        sums.push(v);
        counts.push(1);
        while sums.len() >= 2 {
            let last = sums.len() - 1;
            let mean_prev = sums[last - 1] / counts[last - 1] as f64;
            let mean_last = sums[last] / counts[last] as f64;
            if mean_prev <= mean_last {
                break;
            }
            let s = sums.pop().unwrap();
            let c = counts.pop().unwrap();
            *sums.last_mut().unwrap() += s;
            *counts.last_mut().unwrap() += c;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in sums.iter().zip(&counts) {
        let mean = s / *c as f64;
        out.extend(std::iter::repeat_n(mean, *c));
    }
    out
}

/// Isotonic projection followed by clamping to [0, 1].
pub fn postprocess_cdf(values: &[f64]) -> Vec<f64> {
    isotonic_project(values)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect()
}

/// Everything observable about one projection-estimator run, for
/// verification: the calibrated noise scale, the realized noise vector
/// (in the orthonormal coefficient basis, see [`perturb_moments`]), and
/// the moment vectors on both sides of the perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct PpTrace {
    pub sensitivity: f64,
    pub sigma: f64,
    pub noise: Vec<f64>,
    pub exact_moments: MomentVector,
    pub noisy_moments: MomentVector,
}

/// Polynomial-projection estimator at the full (epsilon, delta) budget;
/// a single calibrated query on the moment vector.
pub fn pp_estimate(
    data: &RawDataset,
    params: PrivacyParams,
    k_order: usize,
    grid_size: usize,
    seed: RngSeed,
) -> Result<CdfEstimate> {
    pp_estimate_traced(data, params, k_order, grid_size, seed).map(|(cdf, _)| cdf)
}

/// As [`pp_estimate`], also returning the run's [`PpTrace`].
pub fn pp_estimate_traced(
    data: &RawDataset,
    params: PrivacyParams,
    k_order: usize,
    grid_size: usize,
    seed: RngSeed,
) -> Result<(CdfEstimate, PpTrace)> {
    check_k(k_order)?;
    let sensitivity = moment_sensitivity(k_order, data.n())?;
    let calibration = calibrate_analytic_gaussian(params, sensitivity)?;
    pp_core(data, &calibration, k_order, grid_size, seed)
}

/// Projection pipeline with an explicitly supplied calibration; the
/// zero-noise door for deterministic verification.
pub fn pp_estimate_with_calibration(
    data: &RawDataset,
    calibration: &NoiseCalibration,
    k_order: usize,
    grid_size: usize,
    seed: RngSeed,
) -> Result<(CdfEstimate, PpTrace)> {
    check_k(k_order)?;
    pp_core(data, calibration, k_order, grid_size, seed)
}

fn check_k(k_order: usize) -> Result<()> {
    if k_order > MAX_ORDER {
        return Err(Error::KTooLarge {
            k_order,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// Adds calibrated Gaussian noise to the moment vector's information
/// content and returns the noisy vector plus the realized noise.
///
/// The perturbation acts on the orthonormal projection coefficients
/// rather than coordinate-wise on the raw moments, then maps back through
/// the exact triangular inverse. The two representations are linearly
/// equivalent, but the coefficient basis is the one in which the series
/// reconstruction is an isometry: a noise draw w shifts the estimated CDF
/// by exactly sum_k w_k e_k, so ||F_hat - F_tilde||_2 = ||w||_2 and the
/// sup-norm error is bounded by sum_k |w_k| e_k(1). Perturbing raw
/// moments coordinate-wise instead would be amplified by the 2^k scale of
/// the basis change. Calibration still uses the moment-vector l2
/// sensitivity sqrt((5K+8)/2)/N, which dominates the sensitivity of the
/// coefficient vector itself (at most sqrt(2)/N by Bessel's inequality,
/// since swapping one record moves the eCDF by at most 1/N on an interval
/// of length <= 2), so the released value stays (epsilon, delta)-private
/// with headroom.
pub fn perturb_moments(
    exact: &MomentVector,
    calibration: &NoiseCalibration,
    seed: RngSeed,
) -> Result<(MomentVector, Vec<f64>)> {
    let mut rng = seed.rng();
    let noise = noise_vector(exact.k_order() + 1, calibration.sigma(), &mut rng);
    if calibration.sigma() == 0.0 {
        // keep the noiseless door bit-exact instead of round-tripping
        return Ok((exact.clone(), noise));
    }
    let coeffs = projection_coeffs(exact);
    let noisy_coeffs: Vec<f64> = coeffs
        .coeffs()
        .iter()
        .zip(&noise)
        .map(|(c, w)| c + w)
        .collect();
    let noisy = moments_from_coeffs(
        &ProjectionCoefficients::from_coeffs(noisy_coeffs)?,
        exact.n(),
    )?;
    Ok((noisy, noise))
}

fn pp_core(
    data: &RawDataset,
    calibration: &NoiseCalibration,
    k_order: usize,
    grid_size: usize,
    seed: RngSeed,
) -> Result<(CdfEstimate, PpTrace)> {
    let scaled = data.scale_to_unit();
    let exact = empirical_moments(&scaled, k_order);
    let (noisy, noise) = perturb_moments(&exact, calibration, seed)?;
    let meta = EstimateMeta::new(
        MethodMeta::Pp { k_order },
        calibration.params(),
        seed,
    );
    let cdf = cdf_from_noisy_moments(&noisy, data.bounds(), grid_size, meta)?;
    let trace = PpTrace {
        sensitivity: calibration.sensitivity(),
        sigma: calibration.sigma(),
        noise,
        exact_moments: exact,
        noisy_moments: noisy,
    };
    Ok((cdf, trace))
}

/// The projection tail shared by direct, decentralized, and streaming
/// estimation: coefficients from (possibly noisy) moments, series
/// evaluation on the grid, then post-processing. Pure post-processing of
/// an already-private vector.
pub fn cdf_from_noisy_moments(
    moments: &MomentVector,
    bounds: (f64, f64),
    grid_size: usize,
    meta: EstimateMeta,
) -> Result<CdfEstimate> {
    check_k(moments.k_order())?;
    let (lo, hi) = bounds;
    let xs = uniform_grid(lo, hi, grid_size)?;
    let transform = AffineTransform::from_bounds(lo, hi);
    let coeffs = projection_coeffs(moments);
    let raw: Vec<f64> = xs
        .iter()
        .map(|&x| eval_series(&coeffs, transform.to_unit(x)))
        .collect();
    let values = postprocess_cdf(&raw);
    CdfEstimate::new(xs, values, meta)
}

/// Histogram-query parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HqParams {
    bins: usize,
}

impl HqParams {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameters("bins must be at least 1".into()));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }
}

/// Exact per-bin counts over uniform bins spanning the declared bounds.
/// The top bin is closed so boundary values are never dropped.
pub fn histogram_counts(data: &RawDataset, bins: usize) -> Vec<f64> {
    let (lo, hi) = data.bounds();
    let width = hi - lo;
    let mut counts = vec![0.0; bins];
    for &v in data.values() {
        let idx = (((v - lo) / width) * bins as f64).floor() as usize;
        counts[idx.min(bins - 1)] += 1.0;
    }
    counts
}

/// Histogram-query estimator: one Gaussian query on the count vector at
/// l2 sensitivity sqrt(2) (a substituted record moves one unit out of one
/// bin and into another).
pub fn hq_estimate(
    data: &RawDataset,
    params: PrivacyParams,
    hq: HqParams,
    grid_size: usize,
    seed: RngSeed,
) -> Result<CdfEstimate> {
    let calibration = calibrate_analytic_gaussian(params, SQRT_2)?;
    hq_estimate_with_calibration(data, hq, grid_size, &calibration, seed)
}

/// Histogram pipeline with an explicitly supplied calibration.
pub fn hq_estimate_with_calibration(
    data: &RawDataset,
    hq: HqParams,
    grid_size: usize,
    calibration: &NoiseCalibration,
    seed: RngSeed,
) -> Result<CdfEstimate> {
    let counts = histogram_counts(data, hq.bins());
    let mut rng = seed.rng();
    let noise = noise_vector(counts.len(), calibration.sigma(), &mut rng);
    let noisy: Vec<f64> = counts.iter().zip(&noise).map(|(c, z)| c + z).collect();
    let meta = EstimateMeta::new(
        MethodMeta::Hq { bins: hq.bins() },
        calibration.params(),
        seed,
    );
    hq_cdf_from_noisy_counts(&noisy, data.bounds(), grid_size, meta)
}

/// Post-processing of noisy histogram counts into a step CDF: negatives
/// zeroed, counts normalized to unit mass (uniform weights if everything
/// was zeroed), cumulative sums evaluated right-continuously. The value at
/// x is the mass of bins whose right edge is at most x.
pub fn hq_cdf_from_noisy_counts(
    noisy_counts: &[f64],
    bounds: (f64, f64),
    grid_size: usize,
    meta: EstimateMeta,
) -> Result<CdfEstimate> {
    if noisy_counts.is_empty() {
        return Err(Error::InvalidParameters(
            "histogram must contain at least one bin".into(),
        ));
    }
    let bins = noisy_counts.len();
    let (lo, hi) = bounds;
    let xs = uniform_grid(lo, hi, grid_size)?;

    let clamped: Vec<f64> = noisy_counts.iter().map(|c| c.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let weights: Vec<f64> = if total > 0.0 {
        clamped.iter().map(|c| c / total).collect()
    } else {
        vec![1.0 / bins as f64; bins]
    };
    let mut cumulative = Vec::with_capacity(bins);
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }

    let width = hi - lo;
    let mut right_edges: Vec<f64> = (0..bins)
        .map(|b| lo + width * (b + 1) as f64 / bins as f64)
        .collect();
    right_edges[bins - 1] = hi;

    let values: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let filled = right_edges.partition_point(|&e| e <= x);
            if filled == 0 {
                0.0
            } else {
                cumulative[filled - 1]
            }
        })
        .collect();
    CdfEstimate::new(xs, postprocess_cdf(&values), meta)
}

/// Adaptive-quantile parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AqParams {
    iterations: usize,
}

impl AqParams {
    pub fn new(iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::InvalidParameters(
                "iterations must be at least 1".into(),
            ));
        }
        Ok(Self { iterations })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

const AQ_BUDGET_SPLIT: &str = "uniform";
const AQ_QUANTILE_RULE: &str = "noisy-count-ratio";

/// Adaptive-quantile estimator. Each of T iterations bisects the widest
/// known x-gap and issues one 2-vector count query (below/above, l2
/// sensitivity sqrt(2)) at (epsilon/T, delta/T); the quantile maps are
/// independently sorted at the end so crossings caused by noise are
/// repaired, then interpolated onto the grid.
pub fn aq_estimate(
    data: &RawDataset,
    params: PrivacyParams,
    aq: AqParams,
    grid_size: usize,
    seed: RngSeed,
) -> Result<CdfEstimate> {
    let per_iteration = params.split(aq.iterations())?;
    let meta = EstimateMeta::new(
        MethodMeta::Aq {
            iterations: aq.iterations(),
            budget_split: AQ_BUDGET_SPLIT,
            quantile_rule: AQ_QUANTILE_RULE,
        },
        params,
        seed,
    );
    aq_core(
        data,
        aq,
        grid_size,
        seed,
        meta,
        || calibrate_analytic_gaussian(per_iteration, SQRT_2),
    )
}

/// Adaptive-quantile pipeline with one explicitly supplied per-iteration
/// calibration.
pub fn aq_estimate_with_calibration(
    data: &RawDataset,
    aq: AqParams,
    grid_size: usize,
    calibration: &NoiseCalibration,
    seed: RngSeed,
) -> Result<CdfEstimate> {
    let meta = EstimateMeta::new(
        MethodMeta::Aq {
            iterations: aq.iterations(),
            budget_split: AQ_BUDGET_SPLIT,
            quantile_rule: AQ_QUANTILE_RULE,
        },
        calibration.params(),
        seed,
    );
    let cal = *calibration;
    aq_core(data, aq, grid_size, seed, meta, move || Ok(cal))
}

fn aq_core(
    data: &RawDataset,
    aq: AqParams,
    grid_size: usize,
    seed: RngSeed,
    meta: EstimateMeta,
    mut next_calibration: impl FnMut() -> Result<NoiseCalibration>,
) -> Result<CdfEstimate> {
    let (a, b) = data.bounds();
    let xs = uniform_grid(a, b, grid_size)?;
    let n = data.n();
    let mut rng = seed.rng();

    // Known quantiles, kept sorted by x; anchors carry no privacy cost.
    let mut known: Vec<(f64, f64)> = vec![(a, 0.0), (b, 1.0)];
    for _ in 0..aq.iterations() {
        let mut widest = 0;
        let mut width = f64::NEG_INFINITY;
        for j in 0..known.len() - 1 {
            let w = known[j + 1].0 - known[j].0;
            if w > width {
                width = w;
                widest = j;
            }
        }
        let candidate = 0.5 * (known[widest].0 + known[widest + 1].0);
        debug_assert!(known[widest].0 < candidate && candidate < known[widest + 1].0);

        let below = data.values().iter().filter(|&&v| v <= candidate).count() as f64;
        let above = n as f64 - below;
        let calibration = next_calibration()?;
        let noise = noise_vector(2, calibration.sigma(), &mut rng);
        let noisy_below = below + noise[0];
        let noisy_above = above + noise[1];
        let total = noisy_below + noisy_above;
        let q = if total > 0.0 {
            (noisy_below / total).clamp(0.0, 1.0)
        } else {
            // Both noisy counts wiped out: fall back to the midpoint of the
            // bracketing known quantiles so the iteration still terminates.
            0.5 * (known[widest].1 + known[widest + 1].1)
        };
        known.insert(widest + 1, (candidate, q));
    }

    // Reorder: x's are already ascending by construction; sorting the q's
    // independently repairs inversions introduced by noise.
    let points_x: Vec<f64> = known.iter().map(|(x, _)| *x).collect();
    let mut points_q: Vec<f64> = known.iter().map(|(_, q)| *q).collect();
    points_q.sort_by(f64::total_cmp);

    let values: Vec<f64> = xs
        .iter()
        .map(|&x| interp_linear(&points_x, &points_q, x))
        .collect();
    CdfEstimate::new(xs, postprocess_cdf(&values), meta)
}

/// Piecewise-linear interpolation through (points_x, points_y); constant
/// extension outside the point range.
fn interp_linear(points_x: &[f64], points_y: &[f64], x: f64) -> f64 {
    if x <= points_x[0] {
        return points_y[0];
    }
    let last = points_x.len() - 1;
    if x >= points_x[last] {
        return points_y[last];
    }
    let j = points_x.partition_point(|&p| p < x);
    let (x0, x1) = (points_x[j - 1], points_x[j]);
    let (y0, y1) = (points_y[j - 1], points_y[j]);
    let t = (x - x0) / (x1 - x0);
    y0 + t * (y1 - y0)
}
