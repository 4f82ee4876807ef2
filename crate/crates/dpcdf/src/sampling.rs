//! Synthetic data generation, inverse-CDF resampling, and boxplot
//! statistics.
//!
//! Resampling from an already-released CDF is pure post-processing, so
//! boxplots drawn from the resamples inherit the CDF's privacy guarantee
//! at no extra budget.

use rand::distr::Uniform as UniformDist;
use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution, LogNormal, Normal as NormalDist};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::data::{RawDataset, RngSeed};
use crate::error::{Error, Result};
use crate::estimators::CdfEstimate;
use crate::metrics::DistributionSpec;

/// Tukey five-number summary plus whisker endpoints and flagged
/// outliers.
///
/// Quartiles use the linear-interpolation convention: for sorted values
/// s_0..s_{n-1}, the p-quantile sits at rank h = (n-1)p and interpolates
/// between s_floor(h) and s_ceil(h). Whiskers extend to the most extreme
/// points within [q1 - 1.5 IQR, q3 + 1.5 IQR]; points beyond are
/// outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotSummary {
    pub minimum: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub maximum: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

impl Serialize for BoxplotSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(7))?;
        map.serialize_entry("min", &self.minimum)?;
        map.serialize_entry("q1", &self.q1)?;
        map.serialize_entry("median", &self.median)?;
        map.serialize_entry("q3", &self.q3)?;
        map.serialize_entry("max", &self.maximum)?;
        map.serialize_entry("whiskers", &[self.whisker_lo, self.whisker_hi])?;
        map.serialize_entry("outliers", &self.outliers)?;
        map.end()
    }
}

/// Draws n i.i.d. values from the spec's family and clips them to the
/// spec's declared bounds, so the result always satisfies the dataset
/// range precondition. Deterministic per seed.
pub fn sample_distribution(spec: &DistributionSpec, n: usize, seed: RngSeed) -> Result<RawDataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameters(
            "sample count must be at least 1".into(),
        ));
    }
    let (lo, hi) = spec.declared_bounds();
    let mut rng = seed.rng();
    let mut draw: Box<dyn FnMut(&mut _) -> f64> = match *spec {
        DistributionSpec::Normal { mean, sd } => {
            let d = NormalDist::new(mean, sd).expect("validated: sd > 0");
            Box::new(move |r| d.sample(r))
        }
        DistributionSpec::Lognormal { logmean, logsd } => {
            let d = LogNormal::new(logmean, logsd).expect("validated: logsd > 0");
            Box::new(move |r| d.sample(r))
        }
        DistributionSpec::Beta { alpha, beta } => {
            let d = BetaDist::new(alpha, beta).expect("validated: shapes > 0");
            Box::new(move |r| d.sample(r))
        }
        DistributionSpec::Uniform { lo, hi } => {
            let d = UniformDist::new_inclusive(lo, hi).expect("validated: lo < hi");
            Box::new(move |r| d.sample(r))
        }
    };
    let values = (0..n).map(|_| draw(&mut rng).clamp(lo, hi)).collect();
    RawDataset::new(values, (lo, hi))
}

/// Inverse-transform sampling from a tabulated CDF: draw u ~ U(0,1) and
/// return the smallest grid abscissa where the CDF reaches u, with
/// linear interpolation inside grid cells. Draws above the final CDF
/// level map to the last grid point, and draws at or below the starting
/// level map to the first; a CDF that is constant at a level below 1
/// leaves the inverse undefined on most of (0,1) and is rejected.
pub fn resample_from_cdf(cdf: &CdfEstimate, m: usize, seed: RngSeed) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidParameters(
            "resample count must be at least 1".into(),
        ));
    }
    let xs = cdf.xs();
    let values = cdf.values();
    let last = values[values.len() - 1];
    if last == values[0] && last < 1.0 {
        return Err(Error::DegenerateCdf);
    }
    let mut rng = seed.rng();
    let samples = (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            let idx = values.partition_point(|&v| v < u);
            if idx == 0 {
                xs[0]
            } else if idx == values.len() {
                xs[xs.len() - 1]
            } else {
                // values[idx] >= u > values[idx-1], so the cell has
                // positive rise and the interpolation is well defined.
                let t = (u - values[idx - 1]) / (values[idx] - values[idx - 1]);
                xs[idx - 1] + t * (xs[idx] - xs[idx - 1])
            }
        })
        .collect();
    Ok(samples)
}

/// Five-number summary with Tukey 1.5 IQR whiskers and outlier flags.
pub fn boxplot_stats(samples: &[f64]) -> Result<BoxplotSummary> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameters(
            "boxplot input contains a non-finite value".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let q1 = interpolated_quantile(&sorted, 0.25);
    let median = interpolated_quantile(&sorted, 0.5);
    let q3 = interpolated_quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let fence_lo = q1 - 1.5 * iqr;
    let fence_hi = q3 + 1.5 * iqr;

    // q1 and q3 themselves sit inside the fences, so each whisker scan
    // always finds at least one point.
    let whisker_lo = sorted.iter().copied().find(|&v| v >= fence_lo).unwrap();
    let whisker_hi = sorted.iter().rev().copied().find(|&v| v <= fence_hi).unwrap();
    let outliers = sorted
        .iter()
        .copied()
        .filter(|&v| v < fence_lo || v > fence_hi)
        .collect();

    Ok(BoxplotSummary {
        minimum: sorted[0],
        q1,
        median,
        q3,
        maximum: sorted[sorted.len() - 1],
        whisker_lo,
        whisker_hi,
        outliers,
    })
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
