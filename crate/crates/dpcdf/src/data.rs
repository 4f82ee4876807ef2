//! Data ingestion, range scaling, empirical CDF and moment computation,
//! and the seeded randomness contract.
//!
//! Declared bounds are treated as public knowledge: every dataset carries
//! the interval its values are promised to lie in, and scaling to the
//! canonical [-1, 1] domain is the affine map determined by those bounds
//! alone, never by the data.

use std::fs;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instrument;

/// Raw observations together with their declared (public) bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    values: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl RawDataset {
    /// Validates that the dataset is nonempty, the bounds are finite with
    /// lo < hi, and every value lies inside the declared bounds.
    pub fn new(values: Vec<f64>, bounds: (f64, f64)) -> Result<Self> {
        let (lo, hi) = bounds;
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::DegenerateBounds { lo, hi });
        }
        for &v in &values {
            // NaN fails both comparisons and is rejected here too.
            if !(v >= lo && v <= hi) {
                return Err(Error::OutOfBounds { value: v, lo, hi });
            }
        }
        Ok(Self { values, lo, hi })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Maps the data onto [-1, 1] with the affine transform determined by
    /// the declared bounds. Infallible: the constructor already enforced
    /// every precondition.
    pub fn scale_to_unit(&self) -> ScaledDataset {
        let transform = AffineTransform::from_bounds(self.lo, self.hi);
        let values = self
            .values
            .iter()
            .map(|&v| transform.to_unit(v))
            .collect();
        ScaledDataset { values, transform }
    }
}

/// The invertible map between the declared bounds and [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    center: f64,
    halfwidth: f64,
}

impl AffineTransform {
    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        Self {
            center: 0.5 * (lo + hi),
            halfwidth: 0.5 * (hi - lo),
        }
    }

    /// Forward map; the result is clamped to [-1, 1] to absorb the final
    /// rounding ulp at the interval edges.
    pub fn to_unit(&self, v: f64) -> f64 {
        ((v - self.center) / self.halfwidth).clamp(-1.0, 1.0)
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        u * self.halfwidth + self.center
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }
}

/// Observations scaled to [-1, 1], remembering the transform that got them
/// there. Only obtainable through [`RawDataset::scale_to_unit`], so the
/// nonemptiness invariant always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledDataset {
    values: Vec<f64>,
    transform: AffineTransform,
}

impl ScaledDataset {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transform(&self) -> AffineTransform {
        self.transform
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Right-continuous empirical CDF: (1/N) * #{x_n <= x}.
pub fn empirical_cdf_eval(data: &ScaledDataset, x: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&x));
    let below = data.values.iter().filter(|&&v| v <= x).count();
    below as f64 / data.n() as f64
}

/// Power-mean moment vector (mu_1 .. mu_{K+1}) of scaled observations.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    moments: Vec<f64>,
    n: usize,
}

impl MomentVector {
    /// `moments` holds mu_1 .. mu_{K+1}; `n` is the sample count behind it.
    pub fn new(moments: Vec<f64>, n: usize) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::InvalidParameters(
                "moment vector must contain at least one entry".into(),
            ));
        }
        if n == 0 {
            return Err(Error::NonPositiveN);
        }
        if moments.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameters(
                "moment entries must be finite".into(),
            ));
        }
        Ok(Self { moments, n })
    }

    /// mu_1 .. mu_{K+1} in order.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_order(&self) -> usize {
        self.moments.len() - 1
    }
}

/// Computes mu_i = (1/N) sum x_n^i for i = 1 .. k_order+1.
///
/// This is the sole raw-data query of the projection estimator, so each
/// call is counted by the instrumentation module.
pub fn empirical_moments(data: &ScaledDataset, k_order: usize) -> MomentVector {
    instrument::record_moment_query();
    let n = data.n() as f64;
    let mut sums = vec![0.0; k_order + 1];
    for &x in &data.values {
        let mut power = 1.0;
        for s in sums.iter_mut() {
            power *= x;
            *s += power;
        }
    }
    let moments = sums.into_iter().map(|s| s / n).collect();
    MomentVector {
        moments,
        n: data.n(),
    }
}

/// Seed for a reproducible randomness stream.
///
/// Identical (master_seed, stream_index) pairs always produce identical
/// noise sequences; distinct stream indices yield independent streams for
/// the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngSeed {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn with_stream(self, stream_index: u64) -> Self {
        Self {
            stream_index,
            ..self
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Reads a single-column CSV of reals; `has_header` skips the first row.
pub fn read_value_column(path: &Path, has_header: bool) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    parse_value_column(&text, has_header)
}

/// Parses a single-column CSV body; blank lines are ignored.
pub fn parse_value_column(text: &str, has_header: bool) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if has_header && idx == 0 {
            continue;
        }
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        let v: f64 = field.parse().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("{e}: {field:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("non-finite value {field:?}"),
            });
        }
        values.push(v);
    }
    Ok(values)
}
