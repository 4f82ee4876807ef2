//! Legendre polynomials, the orthonormal basis on [-1, 1], and the
//! closed-form projection of the empirical CDF onto the degree-K
//! polynomial space.
//!
//! The projection coefficients come out of a moment identity: the inner
//! product of the eCDF with x^i reduces to (1/(i+1))(1 - mu_{i+1}), so the
//! whole projection is a linear function of the moment vector. That is
//! what makes the estimator a single vector query under differential
//! privacy.

use crate::data::MomentVector;
use crate::error::{Error, Result};

/// Largest supported polynomial order. The leading coefficient scale
/// grows as 2^k, so double precision degrades rapidly past this point;
/// orders 5 to 7 are the recommended operating range.
pub const MAX_ORDER: usize = 16;

/// Legendre polynomial P_k(x) via the stable three-term recurrence
/// (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
pub fn legendre_eval(k: usize, x: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&x));
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = x;
    for j in 1..k {
        let j = j as f64;
        let next = ((2.0 * j + 1.0) * x * cur - j * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal basis element e_k(x) = sqrt((2k+1)/2) P_k(x).
pub fn basis_eval(k: usize, x: f64) -> f64 {
    ((2.0 * k as f64 + 1.0) / 2.0).sqrt() * legendre_eval(k, x)
}

/// Ordinary binomial coefficient as a float; zero when r > n.
fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0;
    for j in 0..r {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Generalized binomial coefficient C(a, k) with a = numerator2/2, possibly
/// half-integer, computed by the exact falling-factorial product
/// prod_{j=0}^{k-1} (a - j) / k!. Avoids gamma-function sign juggling.
fn generalized_binomial(numerator2: i64, k: usize) -> f64 {
    let a = numerator2 as f64 / 2.0;
    let mut num = 1.0;
    for j in 0..k {
        num *= a - j as f64;
    }
    let mut fact = 1.0;
    for j in 1..=k {
        fact *= j as f64;
    }
    num / fact
}

/// Projection weight beta_{k,i} = (1/(i+1)) C(k,i) C((k+i-1)/2, k)
/// for 0 <= i <= k.
pub fn beta_coeff(k: usize, i: usize) -> f64 {
    debug_assert!(i <= k);
    binomial(k, i) * generalized_binomial(k as i64 + i as i64 - 1, k) / (i + 1) as f64
}

/// Coefficients c_0 .. c_K of the eCDF projection in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCoefficients {
    coeffs: Vec<f64>,
}

impl ProjectionCoefficients {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameters(
                "projection requires at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameters(
                "projection coefficients must be finite".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn k_order(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Closed-form projection of the (possibly noisy) moment vector:
/// c_k = 2^k sqrt((2k+1)/2) sum_{i<=k} beta_{k,i} (1 - mu_{i+1}).
pub fn projection_coeffs(mu: &MomentVector) -> ProjectionCoefficients {
    let m = mu.moments();
    let coeffs = (0..m.len())
        .map(|k| {
            let scale = (2.0f64).powi(k as i32) * ((2.0 * k as f64 + 1.0) / 2.0).sqrt();
            let sum: f64 = (0..=k).map(|i| beta_coeff(k, i) * (1.0 - m[i])).sum();
            scale * sum
        })
        .collect();
    ProjectionCoefficients { coeffs }
}

/// Inverts [`projection_coeffs`]: recovers the moment vector whose
/// projection equals `c`. The forward map is triangular in the moments
/// (c_k involves mu_1 .. mu_{k+1} and beta_{k,k} != 0), so one forward
/// substitution suffices. Coefficient vectors that did not come from a
/// real dataset (e.g. perturbed ones) still invert; the result is then a
/// pseudo-moment vector carrying the same information.
pub fn moments_from_coeffs(c: &ProjectionCoefficients, n: usize) -> Result<MomentVector> {
    let coeffs = c.coeffs();
    // gaps[i] = 1 - mu_{i+1}
    let mut gaps = vec![0.0f64; coeffs.len()];
    for k in 0..coeffs.len() {
        let scale = (2.0f64).powi(k as i32) * ((2.0 * k as f64 + 1.0) / 2.0).sqrt();
        let partial: f64 = (0..k).map(|i| beta_coeff(k, i) * gaps[i]).sum();
        gaps[k] = (coeffs[k] / scale - partial) / beta_coeff(k, k);
    }
    MomentVector::new(gaps.iter().map(|g| 1.0 - g).collect(), n)
}

/// Evaluates the series sum_k c_k e_k(x) in one recurrence pass.
/// No clamping or monotonization; that is post-processing.
pub fn eval_series(c: &ProjectionCoefficients, x: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&x));
    let coeffs = &c.coeffs;
    let mut acc = coeffs[0] * (0.5f64).sqrt();
    if coeffs.len() == 1 {
        return acc;
    }
    let mut prev = 1.0;
    let mut cur = x;
    acc += coeffs[1] * (1.5f64).sqrt() * cur;
    for (k, &c) in coeffs.iter().enumerate().skip(2) {
        let j = (k - 1) as f64;
        let next = ((2.0 * j + 1.0) * x * cur - j * prev) / (j + 1.0);
        prev = cur;
        cur = next;
        acc += c * ((2.0 * k as f64 + 1.0) / 2.0).sqrt() * cur;
    }
    acc
}
