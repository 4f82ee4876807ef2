//! Independent oracles shared by the integration suites.
//!
//! Everything here is deliberately redundant with the library: quadrature
//! instead of closed forms, a printed polynomial table instead of the
//! recurrence, exhaustive search instead of pool-adjacent-violators, and a
//! from-scratch normal CDF for the calibration condition. Agreement
//! between the two code paths is the point of the tests.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coefficients of P_0 .. P_8 from the standard table, constant term
/// first. Independent of the library's recurrence.
const LEGENDRE_TABLE: [&[f64]; 9] = [
    &[1.0],
    &[0.0, 1.0],
    &[-0.5, 0.0, 1.5],
    &[0.0, -1.5, 0.0, 2.5],
    &[3.0 / 8.0, 0.0, -30.0 / 8.0, 0.0, 35.0 / 8.0],
    &[0.0, 15.0 / 8.0, 0.0, -70.0 / 8.0, 0.0, 63.0 / 8.0],
    &[
        -5.0 / 16.0,
        0.0,
        105.0 / 16.0,
        0.0,
        -315.0 / 16.0,
        0.0,
        231.0 / 16.0,
    ],
    &[
        0.0,
        -35.0 / 16.0,
        0.0,
        315.0 / 16.0,
        0.0,
        -693.0 / 16.0,
        0.0,
        429.0 / 16.0,
    ],
    &[
        35.0 / 128.0,
        0.0,
        -1260.0 / 128.0,
        0.0,
        6930.0 / 128.0,
        0.0,
        -12012.0 / 128.0,
        0.0,
        6435.0 / 128.0,
    ],
];

/// P_k(x) for k <= 8 by Horner on the printed table.
pub fn legendre_table_eval(k: usize, x: f64) -> f64 {
    let coeffs = LEGENDRE_TABLE[k];
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Orthonormal e_k(x) = sqrt((2k+1)/2) P_k(x), table-backed, k <= 8.
pub fn basis_table_eval(k: usize, x: f64) -> f64 {
    ((2.0 * k as f64 + 1.0) / 2.0).sqrt() * legendre_table_eval(k, x)
}

/// P_k and P_k' together via Bonnet's recurrence, for the quadrature
/// nodes and for property tests beyond the tabulated degree.
pub fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    let deriv = n as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, deriv)
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration from
/// the Chebyshev initial guess.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Integral of f over [a, b] by one Gauss-Legendre panel.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, nodes: &[(f64, f64)]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * nodes
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// Integral of f over [breaks[0], breaks[last]] with one panel per cell,
/// so integrands that are polynomial between the breakpoints integrate to
/// quadrature exactness.
pub fn integrate_piecewise(f: &dyn Fn(f64) -> f64, breaks: &[f64], nodes: &[(f64, f64)]) -> f64 {
    breaks
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], nodes))
        .sum()
}

/// eCDF of already-sorted values in [-1, 1].
pub fn ecdf(sorted: &[f64], x: f64) -> f64 {
    let count = sorted.partition_point(|&v| v <= x);
    count as f64 / sorted.len() as f64
}

/// Breakpoints of that eCDF: the domain endpoints plus every jump.
pub fn ecdf_breaks(sorted: &[f64]) -> Vec<f64> {
    let mut breaks = vec![-1.0];
    for &v in sorted {
        if v > *breaks.last().unwrap() {
            breaks.push(v);
        }
    }
    if *breaks.last().unwrap() < 1.0 {
        breaks.push(1.0);
    }
    breaks
}

/// L2 projection onto nondecreasing sequences by exhaustive search over
/// the 2^(n-1) partitions of indices into consecutive blocks. A candidate
/// is each partition's block-mean vector when those means are
/// nondecreasing; the projection is the candidate of minimal squared
/// error. Only viable for short inputs.
pub fn isotonic_brute_force(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!((1..=16).contains(&n), "exhaustive oracle needs short input");
    let mut best: Option<(f64, Vec<f64>)> = None;
    // bit j of mask set means a block boundary between j and j+1
    for mask in 0u32..(1 << (n - 1)) {
        let mut candidate = Vec::with_capacity(n);
        let mut start = 0usize;
        let mut feasible = true;
        let mut last_mean = f64::NEG_INFINITY;
        for j in 0..n {
            let boundary = j + 1 == n || mask & (1 << j) != 0;
            if boundary {
                let block = &values[start..=j];
                let mean = block.iter().sum::<f64>() / block.len() as f64;
                if mean < last_mean {
                    feasible = false;
                    break;
                }
                last_mean = mean;
                candidate.extend(std::iter::repeat_n(mean, block.len()));
                start = j + 1;
            }
        }
        if !feasible {
            continue;
        }
        let sse = values
            .iter()
            .zip(&candidate)
            .map(|(v, c)| (v - c) * (v - c))
            .sum::<f64>();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, candidate));
        }
    }
    best.unwrap().1
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Exact Gaussian-mechanism privacy condition at noise scale sigma:
/// the delta actually achieved for (epsilon, sensitivity).
pub fn gaussian_delta(sigma: f64, sensitivity: f64, epsilon: f64) -> f64 {
    let a = sensitivity / (2.0 * sigma);
    let b = epsilon * sigma / sensitivity;
    normal_cdf(a - b) - epsilon.exp() * normal_cdf(-a - b)
}

/// Smallest sigma meeting the exact condition, by long bisection. The
/// achieved delta is monotone decreasing in sigma.
pub fn oracle_gaussian_sigma(epsilon: f64, delta: f64, sensitivity: f64) -> f64 {
    let mut lo = sensitivity * 1e-8;
    let mut hi = sensitivity * 1e8;
    assert!(gaussian_delta(lo, sensitivity, epsilon) > delta);
    assert!(gaussian_delta(hi, sensitivity, epsilon) < delta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gaussian_delta(mid, sensitivity, epsilon) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// KS distance between the eCDF of sorted samples and a tabulated CDF
/// read by linear interpolation. Both one-sided gaps at every sample.
pub fn ks_samples_vs_table(sorted: &[f64], xs: &[f64], values: &[f64]) -> f64 {
    let g = |x: f64| -> f64 {
        if x <= xs[0] {
            return values[0];
        }
        if x >= xs[xs.len() - 1] {
            return values[values.len() - 1];
        }
        let j = xs.partition_point(|&v| v < x);
        let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
        values[j - 1] + t * (values[j] - values[j - 1])
    };
    let m = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &s) in sorted.iter().enumerate() {
        let gv = g(s);
        d = d.max((gv - i as f64 / m).abs());
        d = d.max(((i as f64 + 1.0) / m - gv).abs());
    }
    d
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dataset in [-1, 1] with n entries.
pub fn random_unit_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}
