//! Special functions shared by the mechanisms and metrics modules.

const BETA_MAX_ITER: usize = 200;
const BETA_EPS: f64 = 1e-14;
const FPMIN: f64 = 1e-300;

/// Standard normal CDF evaluated via the complementary error function.
pub fn standard_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0.
///
/// Continued-fraction evaluation (modified Lentz) with the usual symmetry
/// switch at x = (a+1)/(a+b+2), capped at 200 iterations.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_prefactor = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let prefactor = ln_prefactor.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        prefactor * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - prefactor * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let numer = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + numer * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + numer / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;

        let numer = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + numer * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + numer / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_EPS {
            break;
        }
    }
    h
}
