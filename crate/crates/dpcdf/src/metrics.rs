//! Distances between gridded CDFs and closed-form true CDFs for the
//! benchmark distributions.
//!
//! All distances are computed on a shared evaluation grid so every
//! estimator is scored identically; comparing estimates built on
//! different grids is rejected rather than silently resampled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::CdfEstimate;
use crate::special::{regularized_incomplete_beta, standard_normal_cdf};

/// A parametric distribution with a closed-form CDF and the public bounds
/// its samples are clipped to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistributionSpec {
    Normal { mean: f64, sd: f64 },
    Lognormal { logmean: f64, logsd: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistributionSpec::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            DistributionSpec::Lognormal { logmean, logsd } => {
                logmean.is_finite() && logsd.is_finite() && logsd > 0.0
            }
            DistributionSpec::Beta { alpha, beta } => {
                alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0
            }
            DistributionSpec::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameters(format!(
                "invalid distribution parameters: {self:?}"
            )))
        }
    }

    /// Public bounds wide enough that the clipped probability mass is
    /// negligible (< 1e-6): five standard deviations for the normal, the
    /// five-log-sd quantile for the lognormal, the exact support otherwise.
    pub fn declared_bounds(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Normal { mean, sd } => (mean - 5.0 * sd, mean + 5.0 * sd),
            DistributionSpec::Lognormal { logmean, logsd } => {
                (0.0, (logmean + 5.0 * logsd).exp())
            }
            DistributionSpec::Beta { .. } => (0.0, 1.0),
            DistributionSpec::Uniform { lo, hi } => (lo, hi),
        }
    }

    /// Closed-form CDF; assumes parameters already validated.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, sd } => standard_normal_cdf((x - mean) / sd),
            DistributionSpec::Lognormal { logmean, logsd } => {
                if x <= 0.0 {
                    0.0
                } else {
                    standard_normal_cdf((x.ln() - logmean) / logsd)
                }
            }
            DistributionSpec::Beta { alpha, beta } => {
                regularized_incomplete_beta(alpha, beta, x.clamp(0.0, 1.0))
            }
            DistributionSpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }
}

/// Validated closed-form CDF evaluation.
pub fn true_cdf(spec: &DistributionSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.cdf(x))
}

fn check_grids(f1: &CdfEstimate, f2: &CdfEstimate) -> Result<()> {
    if f1.xs() != f2.xs() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Kolmogorov-Smirnov distance: max over the grid of |f1 - f2|.
pub fn ks_distance(f1: &CdfEstimate, f2: &CdfEstimate) -> Result<f64> {
    check_grids(f1, f2)?;
    Ok(f1
        .values()
        .iter()
        .zip(f2.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn trapezoid(xs: &[f64], ys: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..xs.len() - 1 {
        acc += 0.5 * (ys(j) + ys(j + 1)) * (xs[j + 1] - xs[j]);
    }
    acc
}

/// Earth-mover (1-Wasserstein) distance: trapezoidal integral of |f1 - f2|
/// over the original-scale grid.
pub fn emd(f1: &CdfEstimate, f2: &CdfEstimate) -> Result<f64> {
    check_grids(f1, f2)?;
    let (a, b) = (f1.values(), f2.values());
    Ok(trapezoid(f1.xs(), |j| (a[j] - b[j]).abs()))
}

/// Energy distance: sqrt(2 * integral of (f1 - f2)^2).
pub fn energy_distance(f1: &CdfEstimate, f2: &CdfEstimate) -> Result<f64> {
    check_grids(f1, f2)?;
    let (a, b) = (f1.values(), f2.values());
    let integral = trapezoid(f1.xs(), |j| (a[j] - b[j]) * (a[j] - b[j]));
    Ok((2.0 * integral).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{uniform_grid, EstimateMeta};

    fn on_grid(xs: &[f64], f: impl Fn(f64) -> f64) -> CdfEstimate {
        CdfEstimate::from_fn(xs.to_vec(), f, EstimateMeta::reference()).unwrap()
    }

    #[test]
    fn true_cdf_symmetry_points() {
        let normal = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
        assert!((true_cdf(&normal, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let beta = DistributionSpec::Beta { alpha: 0.5, beta: 0.5 };
        assert!((true_cdf(&beta, 0.5).unwrap() - 0.5).abs() < 1e-12);
        let lognormal = DistributionSpec::Lognormal { logmean: 0.0, logsd: 0.25 };
        assert!((true_cdf(&lognormal, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn true_cdf_reference_values() {
        let normal = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
        assert!((normal.cdf(1.0) - 0.841344746068543).abs() < 1e-12);
        let lognormal = DistributionSpec::Lognormal { logmean: 0.0, logsd: 0.25 };
        assert!((lognormal.cdf((0.25f64).exp()) - 0.841344746068543).abs() < 1e-12);
        assert_eq!(lognormal.cdf(0.0), 0.0);
        assert_eq!(lognormal.cdf(-3.0), 0.0);

        // Integer-parameter beta CDF has a binomial-sum closed form.
        let beta = DistributionSpec::Beta { alpha: 2.0, beta: 5.0 };
        let x: f64 = 0.3;
        let expect: f64 = (2..=6)
            .map(|j| {
                let c: f64 = match j {
                    2 => 15.0,
                    3 => 20.0,
                    4 => 15.0,
                    5 => 6.0,
                    _ => 1.0,
                };
                c * x.powi(j) * (1.0 - x).powi(6 - j)
            })
            .sum();
        assert!((beta.cdf(x) - expect).abs() < 1e-12);
    }

    #[test]
    fn parameter_validation() {
        assert!(true_cdf(&DistributionSpec::Normal { mean: 0.0, sd: 0.0 }, 0.0).is_err());
        assert!(true_cdf(&DistributionSpec::Beta { alpha: -0.5, beta: 0.5 }, 0.5).is_err());
        assert!(true_cdf(&DistributionSpec::Uniform { lo: 2.0, hi: 1.0 }, 0.0).is_err());
        assert!(true_cdf(&DistributionSpec::Lognormal { logmean: 0.0, logsd: -1.0 }, 1.0).is_err());
    }

    #[test]
    fn bounds_cover_nearly_all_mass() {
        for spec in [
            DistributionSpec::Normal { mean: 1.0, sd: 2.0 },
            DistributionSpec::Lognormal { logmean: 0.5, logsd: 0.25 },
            DistributionSpec::Beta { alpha: 0.5, beta: 0.5 },
            DistributionSpec::Uniform { lo: -3.0, hi: 4.0 },
        ] {
            let (lo, hi) = spec.declared_bounds();
            assert!(spec.cdf(lo) < 1e-6);
            assert!(spec.cdf(hi) > 1.0 - 1e-6);
        }
    }

    #[test]
    fn distances_vanish_on_equal_inputs() {
        let xs = uniform_grid(-1.0, 1.0, 101).unwrap();
        let f = on_grid(&xs, |x| (x + 1.0) / 2.0);
        assert_eq!(ks_distance(&f, &f).unwrap(), 0.0);
        assert_eq!(emd(&f, &f).unwrap(), 0.0);
        assert_eq!(energy_distance(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn ks_hand_values() {
        let xs = uniform_grid(-1.0, 1.0, 5).unwrap();
        let step0 = on_grid(&xs, |x| if x >= 0.0 { 1.0 } else { 0.0 });
        let step_half = on_grid(&xs, |x| if x >= 0.5 { 1.0 } else { 0.0 });
        assert_eq!(ks_distance(&step0, &step_half).unwrap(), 1.0);

        let xs = uniform_grid(-1.0, 1.0, 101).unwrap();
        let uniform = on_grid(&xs, |x| (x + 1.0) / 2.0);
        let constant = on_grid(&xs, |_| 0.5);
        assert_eq!(ks_distance(&uniform, &constant).unwrap(), 0.5);
    }

    #[test]
    fn emd_hand_value() {
        // Grid contains 0, so |uniform - step| is piecewise linear on every
        // cell and the trapezoid rule is exact.
        let xs = uniform_grid(-1.0, 1.0, 2001).unwrap();
        let uniform = on_grid(&xs, |x| (x + 1.0) / 2.0);
        let step = on_grid(&xs, |x| if x >= 0.0 { 1.0 } else { 0.0 });
        assert!((emd(&uniform, &step).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn energy_hand_values() {
        let xs = uniform_grid(0.0, 3.0, 61).unwrap();
        let low = on_grid(&xs, |_| 0.2);
        let high = on_grid(&xs, |_| 0.7);
        // Constant gap d over length L: sqrt(2 d^2 L).
        let expect = (2.0f64 * 0.25 * 3.0).sqrt();
        assert!((energy_distance(&low, &high).unwrap() - expect).abs() < 1e-12);

        // Uniform CDF vs unit step at 0: each half contributes
        // int_0^1 (t/2)^2 dt = 1/12, so E = sqrt(2/6) = sqrt(1/3).
        let xs = uniform_grid(-1.0, 1.0, 2001).unwrap();
        let uniform = on_grid(&xs, |x| (x + 1.0) / 2.0);
        let step = on_grid(&xs, |x| if x >= 0.0 { 1.0 } else { 0.0 });
        let expect = (1.0f64 / 3.0).sqrt();
        assert!((energy_distance(&uniform, &step).unwrap() - expect).abs() < 1e-4);
    }

    #[test]
    fn emd_refinement_is_stable_for_smooth_inputs() {
        let f1_spec = DistributionSpec::Normal { mean: 0.0, sd: 1.0 };
        let f2_spec = DistributionSpec::Normal { mean: 0.3, sd: 1.2 };
        let mut results = Vec::new();
        for m in [1000usize, 4000] {
            let xs = uniform_grid(-6.0, 6.0, m).unwrap();
            let f1 = on_grid(&xs, |x| f1_spec.cdf(x));
            let f2 = on_grid(&xs, |x| f2_spec.cdf(x));
            results.push(emd(&f1, &f2).unwrap());
        }
        assert!((results[0] - results[1]).abs() < 1e-4);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let xs1 = uniform_grid(-1.0, 1.0, 50).unwrap();
        let xs2 = uniform_grid(-1.0, 1.0, 60).unwrap();
        let xs3 = uniform_grid(-2.0, 1.0, 50).unwrap();
        let f1 = on_grid(&xs1, |x| (x + 1.0) / 2.0);
        let f2 = on_grid(&xs2, |x| (x + 1.0) / 2.0);
        let f3 = on_grid(&xs3, |x| ((x + 2.0) / 3.0).clamp(0.0, 1.0));
        assert!(matches!(ks_distance(&f1, &f2), Err(Error::GridMismatch)));
        assert!(matches!(emd(&f1, &f3), Err(Error::GridMismatch)));
        assert!(matches!(
            energy_distance(&f1, &f2),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn distribution_spec_serde_round_trip() {
        let specs = [
            DistributionSpec::Normal { mean: 0.0, sd: 1.0 },
            DistributionSpec::Lognormal { logmean: 0.0, logsd: 0.25 },
            DistributionSpec::Beta { alpha: 0.5, beta: 0.5 },
            DistributionSpec::Uniform { lo: -1.0, hi: 1.0 },
        ];
        for spec in specs {
            let json = serde_json::to_string(&spec).unwrap();
            let back: DistributionSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
        }
        let parsed: DistributionSpec =
            serde_json::from_str(r#"{"family":"beta","alpha":0.5,"beta":0.5}"#).unwrap();
        assert_eq!(parsed, DistributionSpec::Beta { alpha: 0.5, beta: 0.5 });
    }
}
