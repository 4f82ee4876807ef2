//! Simulated decentralized aggregation of per-site noisy moments and
//! streaming updates from new data batches.
//!
//! Each site perturbs its own local moments once (calibrated to its own
//! sample count and privacy target) and ships a single message; the
//! server's weighted average is pure post-processing. Site sample counts
//! travel in the clear: the weighted average needs them, so they are
//! treated as public metadata rather than protected values.
//!
//! Updates never touch old raw data. Folding a new batch into a
//! [`MomentState`] reweights the stored noisy moments, so the privacy
//! cost of an update is the batch's own (epsilon, delta) and nothing
//! more.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{empirical_moments, MomentVector, RawDataset, RngSeed};
use crate::error::{Error, Result};
use crate::estimators::perturb_moments;
use crate::legendre::MAX_ORDER;
use crate::mechanisms::{
    calibrate_analytic_gaussian, moment_sensitivity, NoiseCalibration,
    PrivacyParams,
};

/// One site's single message: its perturbed moment vector, how many
/// samples produced it, and the privacy target it was calibrated for.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteContribution {
    moments: MomentVector,
    params: PrivacyParams,
}

impl SiteContribution {
    pub fn new(moments: MomentVector, params: PrivacyParams) -> Self {
        Self { moments, params }
    }

    pub fn n_site(&self) -> usize {
        self.moments.n()
    }

    pub fn k_order(&self) -> usize {
        self.moments.k_order()
    }

    pub fn noisy_moments(&self) -> &MomentVector {
        &self.moments
    }

    pub fn params(&self) -> PrivacyParams {
        self.params
    }
}

#[derive(Serialize, Deserialize)]
struct SiteContributionWire {
    n_site: u64,
    k_order: usize,
    epsilon: f64,
    delta: f64,
    moments: Vec<f64>,
}

impl Serialize for SiteContribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SiteContributionWire {
            n_site: self.n_site() as u64,
            k_order: self.k_order(),
            epsilon: self.params.epsilon(),
            delta: self.params.delta(),
            moments: self.moments.moments().to_vec(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SiteContribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = SiteContributionWire::deserialize(deserializer)?;
        if wire.moments.len() != wire.k_order + 1 {
            return Err(D::Error::custom(format!(
                "expected {} moments for k_order {}, got {}",
                wire.k_order + 1,
                wire.k_order,
                wire.moments.len()
            )));
        }
        let params = PrivacyParams::new(wire.epsilon, wire.delta).map_err(D::Error::custom)?;
        let moments =
            MomentVector::new(wire.moments, wire.n_site as usize).map_err(D::Error::custom)?;
        Ok(SiteContribution { moments, params })
    }
}

/// Running noisy-moment average over everything aggregated so far.
/// The empty state carries no moments and a zero total.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentState {
    moments: Option<MomentVector>,
}

impl MomentState {
    pub fn empty() -> Self {
        Self { moments: None }
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_none()
    }

    pub fn n_total(&self) -> usize {
        self.moments.as_ref().map_or(0, MomentVector::n)
    }

    pub fn moments(&self) -> Option<&MomentVector> {
        self.moments.as_ref()
    }
}

#[derive(Serialize, Deserialize)]
struct MomentStateWire {
    n_total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    moments: Option<Vec<f64>>,
}

impl Serialize for MomentState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MomentStateWire {
            n_total: self.n_total() as u64,
            k_order: self.moments.as_ref().map(MomentVector::k_order),
            moments: self.moments.as_ref().map(|m| m.moments().to_vec()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MomentState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = MomentStateWire::deserialize(deserializer)?;
        match (wire.n_total, wire.moments) {
            (0, None) => Ok(MomentState::empty()),
            (0, Some(_)) => Err(D::Error::custom("moments present but n_total is zero")),
            (_, None) => Err(D::Error::custom("n_total positive but moments missing")),
            (n, Some(values)) => {
                if let Some(k) = wire.k_order {
                    if values.len() != k + 1 {
                        return Err(D::Error::custom(format!(
                            "expected {} moments for k_order {k}, got {}",
                            k + 1,
                            values.len()
                        )));
                    }
                }
                let moments =
                    MomentVector::new(values, n as usize).map_err(D::Error::custom)?;
                Ok(MomentState {
                    moments: Some(moments),
                })
            }
        }
    }
}

/// Computes one site's noisy contribution: local moments on the locally
/// scaled data (shared declared bounds imply a shared transform),
/// sensitivity from the local sample count, local calibration, one
/// perturbation. One message, one query.
pub fn site_contribution(
    data: &RawDataset,
    params: PrivacyParams,
    k_order: usize,
    seed: RngSeed,
) -> Result<SiteContribution> {
    if k_order > MAX_ORDER {
        return Err(Error::KTooLarge {
            k_order,
            max: MAX_ORDER,
        });
    }
    let sensitivity = moment_sensitivity(k_order, data.n())?;
    let calibration = calibrate_analytic_gaussian(params, sensitivity)?;
    perturbed_contribution(data, k_order, &calibration, seed)
}

/// Site pipeline with an explicitly supplied calibration; the zero-noise
/// door for exactness checks.
pub fn site_contribution_with_calibration(
    data: &RawDataset,
    k_order: usize,
    calibration: &NoiseCalibration,
    seed: RngSeed,
) -> Result<SiteContribution> {
    if k_order > MAX_ORDER {
        return Err(Error::KTooLarge {
            k_order,
            max: MAX_ORDER,
        });
    }
    perturbed_contribution(data, k_order, calibration, seed)
}

fn perturbed_contribution(
    data: &RawDataset,
    k_order: usize,
    calibration: &NoiseCalibration,
    seed: RngSeed,
) -> Result<SiteContribution> {
    let scaled = data.scale_to_unit();
    let exact = empirical_moments(&scaled, k_order);
    let (noisy, _) = perturb_moments(&exact, calibration, seed)?;
    Ok(SiteContribution {
        moments: noisy,
        params: calibration.params(),
    })
}

/// Server-side fold: n-weighted average of the site moment vectors.
/// Pure post-processing of already-private messages.
pub fn aggregate(contributions: &[SiteContribution]) -> Result<MomentState> {
    let first = contributions.first().ok_or(Error::EmptyContributionList)?;
    let k = first.k_order();
    if contributions.iter().any(|c| c.k_order() != k) {
        return Err(Error::MismatchedOrder);
    }
    let mut n_total = 0usize;
    let mut weighted = vec![0.0; k + 1];
    for c in contributions {
        let n = c.n_site() as f64;
        n_total += c.n_site();
        for (acc, m) in weighted.iter_mut().zip(c.noisy_moments().moments()) {
            *acc += n * m;
        }
    }
    let avg: Vec<f64> = weighted.iter().map(|w| w / n_total as f64).collect();
    Ok(MomentState {
        moments: Some(MomentVector::new(avg, n_total)?),
    })
}

/// Folds one new batch into the state by the weighted average
/// (N_old * mu_old + N_new * mu_new) / (N_old + N_new). Old raw data is
/// never revisited, so the update costs only the batch's own budget.
pub fn update(state: &MomentState, batch: &SiteContribution) -> Result<MomentState> {
    let Some(old) = &state.moments else {
        return Ok(MomentState {
            moments: Some(batch.noisy_moments().clone()),
        });
    };
    if old.k_order() != batch.k_order() {
        return Err(Error::MismatchedOrder);
    }
    let n_old = old.n() as f64;
    let n_new = batch.n_site() as f64;
    let n_total = old.n() + batch.n_site();
    let merged: Vec<f64> = old
        .moments()
        .iter()
        .zip(batch.noisy_moments().moments())
        .map(|(a, b)| (n_old * a + n_new * b) / (n_old + n_new))
        .collect();
    Ok(MomentState {
        moments: Some(MomentVector::new(merged, n_total)?),
    })
}
