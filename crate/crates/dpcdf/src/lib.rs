//! Differentially private CDF estimation on bounded real-valued data.
//!
//! The central estimator projects the empirical CDF onto a truncated
//! orthonormal Legendre basis and releases the projection through a
//! calibrated Gaussian mechanism; histogram and adaptive-quantile
//! baselines, distance metrics, decentralized aggregation, and an
//! experiment harness round out the toolkit.

pub mod data;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod federation;
pub mod instrument;
pub mod legendre;
pub mod mechanisms;
pub mod metrics;
pub mod sampling;
pub mod special;

pub use error::{Error, Result};
