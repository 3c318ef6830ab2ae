//! Estimation of the equivalent number of looks (ENL) for multilook
//! polarimetric SAR data under the scaled complex Wishart model.
//!
//! The crate provides:
//! - special functions (log-gamma, polygamma and their multivariate sums),
//! - a small complex Hermitian matrix kernel,
//! - the Wishart log-density, likelihoods and a seeded sampler,
//! - the ML, trace-moment (MM1/MM2), bias-corrected (IML) and
//!   modified-profile (BN) estimators of L,
//! - a reproducible Monte Carlo harness and WCOV1 covariance-image I/O.

pub mod error;
pub mod estimators;
pub mod hermitian;
pub mod monte_carlo;
pub mod polsar_io;
pub mod rng;
pub mod special;
pub mod wishart;

pub use error::{Error, Result};
pub use estimators::{EstimateResult, EstimatorId, SolverOptions};
pub use hermitian::{CholeskyFactor, ComplexMatrix, HermitianMatrix, MatrixSample};
pub use wishart::{WishartParams, WishartSampler};
