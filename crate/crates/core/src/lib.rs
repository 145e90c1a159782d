//! Cis-eQTL effect-size estimation under the ACME log-of-linear model.
//!
//! Expression is modeled as `log(1 + c) = log(beta0 + beta1 s) + Z^T gamma + e`:
//! allelic contributions add on the raw expression scale while errors and
//! covariates act multiplicatively. The crate provides
//!
//! * [`model`]: ACME, log-linear, log-ANCOVA and OLS fits, nested F-tests,
//!   standard errors of the effect size `eta = beta1 / beta0`;
//! * [`transforms`]: `log(1 + c)`, library normalization, rank-based
//!   quantile normalization, box-cox;
//! * [`simulation`]: synthetic data, null calibration, genomic inflation,
//!   skew-normal importance sampling of extreme Type-I error, power runs;
//! * [`scan`]: TSV ingestion, cis-window enumeration and the parallel
//!   genome-wide scan.

// `!(x > 0.0)` is the deliberate spelling of "positive and not NaN".
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod scan;
pub mod simulation;
pub mod stats;
pub mod transforms;

pub use error::{AcmeError, Result};
pub use model::{
    effect_axis, effect_size_se, f_test_association, f_test_gof, fit_acme, fit_log_ancova, fit_log_linear,
    fit_ols, predict_expression, analyze_pair, AcmeFit, FitOptions, GenePair, LinearFit, PairAnalysis, TestResult,
};
pub use scan::{Bundle, ScanOptions, ScanRecord};
pub use simulation::{SimConfig, TailErrorEstimate};
