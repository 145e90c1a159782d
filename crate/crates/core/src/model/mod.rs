//! Model fits for one gene-SNP pair: ACME (log-of-linear), log-linear,
//! log-ANCOVA and plain OLS baselines, plus the nested F-tests that compare them.
//!
//! All fits share the same layout: `y` is log expression, `s` the allele
//! count and `Z` a `p x n` covariate matrix entering on the log scale.
//! The ACME systematic term is `log(beta0) + log(1 + eta * s)`.

mod acme;
mod design;
mod ftest;
mod generic;
mod linear;
mod multi;
mod solver;
mod suite;

use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};

pub use acme::{effect_size_se, fit_acme, information_matrix, predict_expression, FitOptions};
pub use design::PairDesign;
pub use ftest::{f_test_association, f_test_gof, nested_f_test, TestResult};
pub use generic::{fit_acme_generic, fit_acme_generic_from, GenericFit};
pub use linear::{fit_log_ancova, fit_log_linear, fit_null, fit_ols, LinearFit};
pub use multi::{fit_multi_snp_stepwise, MultiSnpFit};
pub use suite::{analyze_pair, PairAnalysis};
pub(crate) use suite::analyze_design;

/// One gene's log expression paired with one SNP's allele counts and the
/// shared covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct GenePair {
    y: Vec<f64>,
    s: Vec<u8>,
    /// `p x n`, one covariate per row.
    z: DMatrix<f64>,
}

impl GenePair {
    pub fn new(y: Vec<f64>, s: Vec<u8>, z: DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        if s.len() != n || z.ncols() != n {
            return Err(AcmeError::DimensionMismatch(format!(
                "y has {n} samples, s has {}, Z has {} columns",
                s.len(),
                z.ncols()
            )));
        }
        if let Some((index, &value)) = s.iter().enumerate().find(|(_, &v)| v > 2) {
            return Err(AcmeError::InvalidAlleleCount { index, value });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(AcmeError::NonFinite { what: "expression" });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(AcmeError::NonFinite { what: "covariates" });
        }
        let p = z.nrows();
        if n <= p + 3 {
            return Err(AcmeError::InsufficientSamples {
                n,
                p,
                required: p + 4,
            });
        }
        for (i, row) in z.row_iter().enumerate() {
            let first = row[0];
            if row.iter().all(|&v| v == first) {
                return Err(AcmeError::InvalidArgument(format!(
                    "covariate row {i} is constant; the intercept already plays that role"
                )));
            }
        }
        Ok(GenePair { y, s, z })
    }

    /// Pair without covariates.
    pub fn without_covariates(y: Vec<f64>, s: Vec<u8>) -> Result<Self> {
        let n = y.len();
        Self::new(y, s, DMatrix::zeros(0, n))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.z.nrows()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn s(&self) -> &[u8] {
        &self.s
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Same genotype and covariates with a different response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(AcmeError::DimensionMismatch(format!(
                "response has {} samples, pair has {}",
                y.len(),
                self.n()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(AcmeError::NonFinite { what: "expression" });
        }
        Ok(GenePair {
            y,
            s: self.s.clone(),
            z: self.z.clone(),
        })
    }

    pub fn max_allele_count(&self) -> u8 {
        self.s.iter().copied().max().unwrap_or(0)
    }

    pub fn is_polymorphic(&self) -> bool {
        self.s.iter().any(|&v| v != self.s[0])
    }

    /// Sample counts of genotype classes 0, 1 and 2.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for &v in &self.s {
            counts[v as usize] += 1;
        }
        counts
    }

    /// Minor allele frequency `min(f, 1 - f)` with `f = sum(s) / 2n`.
    pub fn maf(&self) -> f64 {
        minor_allele_frequency(&self.s)
    }

    /// `n x (1 + p)` matrix `[1, Z^T]`.
    pub(crate) fn baseline_design(&self) -> DMatrix<f64> {
        let n = self.n();
        let p = self.p();
        DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { self.z[(j - 1, i)] })
    }
}

/// `min(f, 1 - f)` where `f` is the mean allele dosage over `2n`.
pub fn minor_allele_frequency(s: &[u8]) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let total: usize = s.iter().map(|&v| v as usize).sum();
    let f = total as f64 / (2.0 * s.len() as f64);
    f.min(1.0 - f)
}

/// Fitted ACME model.
#[derive(Debug, Clone, PartialEq)]
pub struct AcmeFit {
    /// Baseline mean expression on the raw scale.
    pub beta0: f64,
    /// Effect size `beta1 / beta0`.
    pub eta: f64,
    /// Covariate coefficients on the log scale.
    pub gamma: Vec<f64>,
    /// Error variance estimate `sse / (n - p - 2)`.
    pub sigma2: f64,
    pub sse: f64,
    /// Standard error of `eta`; NaN when the observed information is not
    /// positive definite.
    pub se_eta: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl AcmeFit {
    pub fn beta1(&self) -> f64 {
        self.beta0 * self.eta
    }
}

/// `w(eta) = log(1 + 2 eta)`, the axis on which effect sizes are compared.
pub fn effect_axis(eta: f64) -> f64 {
    (1.0 + 2.0 * eta).ln()
}
