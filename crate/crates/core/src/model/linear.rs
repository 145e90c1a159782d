use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};
use crate::linalg::Projector;

use super::GenePair;

/// Ordinary least-squares fit.
///
/// Coefficient layout is `[genotype columns..., gamma...]`:
/// log-linear stores `(theta0, theta1)`, log-ANCOVA stores `(alpha0, alpha1,
/// alpha2)` with NaN for a genotype class absent from the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub sse: f64,
    /// Number of genotype parameters beyond the baseline level.
    pub df_model: usize,
    /// True when log-ANCOVA dropped an unobserved genotype class.
    pub collapsed: bool,
}

/// OLS of `response` on `[genotype_design, Z^T]`.
///
/// `genotype_design` is `n x g` and must carry the baseline level
/// (an intercept or a full set of class indicators); `df_model` is `g - 1`.
pub fn fit_ols(response: &[f64], genotype_design: &DMatrix<f64>, z: &DMatrix<f64>) -> Result<LinearFit> {
    let n = response.len();
    let g = genotype_design.ncols();
    if genotype_design.nrows() != n || z.ncols() != n {
        return Err(AcmeError::DimensionMismatch(format!(
            "response has {n} rows, genotype design {} and covariates {}",
            genotype_design.nrows(),
            z.ncols()
        )));
    }
    if g == 0 {
        return Err(AcmeError::InvalidArgument("empty genotype design".into()));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(AcmeError::NonFinite { what: "response" });
    }
    let p = z.nrows();
    let design = DMatrix::from_fn(n, g + p, |i, j| {
        if j < g {
            genotype_design[(i, j)]
        } else {
            z[(j - g, i)]
        }
    });
    let projector = Projector::new(design.clone())?;
    let coef = projector.coefficients(response);
    let fitted = &design * &coef;
    let sse = response
        .iter()
        .zip(fitted.iter())
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    Ok(LinearFit {
        coefficients: coef.iter().copied().collect(),
        sse,
        df_model: g - 1,
        collapsed: false,
    })
}

/// `y = theta0 + theta1 s + Z^T gamma + e`.
pub fn fit_log_linear(pair: &GenePair) -> Result<LinearFit> {
    if !pair.is_polymorphic() {
        return Err(AcmeError::MonomorphicGenotype);
    }
    let n = pair.n();
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { pair.s()[i] as f64 });
    fit_ols(pair.y(), &design, pair.covariates())
}

/// Reduced model `y = mu + Z^T gamma + e`.
pub fn fit_null(pair: &GenePair) -> Result<LinearFit> {
    let design = DMatrix::from_element(pair.n(), 1, 1.0);
    fit_ols(pair.y(), &design, pair.covariates())
}

/// `y = sum_k alpha_k 1{s = k} + Z^T gamma + e` over the observed classes.
pub fn fit_log_ancova(pair: &GenePair) -> Result<LinearFit> {
    if !pair.is_polymorphic() {
        return Err(AcmeError::MonomorphicGenotype);
    }
    let counts = pair.class_counts();
    let observed: Vec<usize> = (0..3).filter(|&k| counts[k] > 0).collect();
    let design = DMatrix::from_fn(pair.n(), observed.len(), |i, j| {
        (pair.s()[i] as usize == observed[j]) as u8 as f64
    });
    let fit = fit_ols(pair.y(), &design, pair.covariates())?;
    let mut coefficients = vec![f64::NAN; 3];
    for (j, &k) in observed.iter().enumerate() {
        coefficients[k] = fit.coefficients[j];
    }
    coefficients.extend_from_slice(&fit.coefficients[observed.len()..]);
    Ok(LinearFit {
        coefficients,
        sse: fit.sse,
        df_model: fit.df_model,
        collapsed: observed.len() < 3,
    })
}
