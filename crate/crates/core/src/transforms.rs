//! Expression-scale transforms applied before any fit.

use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};
use crate::stats;

/// `log(1 + c)` elementwise; counts must be finite and nonnegative.
pub fn log1p_counts(counts: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(if bad.is_finite() {
            AcmeError::InvalidArgument(format!("negative count {bad}"))
        } else {
            AcmeError::NonFinite { what: "counts" }
        });
    }
    Ok(counts.iter().map(|c| c.ln_1p()).collect())
}

/// Divide each sample column by its library size, then rescale each gene
/// row so its mean equals the row's original raw mean.
///
/// `raw` is `T x n`. Library sizes default to column sums.
pub fn library_normalize(raw: &DMatrix<f64>, library_sizes: Option<&[f64]>) -> Result<DMatrix<f64>> {
    let (t, n) = raw.shape();
    let sizes: Vec<f64> = match library_sizes {
        Some(sizes) => {
            if sizes.len() != n {
                return Err(AcmeError::DimensionMismatch(format!(
                    "{} library sizes for {n} samples",
                    sizes.len()
                )));
            }
            sizes.to_vec()
        }
        None => raw.column_iter().map(|c| c.sum()).collect(),
    };
    if let Some(j) = sizes.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(AcmeError::InvalidArgument(format!(
            "library size of sample {j} is {}; must be positive",
            sizes[j]
        )));
    }
    let mut out = DMatrix::from_fn(t, n, |i, j| raw[(i, j)] / sizes[j]);
    for i in 0..t {
        let raw_mean = raw.row(i).sum() / n as f64;
        let scaled_mean = out.row(i).sum() / n as f64;
        let factor = if scaled_mean > 0.0 { raw_mean / scaled_mean } else { 0.0 };
        out.row_mut(i).scale_mut(factor);
    }
    Ok(out)
}

/// Rank-based inverse normal transform `Phi^{-1}(rank / (n + 1))`, with
/// tied values sharing their average rank.
pub fn quantile_normalize(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    stats::average_ranks(y)
        .into_iter()
        .map(|r| stats::normal_quantile(r / (n + 1.0)))
        .collect()
}

/// Box-cox transform: `(y^lambda - 1) / lambda`, or `log y` at `lambda = 0`.
pub fn box_cox(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if y.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(AcmeError::InvalidArgument("box-cox needs positive finite values".into()));
    }
    Ok(y.iter()
        .map(|&v| {
            if lambda == 0.0 {
                v.ln()
            } else {
                // (exp(lambda ln y) - 1) / lambda, stable for small lambda
                (lambda * v.ln()).exp_m1() / lambda
            }
        })
        .collect())
}

/// Standardized third central moment `m3 / m2^{3/2}`.
pub fn sample_skewness(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 {
        return Err(AcmeError::InvalidArgument("skewness needs at least 3 values".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n as f64;
    m3 /= n as f64;
    if m2 <= 0.0 {
        return Err(AcmeError::InvalidArgument("skewness of a constant vector".into()));
    }
    Ok(m3 / m2.powf(1.5))
}
