use crate::error::{AcmeError, Result};
use crate::stats;

/// Genomic inflation `lambda = median(chi2_i) / 0.455`, where
/// `chi2_i` is the 1-df chi-squared quantile with upper tail `p_i`.
///
/// Zero p-values are clamped to the smallest positive double and reported
/// with a warning.
pub fn genomic_inflation(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(AcmeError::InvalidArgument("no p-values".into()));
    }
    if let Some(bad) = p_values.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
        return Err(AcmeError::InvalidArgument(format!("p-value {bad} outside [0, 1]")));
    }
    let zeros = p_values.iter().filter(|&&p| p == 0.0).count();
    if zeros > 0 {
        log::warn!("{zeros} p-values of exactly 0 clamped to {:e}", f64::MIN_POSITIVE);
    }
    let mut chi2: Vec<f64> = p_values
        .iter()
        .map(|&p| stats::chi2_1_upper_quantile(p.max(f64::MIN_POSITIVE)))
        .collect();
    Ok(stats::median(&mut chi2) / 0.455)
}

/// One point of a QQ plot on the `-log10` scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqPoint {
    pub expected: f64,
    pub observed: f64,
    /// Pointwise 95% band of the `i`-th smallest of `m` uniforms,
    /// from its `Beta(i, m + 1 - i)` distribution.
    pub band_low: f64,
    pub band_high: f64,
}

/// QQ table against the uniform distribution, smallest p-value first.
pub fn qq_data(p_values: &[f64]) -> Result<Vec<QqPoint>> {
    if p_values.is_empty() {
        return Err(AcmeError::InvalidArgument("no p-values".into()));
    }
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let i = (k + 1) as f64;
            let b = (m + 1) as f64 - i;
            QqPoint {
                expected: -(i / (m + 1) as f64).log10(),
                observed: -p.log10(),
                band_low: -stats::beta_quantile(0.975, i, b).log10(),
                band_high: -stats::beta_quantile(0.025, i, b).log10(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::stream_rng;
    use rand::RngExt;

    #[test]
    fn inflation_fixed_points() {
        // The chi-squared median is 0.454936..., so lambda is just below 1.
        let lambda = genomic_inflation(&[0.5; 7]).unwrap();
        assert!((lambda - 0.454_936_423_119_572_8 / 0.455).abs() < 1e-12);
        assert_eq!(genomic_inflation(&[1.0, 1.0]).unwrap(), 0.0);
        assert!(genomic_inflation(&[0.0, 0.0, 0.0]).unwrap().is_finite());
        assert!(genomic_inflation(&[]).is_err());
        assert!(genomic_inflation(&[1.5]).is_err());
    }

    #[test]
    fn uniform_p_values_are_calibrated() {
        let mut rng = stream_rng(17, 0);
        let p: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let lambda = genomic_inflation(&p).unwrap();
        assert!((lambda - 1.0).abs() < 0.02, "{lambda}");
    }

    #[test]
    fn qq_shapes() {
        let single = qq_data(&[0.5]).unwrap();
        assert!((single[0].expected - 2f64.log10()).abs() < 1e-15);
        let flat = qq_data(&[1e-10; 5]).unwrap();
        assert!(flat.iter().all(|q| (q.observed - 10.0).abs() < 1e-12));
        let q = qq_data(&[0.9, 0.1, 0.5]).unwrap();
        assert!(q[0].observed > q[1].observed && q[1].observed > q[2].observed);
        assert!(q.iter().all(|q| q.band_low < q.expected && q.expected < q.band_high));
    }

    #[test]
    fn band_coverage_of_uniform_samples() {
        let mut inside = 0;
        let mut total = 0;
        for rep in 0..200 {
            let mut rng = stream_rng(23, rep);
            let p: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
            for q in qq_data(&p).unwrap() {
                total += 1;
                inside += (q.band_low <= q.observed && q.observed <= q.band_high) as usize;
            }
        }
        let coverage = inside as f64 / total as f64;
        assert!(coverage >= 0.93, "{coverage}");
    }
}
