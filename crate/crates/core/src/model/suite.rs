use crate::error::Result;

use super::acme::fit_with_design;
use super::design::PairDesign;
use super::ftest::{f_test_association, f_test_gof, nested_f_test, TestResult};
use super::{AcmeFit, FitOptions, GenePair};

/// ACME, log-linear and log-ANCOVA fits of one pair with their association
/// and goodness-of-fit tests, computed from a single factored design.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAnalysis {
    pub acme: AcmeFit,
    /// ACME against `y ~ 1 + Z`.
    pub acme_test: TestResult,
    /// Log-linear allele-count slope `theta1`.
    pub ll_slope: f64,
    pub ll_sse: f64,
    pub ll_test: TestResult,
    pub ancova_sse: f64,
    /// Log-ANCOVA against `y ~ 1 + Z`, with one df per non-baseline class.
    pub ancova_test: TestResult,
    /// ACME against log-ANCOVA; `None` when a genotype class is absent and
    /// log-ANCOVA has no more genotype parameters than ACME.
    pub acme_gof: Option<TestResult>,
    pub ll_gof: Option<TestResult>,
}

/// Fit every log-scale model of `pair` and run the nested F-tests.
pub fn analyze_pair(pair: &GenePair, opts: &FitOptions) -> Result<PairAnalysis> {
    let design = PairDesign::new(pair)?;
    analyze_design(&design, opts)
}

pub(crate) fn analyze_design(design: &PairDesign<'_>, opts: &FitOptions) -> Result<PairAnalysis> {
    let (n, p) = (design.pair().n(), design.pair().p());
    let null_sse = design.null_sse();
    let acme = fit_with_design(design, opts)?;
    let acme_test = f_test_association(acme.sse, null_sse, n, p)?;
    let (ll_slope, ll_sse) = design.log_linear();
    let ll_test = f_test_association(ll_sse, null_sse, n, p)?;
    let ancova_sse = design.ancova_sse();
    let classes = design.observed_classes();
    let ancova_df = classes - 1;
    let ancova_test = nested_f_test(null_sse, ancova_sse, ancova_df, n - p - 1 - ancova_df)?;
    let (acme_gof, ll_gof) = if classes == 3 {
        (
            Some(f_test_gof(acme.sse, ancova_sse, n, p)?),
            Some(f_test_gof(ll_sse, ancova_sse, n, p)?),
        )
    } else {
        (None, None)
    };
    Ok(PairAnalysis {
        acme,
        acme_test,
        ll_slope,
        ll_sse,
        ll_test,
        ancova_sse,
        ancova_test,
        acme_gof,
        ll_gof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fit_acme, fit_log_ancova, fit_log_linear, fit_null};

    #[test]
    fn suite_matches_individual_fits() {
        let n = 60;
        let s: Vec<u8> = (0..n).map(|i| ((i * 5) % 3) as u8).collect();
        let z = nalgebra::DMatrix::from_fn(2, n, |j, i| ((i * (j + 3)) as f64 * 0.37).sin());
        let y: Vec<f64> = (0..n)
            .map(|i| (20.0 * (1.0 + 0.4 * s[i] as f64)).ln() + 0.2 * z[(0, i)] + 0.3 * ((i as f64) * 2.1).cos())
            .collect();
        let pair = GenePair::new(y, s, z).unwrap();
        let opts = FitOptions::default();
        let a = analyze_pair(&pair, &opts).unwrap();
        let acme = fit_acme(&pair, &opts).unwrap();
        let ll = fit_log_linear(&pair).unwrap();
        let anc = fit_log_ancova(&pair).unwrap();
        let null = fit_null(&pair).unwrap();
        assert_eq!(a.acme, acme);
        assert!((a.ll_slope - ll.coefficients[1]).abs() < 1e-10);
        assert!((a.ll_sse - ll.sse).abs() < 1e-10 * ll.sse);
        assert!((a.ancova_sse - anc.sse).abs() < 1e-10 * anc.sse);
        let expected = f_test_association(acme.sse, null.sse, n, 2).unwrap();
        assert!((a.acme_test.f_stat - expected.f_stat).abs() < 1e-8 * expected.f_stat);
        assert_eq!(a.ancova_test.df1, 2);
        assert_eq!(a.acme_gof.unwrap().df2, n - 2 - 3);
    }

    #[test]
    fn collapsed_ancova_has_no_gof() {
        let s: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let y = (0..20).map(|i| 3.0 + 0.5 * s[i] as f64 + 0.1 * (i as f64).sin()).collect();
        let pair = GenePair::without_covariates(y, s).unwrap();
        let a = analyze_pair(&pair, &FitOptions::default()).unwrap();
        assert!(a.acme_gof.is_none() && a.ll_gof.is_none());
        assert_eq!(a.ancova_test.df1, 1);
    }
}
