use crate::error::{AcmeError, Result};
use crate::stats;

/// Outcome of a nested-model F-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub f_stat: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

/// `F = ((reduced - full) / df1) / (full / df2)` with its upper-tail p-value.
///
/// Negative SSE differences (round-off in nested fits) are clamped to zero.
/// A perfect full fit with a positive difference gives `F = inf`, `p = 0`.
pub fn nested_f_test(reduced_sse: f64, full_sse: f64, df1: usize, df2: usize) -> Result<TestResult> {
    if df1 == 0 || df2 == 0 {
        return Err(AcmeError::InvalidArgument(format!(
            "F-test needs positive degrees of freedom, got ({df1}, {df2})"
        )));
    }
    if !(reduced_sse.is_finite() && full_sse.is_finite()) || full_sse < 0.0 {
        return Err(AcmeError::InvalidArgument(format!(
            "invalid sums of squares: reduced {reduced_sse}, full {full_sse}"
        )));
    }
    let mut diff = reduced_sse - full_sse;
    if diff < 0.0 {
        if diff < -1e-8 * reduced_sse.max(1.0) {
            log::warn!("nested SSE difference {diff:e} is negative; clamped to 0");
        }
        diff = 0.0;
    }
    let f_stat = if diff == 0.0 {
        0.0
    } else if full_sse == 0.0 {
        f64::INFINITY
    } else {
        (diff / df1 as f64) / (full_sse / df2 as f64)
    };
    Ok(TestResult {
        f_stat,
        df1,
        df2,
        p_value: stats::f_upper_tail(f_stat, df1 as f64, df2 as f64),
    })
}

/// Association test of a one-parameter genotype model against `y ~ 1 + Z`,
/// referred to `F(1, n - p - 2)`.
pub fn f_test_association(full_sse: f64, reduced_sse: f64, n: usize, p: usize) -> Result<TestResult> {
    let df2 = residual_df(n, p, 2)?;
    nested_f_test(reduced_sse, full_sse, 1, df2)
}

/// Goodness-of-fit test of a one-parameter genotype model against
/// log-ANCOVA, referred to `F(1, n - p - 3)`.
pub fn f_test_gof(small_sse: f64, ancova_sse: f64, n: usize, p: usize) -> Result<TestResult> {
    let df2 = residual_df(n, p, 3)?;
    nested_f_test(small_sse, ancova_sse, 1, df2)
}

fn residual_df(n: usize, p: usize, used: usize) -> Result<usize> {
    match n.checked_sub(p + used) {
        Some(df) if df > 0 => Ok(df),
        _ => Err(AcmeError::InsufficientSamples {
            n,
            p,
            required: p + used + 1,
        }),
    }
}
