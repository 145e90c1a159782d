//! Distribution functions shared by the fitters, tests and simulations.
//!
//! Thin wrappers over `statrs` special functions, arranged so that tail
//! probabilities keep full relative precision far out in the tails.

use statrs::function::{beta, erf};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal quantile `Phi^{-1}(p)`.
///
/// Uses the lower tail for `p <= 0.5` and reflects otherwise, so
/// `1 - p` is formed exactly.
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        -SQRT_2 * erf::erfc_inv(2.0 * p)
    } else {
        SQRT_2 * erf::erfc_inv(2.0 * (1.0 - p))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

/// `ln Phi(x)`, accurate for very negative `x` where `Phi` underflows.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Asymptotic series of the Mills ratio.
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) / x2;
        sum += term;
    }
    -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + sum.ln()
}

/// `ln phi(x)` for the standard normal density.
pub fn ln_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Upper tail `P(F > f)` for the `F(df1, df2)` distribution.
///
/// Evaluated as `I_{df2/(df2 + df1 f)}(df2/2, df1/2)` so that small
/// p-values are not formed as `1 - cdf`.
pub fn f_upper_tail(f: f64, df1: f64, df2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let x = df2 / (df2 + df1 * f);
    beta::beta_reg(df2 / 2.0, df1 / 2.0, x).clamp(0.0, 1.0)
}

/// The `F(df1, df2)` value whose upper tail equals `alpha`.
pub fn f_upper_quantile(alpha: f64, df1: f64, df2: f64) -> f64 {
    if alpha >= 1.0 {
        return 0.0;
    }
    if alpha <= 0.0 {
        return f64::INFINITY;
    }
    // Upper tail of F at f is I_x(df2/2, df1/2) with x = df2/(df2 + df1 f).
    let x = beta::inv_beta_reg(df2 / 2.0, df1 / 2.0, alpha);
    if x <= 0.0 {
        return f64::INFINITY;
    }
    df2 * (1.0 - x) / (df1 * x)
}

/// Upper-tail quantile of the 1-df chi-squared distribution: the `x` with
/// `P(chi2_1 > x) = p`.
pub fn chi2_1_upper_quantile(p: f64) -> f64 {
    let z = normal_quantile(0.5 * p);
    z * z
}

/// Quantile of the `Beta(a, b)` distribution.
pub fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    beta::inv_beta_reg(a, b, q)
}

/// Median of a non-empty slice (mean of the two middle values for even length).
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Sample mean and (n - 1)-denominator standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Average ranks (1-based); ties share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their average
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return f64::NAN;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
