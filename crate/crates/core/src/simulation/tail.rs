//! Importance-sampling estimates of the ACME F-test's Type-I error far
//! into the tail.
//!
//! Under the null, `y = log beta0 + Z^T gamma + e` with skew-normal `e`.
//! After projecting off `[1, Z^T]`, the genotype enters the ACME fit only
//! through the plane spanned by the class indicators `1{s = 1}` and
//! `1{s = 2}`, and the fitted curve `(log(1 + eta), log(1 + 2 eta))` bends
//! away from the allele-count direction within that plane. The proposal
//! therefore shifts the errors by `c sigma u_k`, with `u_k` one of
//! `RING` unit directions spread evenly around that plane (starting from
//! the allele-count direction `d`) and chosen uniformly; with `c^2` at the
//! F critical value the statistic lands near the rejection boundary. Each
//! draw is weighted by the exact density ratio of the error vector,
//! `w = f(e) / mean_k f(e - c sigma u_k)`.

use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{AcmeError, Result};
use crate::linalg::{dot, Projector};
use crate::model::{analyze_pair, FitOptions, GenePair};
use crate::stats;

use super::generate::{hwe_genotypes, normal_covariates};
use super::skew::SkewNormalErrors;
use super::{stream_rng, SimConfig};

/// Proposal distribution for [`estimate_tail_type1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    /// Sample the null itself; every weight is 1.
    Null,
    /// Shift with `c = sqrt(F^{-1}(1 - alpha; 1, n - p - 2))`, tuned per level.
    Boundary,
    /// Shift with a fixed `c`.
    Shift(f64),
}

/// Estimated true rejection rate of the nominal level-`alpha` test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailErrorEstimate {
    pub alpha: f64,
    pub estimate: f64,
    pub mc_se: f64,
    /// Kish effective sample size `(sum w)^2 / sum w^2` over rejecting draws.
    pub n_effective: f64,
    /// Set when `n_effective` is below 1% of the draws.
    pub flagged: bool,
    /// Shift size `c` used by the proposal.
    pub shift: f64,
    pub draws: usize,
    pub rejections: usize,
    /// Draws whose fit failed; they count as non-rejections.
    pub failures: usize,
}

/// Estimate the Type-I error of the ACME association F-test at each level
/// of `alpha_grid` from `n_draws` proposal draws per level.
///
/// Genotypes (Hardy-Weinberg at `config.maf`), standard normal covariates
/// and `gamma` are redrawn for every draw; they are shared by the null and
/// the proposal and do not enter the weights.
pub fn estimate_tail_type1(
    config: &SimConfig,
    alpha_grid: &[f64],
    proposal: Proposal,
    n_draws: usize,
) -> Result<Vec<TailErrorEstimate>> {
    config.validate()?;
    if n_draws == 0 {
        return Err(AcmeError::InvalidArgument("n_draws must be positive".into()));
    }
    if let Some(a) = alpha_grid.iter().find(|&&a| !(1e-20..=1e-1).contains(&a)) {
        return Err(AcmeError::InvalidArgument(format!("alpha {a} outside [1e-20, 1e-1]")));
    }
    if !(config.sigma_eps > 0.0) {
        return Err(AcmeError::InvalidArgument("tail estimation needs sigma_eps > 0".into()));
    }
    let errors = SkewNormalErrors::new(config.delta, config.sigma_eps)?;
    let df2 = (config.n - config.p - 2) as f64;
    let opts = FitOptions::default();

    alpha_grid
        .iter()
        .enumerate()
        .map(|(level, &alpha)| {
            let shift = match proposal {
                Proposal::Null => 0.0,
                Proposal::Boundary => stats::f_upper_quantile(alpha, 1.0, df2).sqrt(),
                Proposal::Shift(c) => {
                    if !(c >= 0.0 && c.is_finite()) {
                        return Err(AcmeError::InvalidArgument(format!("shift {c} must be finite and nonnegative")));
                    }
                    c
                }
            };
            let draws: Vec<Option<(f64, bool)>> = (0..n_draws as u64)
                .into_par_iter()
                .map(|k| {
                    let stream = ((level as u64) << 40) | k;
                    draw(config, &errors, shift, alpha, &opts, stream)
                })
                .collect();
            Ok(summarize(alpha, shift, &draws))
        })
        .collect()
}

/// One proposal draw: `Some((weight, rejected))`, or `None` if the fit failed.
fn draw(
    config: &SimConfig,
    errors: &SkewNormalErrors,
    shift: f64,
    alpha: f64,
    opts: &FitOptions,
    stream: u64,
) -> Option<(f64, bool)> {
    let (n, p) = (config.n, config.p);
    let mut rng = stream_rng(config.seed, stream);
    let s = hwe_genotypes(n, config.maf, &mut rng).ok()?;
    let z = normal_covariates(p, n, &mut rng);
    let gamma: Vec<f64> = (0..p)
        .map(|_| config.sigma_gamma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut e = errors.sample(n, &mut rng);

    let weight = if shift > 0.0 {
        let design = nalgebra::DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { z[(j - 1, i)] });
        let projector = Projector::new(design).ok()?;
        let shifts = ring(&projector, &s, shift * config.sigma_eps);
        let pick = rng.random_range(0..shifts.len());
        for (ei, di) in e.iter_mut().zip(&shifts[pick]) {
            *ei += di;
        }
        let ln_null: f64 = e.iter().map(|&x| errors.ln_density(x)).sum();
        let ln_parts: Vec<f64> = shifts
            .iter()
            .map(|u| e.iter().zip(u).map(|(&x, ui)| errors.ln_density(x - ui)).sum())
            .collect();
        let top = ln_parts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = ln_parts.iter().map(|l| (l - top).exp()).sum::<f64>() / ln_parts.len() as f64;
        (ln_null - top - mean.ln()).exp()
    } else {
        1.0
    };

    let log_beta0 = config.beta0.ln();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let cov: f64 = gamma.iter().enumerate().map(|(j, g)| g * z[(j, i)]).sum();
            log_beta0 + cov + e[i]
        })
        .collect();
    let pair = GenePair::new(y, s, z).ok()?;
    let analysis = analyze_pair(&pair, opts).ok()?;
    Some((weight, analysis.acme_test.p_value < alpha))
}

/// Directions of the proposal ring around the genotype plane.
const RING: usize = 16;

/// Shift vectors of length `radius`: `RING` evenly spaced directions in the
/// residualized genotype-class plane, or `+-d` when only one non-baseline
/// class is present.
fn ring(projector: &Projector, s: &[u8], radius: f64) -> Vec<Vec<f64>> {
    let sf: Vec<f64> = s.iter().map(|&v| v as f64).collect();
    let mut d = projector.residualize(&sf);
    let norm = dot(&d, &d).sqrt();
    d.iter_mut().for_each(|v| *v /= norm);
    let u2: Vec<f64> = s.iter().map(|&v| (v == 2) as u8 as f64).collect();
    let r2 = projector.residualize(&u2);
    let along = dot(&r2, &d);
    let mut orth: Vec<f64> = r2.iter().zip(&d).map(|(r, d)| r - along * d).collect();
    let orth_norm = dot(&orth, &orth).sqrt();
    if !(orth_norm > 1e-8 * dot(&r2, &r2).sqrt()) {
        return vec![
            d.iter().map(|v| radius * v).collect(),
            d.iter().map(|v| -radius * v).collect(),
        ];
    }
    orth.iter_mut().for_each(|v| *v /= orth_norm);
    (0..RING)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / RING as f64;
            let (sin, cos) = theta.sin_cos();
            d.iter().zip(&orth).map(|(a, b)| radius * (cos * a + sin * b)).collect()
        })
        .collect()
}

fn summarize(alpha: f64, shift: f64, draws: &[Option<(f64, bool)>]) -> TailErrorEstimate {
    let n = draws.len() as f64;
    let contributions: Vec<f64> = draws
        .iter()
        .map(|d| match d {
            Some((w, true)) => *w,
            _ => 0.0,
        })
        .collect();
    let estimate = contributions.iter().sum::<f64>() / n;
    let mc_se = if draws.len() > 1 {
        stats::mean_sd(&contributions).1 / n.sqrt()
    } else {
        0.0
    };
    let rejected: Vec<f64> = draws
        .iter()
        .filter_map(|d| match d {
            Some((w, true)) => Some(*w),
            _ => None,
        })
        .collect();
    let sum_w: f64 = rejected.iter().sum();
    let sum_w2: f64 = rejected.iter().map(|w| w * w).sum();
    let n_effective = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
    let failures = draws.iter().filter(|d| d.is_none()).count();
    if failures > 0 {
        log::warn!("{failures} of {} tail draws failed to fit", draws.len());
    }
    let flagged = n_effective < 0.01 * n;
    if flagged {
        log::warn!("alpha = {alpha:e}: effective sample size {n_effective:.1} below 1% of {n} draws");
    }
    TailErrorEstimate {
        alpha,
        estimate,
        mc_se,
        n_effective,
        flagged,
        shift,
        draws: draws.len(),
        rejections: rejected.len(),
        failures,
    }
}
