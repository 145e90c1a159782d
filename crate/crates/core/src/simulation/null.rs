use rand::RngExt;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{AcmeError, Result};
use crate::model::{analyze_pair, fit_acme, FitOptions, GenePair};

use super::generate::{hwe_genotypes, normal_covariates, GenotypeSource};
use super::{genomic_inflation, simulate_acme_pair, simulate_null_resampled, stream_rng, SimConfig};

/// Streams at or above this offset feed the residual pool, keeping them
/// apart from the per-pair streams.
const POOL_STREAMS: u64 = 1 << 62;

/// p-values of the ACME and log-linear association tests on null pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct NullCalibration {
    pub acme_p: Vec<f64>,
    pub ll_p: Vec<f64>,
    pub lambda_acme: f64,
    pub lambda_ll: f64,
    /// Pairs whose fit failed; they are left out of the p-values.
    pub failures: usize,
}

/// Residuals of ACME fits to `fits` simulated pairs, the effect size
/// cycling through `config.eta_grid`; a synthetic stand-in for residuals
/// of fits to real data.
pub fn acme_residual_pool(config: &SimConfig, fits: usize) -> Result<Vec<f64>> {
    config.validate()?;
    if fits == 0 || config.eta_grid.is_empty() {
        return Err(AcmeError::InvalidArgument("residual pool needs at least one fit and one eta".into()));
    }
    let opts = FitOptions::default();
    let chunks: Vec<Result<Vec<f64>>> = (0..fits as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(config.seed, POOL_STREAMS | k);
            let eta = config.eta_grid[k as usize % config.eta_grid.len()];
            let sim = simulate_acme_pair(config, eta, &GenotypeSource::Hwe(config.maf), None, &mut rng)?;
            let fit = fit_acme(&sim.pair, &opts)?;
            let pair = &sim.pair;
            Ok((0..pair.n())
                .map(|i| {
                    let cov: f64 = fit.gamma.iter().enumerate().map(|(j, g)| g * pair.covariates()[(j, i)]).sum();
                    pair.y()[i] - fit.beta0.ln() - (fit.eta * pair.s()[i] as f64).ln_1p() - cov
                })
                .collect())
        })
        .collect();
    let mut pool = Vec::with_capacity(fits * config.n);
    for chunk in chunks {
        pool.extend(chunk?);
    }
    Ok(pool)
}

/// Simulate `pairs` null pairs with residuals resampled from `pool` and
/// collect the ACME and log-linear association p-values.
///
/// Each pair gets Hardy-Weinberg genotypes at `config.maf`, a fresh
/// `gamma`, and the standard normal covariates shared by all pairs; its
/// template response is `log beta0 + Z^T gamma`.
pub fn run_null_calibration(config: &SimConfig, pool: &[f64], pairs: usize) -> Result<NullCalibration> {
    config.validate()?;
    if pool.is_empty() {
        return Err(AcmeError::InvalidArgument("residual pool is empty".into()));
    }
    if pairs == 0 {
        return Err(AcmeError::InvalidArgument("pairs must be positive".into()));
    }
    let (n, p) = (config.n, config.p);
    let z = normal_covariates(p, n, &mut stream_rng(config.seed, u64::MAX));
    let opts = FitOptions::default();
    let outcomes: Vec<Option<(f64, f64)>> = (0..pairs as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(config.seed, k);
            let s = hwe_genotypes(n, config.maf, &mut rng).ok()?;
            let gamma: Vec<f64> = (0..p)
                .map(|_| config.sigma_gamma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let y = (0..n)
                .map(|i| config.beta0.ln() + gamma.iter().enumerate().map(|(j, g)| g * z[(j, i)]).sum::<f64>())
                .collect();
            let template = GenePair::new(y, s, z.clone()).ok()?;
            let pair = simulate_null_resampled(pool, &template, &mut rng).ok()?;
            let a = analyze_pair(&pair, &opts).ok()?;
            Some((a.acme_test.p_value, a.ll_test.p_value))
        })
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    if failures > 0 {
        log::warn!("{failures} of {pairs} null pairs failed to fit");
    }
    let (acme_p, ll_p): (Vec<f64>, Vec<f64>) = outcomes.into_iter().flatten().unzip();
    if acme_p.is_empty() {
        return Err(AcmeError::InvalidArgument("every null pair failed to fit".into()));
    }
    Ok(NullCalibration {
        lambda_acme: genomic_inflation(&acme_p)?,
        lambda_ll: genomic_inflation(&ll_p)?,
        acme_p,
        ll_p,
        failures,
    })
}
