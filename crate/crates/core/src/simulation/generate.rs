use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::error::{AcmeError, Result};
use crate::linalg::Projector;
use crate::model::GenePair;

use super::skew::SkewNormalErrors;
use super::{SimConfig, MAX_GENOTYPE_RETRIES};

/// Where a simulated pair's allele counts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum GenotypeSource {
    /// A fixed allele-count vector, e.g. sampled from real data.
    Fixed(Vec<u8>),
    /// Hardy-Weinberg draws at the given minor allele frequency.
    Hwe(f64),
}

/// A simulated pair together with the parameters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPair {
    pub pair: GenePair,
    pub beta0: f64,
    pub eta: f64,
    pub gamma: Vec<f64>,
}

/// `n` Hardy-Weinberg genotypes (two independent alleles, each minor with
/// probability `maf`); monomorphic draws are redrawn.
pub fn hwe_genotypes<R: Rng + ?Sized>(n: usize, maf: f64, rng: &mut R) -> Result<Vec<u8>> {
    if !(maf > 0.0 && maf <= 0.5) {
        return Err(AcmeError::InvalidArgument(format!("maf {maf} outside (0, 0.5]")));
    }
    for _ in 0..MAX_GENOTYPE_RETRIES {
        let s: Vec<u8> = (0..n)
            .map(|_| rng.random_bool(maf) as u8 + rng.random_bool(maf) as u8)
            .collect();
        if s.iter().any(|&v| v != s[0]) {
            return Ok(s);
        }
    }
    Err(AcmeError::GenotypeDraw {
        attempts: MAX_GENOTYPE_RETRIES,
    })
}

/// `p x n` standard normal covariates.
pub(crate) fn normal_covariates<R: Rng + ?Sized>(p: usize, n: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(p, n, |_, _| rng.sample(StandardNormal))
}

/// Simulate `y = log beta0 + log(1 + eta s) + Z^T gamma + e`.
///
/// `gamma ~ N(0, sigma_gamma^2 I)` is drawn fresh; `e` is skew-normal with
/// `config.delta`, mean 0 and standard deviation `config.sigma_eps`.
/// Covariates are taken from `covariates` when given (`p x n`), otherwise
/// drawn standard normal. Draw order: genotypes, covariates, gamma, errors.
pub fn simulate_acme_pair<R: Rng + ?Sized>(
    config: &SimConfig,
    eta: f64,
    genotypes: &GenotypeSource,
    covariates: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Result<SimulatedPair> {
    let (n, p) = (config.n, config.p);
    let s = match genotypes {
        GenotypeSource::Fixed(s) => {
            if s.len() != n {
                return Err(AcmeError::DimensionMismatch(format!("{} genotypes for n = {n}", s.len())));
            }
            s.clone()
        }
        GenotypeSource::Hwe(maf) => hwe_genotypes(n, *maf, rng)?,
    };
    if let Some(bad) = s.iter().find(|&&v| !(1.0 + eta * v as f64 > 0.0)) {
        return Err(AcmeError::InvalidArgument(format!(
            "eta = {eta} makes 1 + eta * {bad} nonpositive"
        )));
    }
    let z = match covariates {
        Some(z) => {
            if z.shape() != (p, n) {
                return Err(AcmeError::DimensionMismatch(format!(
                    "covariates are {}x{}, expected {p}x{n}",
                    z.nrows(),
                    z.ncols()
                )));
            }
            z.clone()
        }
        None => normal_covariates(p, n, rng),
    };
    let gamma: Vec<f64> = (0..p)
        .map(|_| config.sigma_gamma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let errors = if config.sigma_eps > 0.0 {
        SkewNormalErrors::new(config.delta, config.sigma_eps)?.sample(n, rng)
    } else {
        vec![0.0; n]
    };
    let log_beta0 = config.beta0.ln();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let cov: f64 = gamma.iter().enumerate().map(|(j, g)| g * z[(j, i)]).sum();
            log_beta0 + (eta * s[i] as f64).ln_1p() + cov + errors[i]
        })
        .collect();
    Ok(SimulatedPair {
        pair: GenePair::new(y, s, z)?,
        beta0: config.beta0,
        eta,
        gamma,
    })
}

/// Null pairs built from a template: the template's fitted baseline
/// `y ~ 1 + Z` plus residuals resampled with replacement from a pool.
#[derive(Debug, Clone)]
pub struct NullResampler {
    pool: Vec<f64>,
    template: GenePair,
    baseline: Vec<f64>,
}

impl NullResampler {
    pub fn new(pool: Vec<f64>, template: &GenePair) -> Result<Self> {
        if pool.is_empty() {
            return Err(AcmeError::InvalidArgument("residual pool is empty".into()));
        }
        if pool.iter().any(|v| !v.is_finite()) {
            return Err(AcmeError::NonFinite { what: "residual pool" });
        }
        let projector = Projector::new(template.baseline_design())?;
        let residual = projector.residualize(template.y());
        let baseline = template.y().iter().zip(&residual).map(|(y, r)| y - r).collect();
        Ok(NullResampler {
            pool,
            template: template.clone(),
            baseline,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GenePair {
        let y = self
            .baseline
            .iter()
            .map(|b| b + self.pool[rng.random_range(0..self.pool.len())])
            .collect();
        self.template.with_response(y).expect("finite resampled response")
    }
}

/// One null pair: `y = constant + Z^T gamma + resampled residuals`, where
/// the constant and `gamma` come from the template's baseline fit and the
/// genotype is the template's.
pub fn simulate_null_resampled<R: Rng + ?Sized>(residual_pool: &[f64], pair_template: &GenePair, rng: &mut R) -> Result<GenePair> {
    Ok(NullResampler::new(residual_pool.to_vec(), pair_template)?.draw(rng))
}
