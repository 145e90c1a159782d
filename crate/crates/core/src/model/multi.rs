use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};
use crate::linalg::{dot, Projector};

use super::solver::{self, Profile};
use super::FitOptions;

/// Additive multi-SNP ACME fit `y = log(beta0 + sum_j beta_j s_j) + Z^T gamma + e`.
///
/// Produced by coordinate-wise profiled fits and flagged exploratory.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSnpFit {
    pub beta0: f64,
    /// Per-SNP effect sizes `beta_j / beta0`.
    pub etas: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sse: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub exploratory: bool,
}

impl MultiSnpFit {
    pub fn betas(&self) -> Vec<f64> {
        self.etas.iter().map(|e| e * self.beta0).collect()
    }
}

/// Profile of one coordinate `eta_j` with the others folded into `offset`:
/// the systematic term is `log(offset_i + eta_j s_ij)`.
struct Coordinate<'a> {
    projector: &'a Projector,
    y: &'a [f64],
    s: &'a [u8],
    offset: &'a [f64],
    pole: f64,
    scale: f64,
}

impl Coordinate<'_> {
    fn residual(&self, eta: f64) -> Vec<f64> {
        let r: Vec<f64> = self
            .y
            .iter()
            .zip(self.s.iter().zip(self.offset))
            .map(|(y, (&s, c))| {
                let arg = c + eta * s as f64;
                debug_assert!(arg > 0.0, "log of nonpositive systematic term");
                y - arg.ln()
            })
            .collect();
        self.projector.residualize(&r)
    }
}

impl Profile for Coordinate<'_> {
    fn pole(&self) -> f64 {
        self.pole
    }

    fn sse(&self, eta: f64) -> f64 {
        let e = self.residual(eta);
        dot(&e, &e)
    }

    fn derivatives(&self, eta: f64) -> (f64, f64, f64) {
        let e = self.residual(eta);
        let slope: Vec<f64> = self
            .s
            .iter()
            .zip(self.offset)
            .map(|(&s, c)| s as f64 / (c + eta * s as f64))
            .collect();
        let projected = self.projector.residualize(&slope);
        let grad = -2.0 * dot(&e, &slope);
        let curvature: f64 = e.iter().zip(&slope).map(|(e, d)| e * d * d).sum();
        let hess = 2.0 * dot(&projected, &projected) + 2.0 * curvature;
        (dot(&e, &e), grad, hess)
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}

/// Step-wise fit of the additive multi-SNP model.
///
/// `snps` holds one allele-count row per SNP. Each sweep re-fits every
/// `eta_j` with the others held fixed; sweeps stop once the SSE improvement
/// falls below `1e-12` relative.
pub fn fit_multi_snp_stepwise(
    y: &[f64],
    snps: &[Vec<u8>],
    z: &DMatrix<f64>,
    opts: &FitOptions,
) -> Result<MultiSnpFit> {
    const MAX_SWEEPS: usize = 500;
    let n = y.len();
    let k = snps.len();
    let p = z.nrows();
    if k == 0 {
        return Err(AcmeError::InvalidArgument("no SNPs supplied".into()));
    }
    if z.ncols() != n || snps.iter().any(|s| s.len() != n) {
        return Err(AcmeError::DimensionMismatch("SNP rows and covariates must have n columns".into()));
    }
    if n <= p + k + 2 {
        return Err(AcmeError::InsufficientSamples { n, p, required: p + k + 3 });
    }
    for row in snps {
        if let Some((index, &value)) = row.iter().enumerate().find(|(_, &v)| v > 2) {
            return Err(AcmeError::InvalidAlleleCount { index, value });
        }
        if row.iter().all(|&v| v == row[0]) {
            return Err(AcmeError::MonomorphicGenotype);
        }
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { z[(j - 1, i)] });
    let projector = Projector::new(design)?;
    let ry = projector.residualize(y);
    let scale = dot(&ry, &ry);

    let mut etas = vec![0.0; k];
    let mut sse = scale;
    let mut sweeps = 0;
    let mut converged = false;
    let mut offset = vec![0.0; n];
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut all_converged = true;
        for j in 0..k {
            for (i, c) in offset.iter_mut().enumerate() {
                *c = 1.0
                    + (0..k)
                        .filter(|&m| m != j)
                        .map(|m| etas[m] * snps[m][i] as f64)
                        .sum::<f64>();
            }
            let pole = snps[j]
                .iter()
                .zip(&offset)
                .filter(|(&s, _)| s > 0)
                .map(|(&s, c)| -c / s as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            let profile = Coordinate {
                projector: &projector,
                y,
                s: &snps[j],
                offset: &offset,
                pole,
                scale,
            };
            let solution = solver::minimize(&profile, etas[j], n, opts);
            all_converged &= solution.converged;
            etas[j] = solution.eta;
        }
        let systematic = systematic_term(snps, &etas);
        let r: Vec<f64> = y.iter().zip(&systematic).map(|(y, g)| y - g).collect();
        let e = projector.residualize(&r);
        let new_sse = dot(&e, &e);
        let improvement = sse - new_sse;
        sse = new_sse;
        if improvement <= 1e-12 * new_sse || improvement <= 1e-24 * scale {
            converged = all_converged;
            break;
        }
    }

    let systematic = systematic_term(snps, &etas);
    let r: Vec<f64> = y.iter().zip(&systematic).map(|(y, g)| y - g).collect();
    let coef = projector.coefficients(&r);
    let gamma: Vec<f64> = coef.iter().skip(1).copied().collect();
    let sse = (0..n)
        .map(|i| {
            let cov: f64 = gamma.iter().enumerate().map(|(j, g)| g * z[(j, i)]).sum();
            (r[i] - coef[0] - cov).powi(2)
        })
        .sum();
    if !converged {
        log::warn!("multi-SNP step-wise fit stopped after {sweeps} sweeps without converging");
    }
    Ok(MultiSnpFit {
        beta0: coef[0].exp(),
        etas,
        gamma,
        sse,
        sweeps,
        converged,
        exploratory: true,
    })
}

fn systematic_term(snps: &[Vec<u8>], etas: &[f64]) -> Vec<f64> {
    let n = snps[0].len();
    (0..n)
        .map(|i| {
            let arg = 1.0 + snps.iter().zip(etas).map(|(s, e)| e * s[i] as f64).sum::<f64>();
            assert!(arg > 0.0, "log of nonpositive systematic term");
            arg.ln()
        })
        .collect()
}
