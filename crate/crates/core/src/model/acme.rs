use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};
use crate::linalg::{dot, Projector};

use super::design::PairDesign;
use super::solver::{self, Profile};
use super::{AcmeFit, GenePair};

/// Controls for the profiled ACME solver.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence requires `|d sse / d eta| < grad_tol_per_sample * n`.
    pub grad_tol_per_sample: f64,
    /// ... and a relative SSE change below this on the last step.
    pub rel_sse_tol: f64,
    /// Distance kept from the pole `eta = -1 / max(s)`.
    pub boundary_margin: f64,
    pub eta_upper: f64,
    /// Points in the coarse log-spaced scan that seeds the bracket.
    pub grid_points: usize,
    /// Turn a non-converged fit into `AcmeError::ConvergenceFailure`.
    pub require_convergence: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            grad_tol_per_sample: 1e-10,
            rel_sse_tol: 1e-12,
            boundary_margin: 1e-6,
            eta_upper: 1e6,
            grid_points: 64,
            require_convergence: false,
        }
    }
}

impl Profile for PairDesign<'_> {
    fn pole(&self) -> f64 {
        if self.class_counts()[2] > 0 {
            -0.5
        } else {
            -1.0
        }
    }

    fn sse(&self, eta: f64) -> f64 {
        self.profiled_sse(eta)
    }

    fn derivatives(&self, eta: f64) -> (f64, f64, f64) {
        self.profiled_derivatives(eta)
    }

    fn scale(&self) -> f64 {
        self.null_sse()
    }
}

/// Fit `y = log(beta0) + log(1 + eta s) + Z^T gamma + e` by least squares.
///
/// For fixed `eta` the model is linear in `(log beta0, gamma)`, which are
/// profiled out by OLS; the remaining one-dimensional objective is minimized
/// by safeguarded Newton iteration started from the log-linear estimate
/// `exp(theta1) - 1` and a coarse scan of the feasible range.
pub fn fit_acme(pair: &GenePair, opts: &FitOptions) -> Result<AcmeFit> {
    let design = PairDesign::new(pair)?;
    fit_with_design(&design, opts)
}

pub(crate) fn fit_with_design(design: &PairDesign<'_>, opts: &FitOptions) -> Result<AcmeFit> {
    let pair = design.pair();
    let (n, p) = (pair.n(), pair.p());
    let (theta1, _) = design.log_linear();
    let solution = solver::minimize(design, theta1.exp() - 1.0, n, opts);
    let eta = solution.eta;

    let (beta0, gamma, residuals) = linear_part(design.projector(), pair, eta);
    let sse = dot(&residuals, &residuals);
    let sigma2 = sse / (n - p - 2) as f64;
    let se_eta = match schur_complement(design.projector(), pair, eta, &residuals) {
        Ok(schur) => (sigma2 / schur).sqrt(),
        Err(err) => {
            log::debug!("standard error unavailable: {err}");
            f64::NAN
        }
    };
    let fit = AcmeFit {
        beta0,
        eta,
        gamma,
        sigma2,
        sse,
        se_eta,
        iterations: solution.iterations,
        converged: solution.converged,
    };
    if !fit.converged {
        if opts.require_convergence {
            return Err(AcmeError::ConvergenceFailure {
                iterations: solution.iterations,
                gradient: solution.gradient,
                best: Box::new(fit),
            });
        }
        log::debug!(
            "ACME fit not converged: eta = {eta}, gradient = {:e}",
            solution.gradient
        );
    }
    Ok(fit)
}

/// OLS of `y - log(1 + eta s)` on `[1, Z^T]`: returns `(beta0, gamma, residuals)`.
pub(crate) fn linear_part(projector: &Projector, pair: &GenePair, eta: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let offset: Vec<f64> = pair
        .y()
        .iter()
        .zip(pair.s())
        .map(|(y, &s)| y - (eta * s as f64).ln_1p())
        .collect();
    let coef = projector.coefficients(&offset);
    let gamma: Vec<f64> = coef.iter().skip(1).copied().collect();
    let residuals = residuals(pair, coef[0], eta, &gamma);
    (coef[0].exp(), gamma, residuals)
}

/// `y_i - log_beta0 - log(1 + eta s_i) - Z_i^T gamma`.
fn residuals(pair: &GenePair, log_beta0: f64, eta: f64, gamma: &[f64]) -> Vec<f64> {
    let z = pair.covariates();
    (0..pair.n())
        .map(|i| {
            let arg = 1.0 + eta * pair.s()[i] as f64;
            assert!(arg > 0.0, "log of nonpositive systematic term at eta = {eta}");
            let cov: f64 = gamma.iter().enumerate().map(|(j, g)| g * z[(j, i)]).sum();
            pair.y()[i] - log_beta0 - arg.ln() - cov
        })
        .collect()
}

/// Schur complement of the `(eta, eta)` entry in the Hessian of `sse / 2`
/// over `(log beta0, eta, gamma)`:
/// `|P g'|^2 + sum_i e_i s_i^2 / (1 + eta s_i)^2`, where `g' = s / (1 + eta s)`
/// and `P` projects off `[1, Z^T]`.
fn schur_complement(projector: &Projector, pair: &GenePair, eta: f64, residuals: &[f64]) -> Result<f64> {
    let slope: Vec<f64> = pair
        .s()
        .iter()
        .map(|&s| s as f64 / (1.0 + eta * s as f64))
        .collect();
    let projected = projector.residualize(&slope);
    let curvature: f64 = residuals
        .iter()
        .zip(&slope)
        .map(|(e, d)| e * d * d)
        .sum();
    let direct = dot(&slope, &slope) + curvature.abs();
    let schur = dot(&projected, &projected) + curvature;
    let relative = schur / direct;
    if !(schur > 0.0) || relative < 1e-12 {
        return Err(AcmeError::SingularInformation { schur, relative });
    }
    Ok(schur)
}

/// Delta-method standard error of `eta`.
///
/// The inverse observed information of `(log beta0, eta, gamma)` at the
/// fitted values, with `sigma^2` fixed at its estimate, has `(eta, eta)`
/// entry `sigma2 / schur`; the map to `eta` is the identity on that
/// coordinate.
pub fn effect_size_se(fit: &AcmeFit, pair: &GenePair) -> Result<f64> {
    let projector = Projector::new(pair.baseline_design())?;
    let res = residuals(pair, fit.beta0.ln(), fit.eta, &fit.gamma);
    let schur = schur_complement(&projector, pair, fit.eta, &res)?;
    Ok((fit.sigma2 / schur).sqrt())
}

/// Observed information matrix of the negative log-likelihood with
/// `sigma^2` held at `fit.sigma2`, parameter order `(log beta0, eta, gamma)`.
pub fn information_matrix(fit: &AcmeFit, pair: &GenePair) -> DMatrix<f64> {
    let (n, p) = (pair.n(), pair.p());
    let z = pair.covariates();
    let res = residuals(pair, fit.beta0.ln(), fit.eta, &fit.gamma);
    // Jacobian of the fitted values.
    let jac = DMatrix::from_fn(n, p + 2, |i, j| match j {
        0 => 1.0,
        1 => {
            let s = pair.s()[i] as f64;
            s / (1.0 + fit.eta * s)
        }
        _ => z[(j - 2, i)],
    });
    let mut info = jac.transpose() * &jac;
    let curvature: f64 = (0..n)
        .map(|i| {
            let s = pair.s()[i] as f64;
            res[i] * s * s / (1.0 + fit.eta * s).powi(2)
        })
        .sum();
    info[(1, 1)] += curvature;
    info / fit.sigma2
}

/// Systematic raw-scale expression `beta0 (1 + eta s)` at allele count `s`.
pub fn predict_expression(fit: &AcmeFit, allele_count: u8) -> Result<f64> {
    if allele_count > 2 {
        return Err(AcmeError::InvalidAlleleCount {
            index: 0,
            value: allele_count,
        });
    }
    Ok(fit.beta0 * (1.0 + fit.eta * allele_count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(n: usize) -> GenePair {
        let s: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
        let y = s.iter().map(|&v| (100.0 + 50.0 * v as f64).ln()).collect();
        GenePair::without_covariates(y, s).unwrap()
    }

    #[test]
    fn exact_fit_recovers_parameters() {
        let fit = fit_acme(&noiseless(30), &FitOptions::default()).unwrap();
        assert!((fit.beta0 - 100.0).abs() < 1e-8 * 100.0, "{fit:?}");
        assert!((fit.eta - 0.5).abs() < 1e-8, "{fit:?}");
        assert!(fit.sse < 1e-8);
        assert!(fit.converged);
        assert!(fit.se_eta < 1e-6);
    }

    #[test]
    fn monomorphic_is_rejected() {
        let pair = GenePair::without_covariates(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0; 5]).unwrap();
        assert!(matches!(
            fit_acme(&pair, &FitOptions::default()),
            Err(AcmeError::MonomorphicGenotype)
        ));
    }

    #[test]
    fn predictions() {
        let fit = AcmeFit {
            beta0: 100.0,
            eta: 0.5,
            gamma: vec![],
            sigma2: 1.0,
            sse: 0.0,
            se_eta: 0.0,
            iterations: 0,
            converged: true,
        };
        assert_eq!(predict_expression(&fit, 0).unwrap(), 100.0);
        assert_eq!(predict_expression(&fit, 2).unwrap(), 200.0);
        assert!(predict_expression(&fit, 3).is_err());
    }

    #[test]
    fn noiseless_predictions_match_generating_values() {
        let fit = fit_acme(&noiseless(45), &FitOptions::default()).unwrap();
        for (s, expected) in [(0, 100.0), (1, 150.0), (2, 200.0)] {
            let got = predict_expression(&fit, s).unwrap();
            assert!((got - expected).abs() < 1e-6, "{s}: {got}");
        }
    }

    #[test]
    fn missing_homozygote_class_uses_wider_domain() {
        // Only classes 0 and 1: eta may go below -0.5.
        let s: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let y = s.iter().map(|&v| (100.0 * (1.0 - 0.7 * v as f64)).ln()).collect();
        let pair = GenePair::without_covariates(y, s).unwrap();
        let fit = fit_acme(&pair, &FitOptions::default()).unwrap();
        assert!((fit.eta + 0.7).abs() < 1e-8, "{fit:?}");
    }

    #[test]
    fn standalone_se_agrees_with_fit() {
        let s: Vec<u8> = (0..40).map(|i| ((i * 7) % 3) as u8).collect();
        let y: Vec<f64> = s
            .iter()
            .enumerate()
            .map(|(i, &v)| (50.0 * (1.0 + 0.8 * v as f64)).ln() + 0.3 * ((i as f64) * 1.7).sin())
            .collect();
        let pair = GenePair::without_covariates(y, s).unwrap();
        let fit = fit_acme(&pair, &FitOptions::default()).unwrap();
        let se = effect_size_se(&fit, &pair).unwrap();
        assert!((se - fit.se_eta).abs() < 1e-12 * se);
        let info = information_matrix(&fit, &pair);
        let inv = info.try_inverse().unwrap();
        assert!((inv[(1, 1)].sqrt() - se).abs() < 1e-9 * se);
    }
}
