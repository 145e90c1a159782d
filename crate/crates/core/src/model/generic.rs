//! Full-dimensional quasi-Newton fit of the unprofiled ACME objective.
//!
//! Serves as the stock-optimizer comparator for benchmarking and as an
//! independent check of the profiled solver.

use std::cell::RefCell;

use argmin::core::{CostFunction, Error as ArgminError, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;

use crate::error::{AcmeError, Result};

use super::{fit_log_linear, GenePair};

/// Result of the generic BFGS fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericFit {
    pub beta0: f64,
    pub eta: f64,
    pub gamma: Vec<f64>,
    pub sse: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Half the residual sum of squares over `(log beta0, t, gamma)` with
/// `eta = pole + exp(t)`, which keeps every `1 + eta s_i` positive.
struct Objective<'a> {
    pair: &'a GenePair,
    pole: f64,
    /// Lowest cost evaluated so far and where; BFGS restarts from here.
    best: &'a RefCell<(f64, Vec<f64>)>,
}

impl Objective<'_> {
    fn residuals(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let eta = self.pole + theta[1].exp();
        let z = self.pair.covariates();
        let res = (0..self.pair.n())
            .map(|i| {
                let s = self.pair.s()[i] as f64;
                let cov: f64 = theta[2..].iter().enumerate().map(|(j, g)| g * z[(j, i)]).sum();
                self.pair.y()[i] - theta[0] - (eta * s).ln_1p() - cov
            })
            .collect();
        (eta, res)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> Result<f64, ArgminError> {
        // A non-finite iterate would stall the line search indefinitely.
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(argmin::core::ArgminError::InvalidParameter {
                text: "non-finite iterate".into(),
            }
            .into());
        }
        let (_, res) = self.residuals(theta);
        let cost = 0.5 * res.iter().map(|e| e * e).sum::<f64>();
        let mut best = self.best.borrow_mut();
        if cost < best.0 {
            *best = (cost, theta.clone());
        }
        Ok(cost)
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, theta: &Self::Param) -> Result<Vec<f64>, ArgminError> {
        let (eta, res) = self.residuals(theta);
        let z = self.pair.covariates();
        let mut grad = vec![0.0; theta.len()];
        let scale = theta[1].exp();
        for (i, e) in res.iter().enumerate() {
            let s = self.pair.s()[i] as f64;
            grad[0] -= e;
            grad[1] -= e * s / (1.0 + eta * s) * scale;
            for j in 0..z.nrows() {
                grad[2 + j] -= e * z[(j, i)];
            }
        }
        Ok(grad)
    }
}

/// BFGS from the log-linear starting point.
pub fn fit_acme_generic(pair: &GenePair) -> Result<GenericFit> {
    let ll = fit_log_linear(pair)?;
    let eta0 = ll.coefficients[1].exp() - 1.0;
    fit_acme_generic_from(pair, ll.coefficients[0], eta0, &ll.coefficients[2..])
}

/// BFGS from an explicit starting point `(log beta0, eta, gamma)`.
pub fn fit_acme_generic_from(pair: &GenePair, log_beta0: f64, eta: f64, gamma: &[f64]) -> Result<GenericFit> {
    if !pair.is_polymorphic() {
        return Err(AcmeError::MonomorphicGenotype);
    }
    if gamma.len() != pair.p() {
        return Err(AcmeError::DimensionMismatch(format!(
            "{} starting coefficients for {} covariates",
            gamma.len(),
            pair.p()
        )));
    }
    let pole = -1.0 / pair.max_allele_count() as f64;
    let dim = 2 + pair.p();
    let mut init = Vec::with_capacity(dim);
    init.push(log_beta0);
    init.push((eta - pole).max(1e-3).ln());
    init.extend_from_slice(gamma);
    let best = RefCell::new((f64::INFINITY, init.clone()));
    let problem = Objective { pair, pole, best: &best };
    problem.cost(&init).map_err(|e| AcmeError::InvalidArgument(e.to_string()))?;

    // The Hessian of the cost is roughly n times the identity for
    // standardized covariates; start BFGS from its inverse.
    let n = pair.n() as f64;
    let inv_hessian: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 / n } else { 0.0 }).collect())
        .collect();
    // Tighter tolerances run into rounding, where a zero step turns the
    // inverse-Hessian update into 0 / 0.
    let tol = 1e-6 * n.sqrt();
    let gradient_norm = |theta: &Vec<f64>| {
        let g = problem.gradient(theta).unwrap_or_default();
        g.iter().map(|g| g * g).sum::<f64>().sqrt()
    };

    // A lost descent direction or an invalid iterate ends a BFGS run; it is
    // restarted from the best point seen with a fresh inverse Hessian.
    const MAX_ITERS: u64 = 1000;
    const MAX_RESTARTS: usize = 5;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..=MAX_RESTARTS {
        let start = best.borrow().1.clone();
        let solver = BFGS::new(MoreThuenteLineSearch::new())
            .with_tolerance_grad(tol)
            .and_then(|s| s.with_tolerance_cost(0.0))
            .map_err(|e| AcmeError::InvalidArgument(e.to_string()))?;
        let budget = MAX_ITERS.saturating_sub(iterations);
        let outcome = Executor::new(Objective { pair, pole, best: &best }, solver)
            .configure(|state| state.param(start).inv_hessian(inv_hessian.clone()).max_iters(budget))
            .run();
        match outcome {
            Ok(result) => iterations += result.state().get_iter(),
            Err(err) => {
                log::debug!("BFGS restarted: {err}");
                iterations += 1;
            }
        }
        converged = gradient_norm(&best.borrow().1) < 10.0 * tol;
        if converged || iterations >= MAX_ITERS {
            break;
        }
    }
    let theta = best.borrow().1.clone();
    let (eta, res) = problem.residuals(&theta);
    Ok(GenericFit {
        beta0: theta[0].exp(),
        eta,
        gamma: theta[2..].to_vec(),
        sse: res.iter().map(|e| e * e).sum(),
        iterations,
        converged,
    })
}
