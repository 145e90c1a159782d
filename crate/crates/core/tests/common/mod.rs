//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use acme_eqtl::model::GenePair;
use acme_eqtl::simulation::{simulate_acme_pair, stream_rng, GenotypeSource, SimConfig};
use nalgebra::{DMatrix, DVector};

/// `[1, Z^T]` with an optional genotype column after the intercept.
pub fn design(pair: &GenePair, genotype: bool) -> DMatrix<f64> {
    let (n, p) = (pair.n(), pair.p());
    let extra = genotype as usize;
    DMatrix::from_fn(n, 1 + extra + p, |i, j| match j {
        0 => 1.0,
        1 if genotype => pair.s()[i] as f64,
        _ => pair.covariates()[(j - 1 - extra, i)],
    })
}

/// Least squares through the SVD pseudo-inverse: `(coefficients, sse)`.
pub fn pinv_ols(x: &DMatrix<f64>, y: &[f64]) -> (Vec<f64>, f64) {
    let svd = x.clone().svd(true, true);
    let yv = DVector::from_column_slice(y);
    let coef = svd.solve(&yv, 1e-12).expect("svd solve");
    let res = &yv - x * &coef;
    (coef.iter().copied().collect(), res.norm_squared())
}

/// Least squares through the normal equations solved by LU.
pub fn normal_equations(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * DVector::from_column_slice(y);
    xtx.lu().solve(&xty).expect("nonsingular").iter().copied().collect()
}

/// Orthonormal basis of the column space of `x`, from its SVD.
pub struct SvdProjector {
    u: DMatrix<f64>,
    x: DMatrix<f64>,
}

impl SvdProjector {
    pub fn new(x: DMatrix<f64>) -> Self {
        let svd = x.clone().svd(true, false);
        let u = svd.u.expect("u requested");
        SvdProjector { u, x }
    }

    pub fn residual(&self, v: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(v);
        let fitted = &self.u * (self.u.transpose() * &v);
        v - fitted
    }

    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        pinv_ols(&self.x, v).0
    }
}

/// `y - log(1 + eta s)`.
pub fn offset(pair: &GenePair, eta: f64) -> Vec<f64> {
    pair.y()
        .iter()
        .zip(pair.s())
        .map(|(y, &s)| y - (eta * s as f64).ln_1p())
        .collect()
}

/// Profiled SSE at `eta`, projecting directly for every evaluation.
pub fn profiled_sse(proj: &SvdProjector, pair: &GenePair, eta: f64) -> f64 {
    proj.residual(&offset(pair, eta)).norm_squared()
}

#[derive(Debug, Clone)]
pub struct OracleFit {
    pub eta: f64,
    pub log_beta0: f64,
    pub gamma: Vec<f64>,
    pub sse: f64,
}

/// Grid search over `u = log(eta - pole)` on `[lo, hi]`, followed by a
/// golden-section refinement of the best grid cell.
pub fn grid_profile_oracle(pair: &GenePair, lo: f64, hi: f64, points: usize) -> OracleFit {
    let proj = SvdProjector::new(design(pair, false));
    let pole = -1.0 / pair.s().iter().copied().max().unwrap() as f64;
    let eta_of = |u: f64| (pole + u.exp()).clamp(lo, hi);
    let (ulo, uhi) = ((lo - pole).ln(), (hi - pole).ln());
    let grid: Vec<f64> = (0..points)
        .map(|k| ulo + (uhi - ulo) * k as f64 / (points - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&u| profiled_sse(&proj, pair, eta_of(u))).collect();
    let best = (0..points).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(points - 1)];
    let f = |u: f64| profiled_sse(&proj, pair, eta_of(u));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // The bracket ends and the best grid point guard against a boundary optimum.
    let candidates = [(a + b) / 2.0, ulo, uhi, grid[best]];
    let u = candidates
        .iter()
        .copied()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap();
    let eta = eta_of(u);
    let coef = proj.coefficients(&offset(pair, eta));
    OracleFit {
        eta,
        log_beta0: coef[0],
        gamma: coef[1..].to_vec(),
        sse: f(u),
    }
}

/// Full least-squares objective over `(log beta0, eta, gamma)`.
pub fn full_sse(pair: &GenePair, theta: &[f64]) -> f64 {
    let z = pair.covariates();
    (0..pair.n())
        .map(|i| {
            let cov: f64 = (0..pair.p()).map(|j| theta[2 + j] * z[(j, i)]).sum();
            let e = pair.y()[i] - theta[0] - (theta[1] * pair.s()[i] as f64).ln_1p() - cov;
            e * e
        })
        .sum()
}

/// Standard error of `eta` from a central finite-difference Hessian of the
/// Gaussian negative log-likelihood with `sigma^2 = sse / (n - p - 2)`.
pub fn finite_difference_se(pair: &GenePair, theta: &[f64]) -> f64 {
    let dim = theta.len();
    let sse = full_sse(pair, theta);
    let sigma2 = sse / (pair.n() - pair.p() - 2) as f64;
    let nll = |t: &[f64]| full_sse(pair, t) / (2.0 * sigma2);
    let h: Vec<f64> = theta.iter().map(|t| 1e-4 * t.abs().max(1.0)).collect();
    let mut hess = DMatrix::zeros(dim, dim);
    let f0 = nll(theta);
    for i in 0..dim {
        for j in i..dim {
            let value = if i == j {
                let mut up = theta.to_vec();
                let mut down = theta.to_vec();
                up[i] += h[i];
                down[i] -= h[i];
                (nll(&up) - 2.0 * f0 + nll(&down)) / (h[i] * h[i])
            } else {
                let at = |si: f64, sj: f64| {
                    let mut t = theta.to_vec();
                    t[i] += si * h[i];
                    t[j] += sj * h[j];
                    nll(&t)
                };
                (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h[i] * h[j])
            };
            hess[(i, j)] = value;
            hess[(j, i)] = value;
        }
    }
    let inv = hess.try_inverse().expect("invertible Hessian");
    inv[(1, 1)].sqrt()
}

/// A simulated ACME pair from its own random stream.
pub fn random_pair(config: &SimConfig, eta: f64, stream: u64) -> GenePair {
    let mut rng = stream_rng(config.seed, stream);
    simulate_acme_pair(config, eta, &GenotypeSource::Hwe(config.maf), None, &mut rng)
        .expect("simulation")
        .pair
}
