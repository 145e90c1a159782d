mod common;

use acme_eqtl::model::{
    fit_acme, fit_acme_generic, fit_log_ancova, fit_log_linear, fit_multi_snp_stepwise, fit_ols, FitOptions, GenePair,
};
use acme_eqtl::simulation::{hwe_genotypes, stream_rng, SimConfig};
use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::neldermead::NelderMead;
use common::*;
use nalgebra::DMatrix;
use rand::RngExt;
use rand_distr::StandardNormal;

fn config(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        ..SimConfig::default()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn profiled_fit_matches_grid_oracle() {
    let cfg = config(11);
    let opts = FitOptions::default();
    for k in 0..200 {
        let eta = cfg.eta_grid[k % cfg.eta_grid.len()];
        let pair = random_pair(&cfg, eta, k as u64);
        let fit = fit_acme(&pair, &opts).unwrap();
        let pole = -1.0 / pair.max_allele_count() as f64;
        let oracle = grid_profile_oracle(&pair, pole + opts.boundary_margin, opts.eta_upper, 401);
        assert!((fit.sse - oracle.sse).abs() <= 1e-8, "k={k}: {} vs {}", fit.sse, oracle.sse);
        assert!((fit.eta - oracle.eta).abs() <= 1e-4, "k={k}: {} vs {}", fit.eta, oracle.eta);
        assert!(rel(fit.beta0.ln(), oracle.log_beta0) < 1e-4, "k={k}");
    }
}

#[test]
fn exhaustive_eta_grid_at_step_1e5() {
    let cfg = SimConfig {
        eta_grid: vec![1.0],
        seed: 5,
        ..SimConfig::default()
    };
    let pair = random_pair(&cfg, 1.0, 0);
    let fit = fit_acme(&pair, &FitOptions::default()).unwrap();
    // SSE(eta) = |P y - log(1 + eta) P 1{s=1} - log(1 + 2 eta) P 1{s=2}|^2,
    // with P from the SVD of [1, Z^T].
    let proj = SvdProjector::new(design(&pair, false));
    let ind = |k: u8| -> Vec<f64> { pair.s().iter().map(|&s| (s == k) as u8 as f64).collect() };
    let r0 = proj.residual(pair.y());
    let r1 = proj.residual(&ind(1));
    let r2 = proj.residual(&ind(2));
    let pole = -1.0 / pair.max_allele_count() as f64;
    let steps = ((10.0 - pole) / 1e-5) as usize;
    let mut best = (f64::INFINITY, f64::NAN);
    for k in 1..steps {
        let eta = pole + k as f64 * 1e-5;
        let v = &r0 - (eta).ln_1p() * &r1 - (2.0 * eta).ln_1p() * &r2;
        let sse = v.norm_squared();
        if sse < best.0 {
            best = (sse, eta);
        }
    }
    assert!((fit.eta - best.1).abs() <= 1e-4, "{} vs {}", fit.eta, best.1);
    assert!(fit.sse <= best.0 + 1e-10);
}

#[test]
fn linear_fits_match_normal_equations() {
    let cfg = config(12);
    for k in 0..50 {
        let pair = random_pair(&cfg, 0.5, k);
        let ll = fit_log_linear(&pair).unwrap();
        let oracle = normal_equations(&design(&pair, true), pair.y());
        for (a, b) in ll.coefficients.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }

        let ancova = fit_log_ancova(&pair).unwrap();
        let counts = pair.class_counts();
        let observed: Vec<usize> = (0..3).filter(|&c| counts[c] > 0).collect();
        let x = DMatrix::from_fn(pair.n(), observed.len() + pair.p(), |i, j| {
            if j < observed.len() {
                (pair.s()[i] as usize == observed[j]) as u8 as f64
            } else {
                pair.covariates()[(j - observed.len(), i)]
            }
        });
        let oracle = normal_equations(&x, pair.y());
        let mut expected = vec![f64::NAN; 3];
        for (j, &c) in observed.iter().enumerate() {
            expected[c] = oracle[j];
        }
        expected.extend_from_slice(&oracle[observed.len()..]);
        for (a, b) in ancova.coefficients.iter().zip(&expected) {
            if b.is_nan() {
                assert!(a.is_nan());
            } else {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn fit_ols_matches_pseudo_inverse() {
    let mut rng = stream_rng(13, 0);
    for _ in 0..50 {
        let (n, g, p) = (60, 3, 4);
        let gd = DMatrix::from_fn(n, g, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = DMatrix::from_fn(p, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let fit = fit_ols(&y, &gd, &z).unwrap();
        let x = DMatrix::from_fn(n, g + p, |i, j| if j < g { gd[(i, j)] } else { z[(j - g, i)] });
        let (coef, sse) = pinv_ols(&x, &y);
        for (a, b) in fit.coefficients.iter().zip(&coef) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
        assert!(rel(fit.sse, sse) < 1e-10);
    }
}

#[test]
fn se_matches_finite_difference_hessian() {
    let cfg = config(14);
    let opts = FitOptions::default();
    for k in 0..30 {
        let eta = [0.2, 0.5, 1.0, 2.0, -0.2][k % 5];
        let pair = random_pair(&cfg, eta, k as u64);
        let fit = fit_acme(&pair, &opts).unwrap();
        let mut theta = vec![fit.beta0.ln(), fit.eta];
        theta.extend_from_slice(&fit.gamma);
        let oracle = finite_difference_se(&pair, &theta);
        assert!(rel(fit.se_eta, oracle) < 1e-3, "k={k}: {} vs {oracle}", fit.se_eta);
    }
}

#[test]
fn generic_optimizer_reaches_the_same_minimum() {
    let cfg = config(15);
    let opts = FitOptions::default();
    for k in 0..1000 {
        let eta = cfg.eta_grid[k % cfg.eta_grid.len()];
        let pair = random_pair(&cfg, eta, k as u64);
        let fit = fit_acme(&pair, &opts).unwrap();
        let generic = fit_acme_generic(&pair).unwrap();
        assert!(generic.converged, "k={k}");
        assert!((fit.sse - generic.sse).abs() <= 1e-8, "k={k}: {} vs {}", fit.sse, generic.sse);
    }
}

#[test]
fn single_snp_stepwise_equals_profiled_fit() {
    let cfg = config(16);
    let opts = FitOptions::default();
    for k in 0..20 {
        let pair = random_pair(&cfg, [0.0, 0.3, 2.0, -0.3][k % 4], k as u64);
        let fit = fit_acme(&pair, &opts).unwrap();
        let multi = fit_multi_snp_stepwise(pair.y(), &[pair.s().to_vec()], pair.covariates(), &opts).unwrap();
        assert!((multi.etas[0] - fit.eta).abs() <= 1e-8 * fit.eta.abs().max(1.0));
        assert!(rel(multi.beta0, fit.beta0) <= 1e-8);
        assert!((multi.sse - fit.sse).abs() <= 1e-8 * fit.sse.max(1.0));
        for (a, b) in multi.gamma.iter().zip(&fit.gamma) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
    }
}

/// Profiled two-SNP objective over `(eta1, eta2)`.
struct TwoSnp<'a> {
    proj: &'a SvdProjector,
    y: &'a [f64],
    snps: &'a [Vec<u8>],
}

impl CostFunction for TwoSnp<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, eta: &Vec<f64>) -> Result<f64, ArgminError> {
        let mut off = Vec::with_capacity(self.y.len());
        for i in 0..self.y.len() {
            let inner = 1.0 + eta[0] * self.snps[0][i] as f64 + eta[1] * self.snps[1][i] as f64;
            if inner.is_nan() || inner <= 0.0 {
                return Ok(1e300);
            }
            off.push(self.y[i] - inner.ln());
        }
        Ok(self.proj.residual(&off).norm_squared())
    }
}

#[test]
fn two_snp_stepwise_matches_multistart_joint_optimum() {
    let opts = FitOptions::default();
    for k in 0..10u64 {
        let mut rng = stream_rng(17, k);
        let n = 150;
        let p = 3;
        let snps = vec![hwe_genotypes(n, 0.3, &mut rng).unwrap(), hwe_genotypes(n, 0.2, &mut rng).unwrap()];
        let z = DMatrix::from_fn(p, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (e1, e2) = (0.8, 0.3);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let cov: f64 = (0..p).map(|j| 0.5 * z[(j, i)]).sum();
                (100.0 * (1.0 + e1 * snps[0][i] as f64 + e2 * snps[1][i] as f64)).ln()
                    + cov
                    + 0.5 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let fit = fit_multi_snp_stepwise(&y, &snps, &z, &opts).unwrap();

        let template = GenePair::new(y.clone(), snps[0].clone(), z.clone()).unwrap();
        let proj = SvdProjector::new(design(&template, false));
        let mut best = f64::INFINITY;
        for &a in &[-0.2, 0.0, 0.5, 1.5, 4.0] {
            for &b in &[-0.2, 0.0, 0.5, 1.5, 4.0] {
                let simplex = vec![vec![a, b], vec![a + 0.1, b], vec![a, b + 0.1]];
                let solver = NelderMead::new(simplex).with_sd_tolerance(1e-15).unwrap();
                let problem = TwoSnp {
                    proj: &proj,
                    y: &y,
                    snps: &snps,
                };
                let result = Executor::new(problem, solver)
                    .configure(|s| s.max_iters(5000))
                    .run()
                    .unwrap();
                best = best.min(result.state().get_best_cost());
            }
        }
        assert!((fit.sse - best).abs() <= 1e-6, "k={k}: stepwise {} vs joint {best}", fit.sse);
    }
}
