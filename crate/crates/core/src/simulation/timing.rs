use std::time::Instant;

use crate::error::{AcmeError, Result};
use crate::model::{fit_acme, fit_acme_generic, fit_log_linear, FitOptions};

use super::generate::{normal_covariates, GenotypeSource};
use super::{simulate_acme_pair, stream_rng, SimConfig};

/// Fitters compared by [`time_fitters`].
pub const FITTERS: [&str; 3] = ["ols", "generic_bfgs", "acme"];

/// Per-pair wall time of one fitter, in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTiming {
    pub method: &'static str,
    pub pairs: usize,
    pub mean_ms: f64,
    pub sd_ms: f64,
    pub failures: usize,
}

/// Time the log-linear OLS fit, the generic BFGS ACME fit and the profiled
/// ACME fit on the same `pairs` simulated pairs, one pair at a time on the
/// calling thread.
///
/// Pairs are drawn as in the power experiment (covariates shared, effect
/// sizes cycling through `config.eta_grid`); simulation time is excluded.
pub fn time_fitters(config: &SimConfig, pairs: usize) -> Result<Vec<FitTiming>> {
    config.validate()?;
    if pairs == 0 || config.eta_grid.is_empty() {
        return Err(AcmeError::InvalidArgument("timing needs at least one pair and one eta".into()));
    }
    let z = normal_covariates(config.p, config.n, &mut stream_rng(config.seed, u64::MAX));
    let opts = FitOptions::default();
    let mut times = [Vec::with_capacity(pairs), Vec::with_capacity(pairs), Vec::with_capacity(pairs)];
    let mut failures = [0usize; 3];
    for k in 0..pairs {
        let eta = config.eta_grid[k % config.eta_grid.len()];
        let mut rng = stream_rng(config.seed, k as u64);
        let pair = simulate_acme_pair(config, eta, &GenotypeSource::Hwe(config.maf), Some(&z), &mut rng)?.pair;

        let t = Instant::now();
        let ok = fit_log_linear(&pair).is_ok();
        times[0].push(t.elapsed().as_secs_f64() * 1e3);
        failures[0] += !ok as usize;

        let t = Instant::now();
        let ok = fit_acme_generic(&pair).is_ok();
        times[1].push(t.elapsed().as_secs_f64() * 1e3);
        failures[1] += !ok as usize;

        let t = Instant::now();
        let ok = fit_acme(&pair, &opts).is_ok();
        times[2].push(t.elapsed().as_secs_f64() * 1e3);
        failures[2] += !ok as usize;
    }
    Ok(FITTERS
        .iter()
        .zip(times.iter().zip(failures))
        .map(|(&method, (t, failures))| {
            let (mean_ms, sd_ms) = crate::stats::mean_sd(t);
            FitTiming {
                method,
                pairs,
                mean_ms,
                sd_ms,
                failures,
            }
        })
        .collect())
}
