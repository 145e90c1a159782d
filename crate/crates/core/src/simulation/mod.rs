//! Synthetic data, null calibration and the power experiment.
//!
//! Every driver derives its random streams from `SimConfig::seed`: work
//! item `k` uses ChaCha stream `k` of that seed, so results do not depend on
//! how work is spread across threads.

mod bundle;
mod calibration;
mod generate;
mod null;
mod power;
mod skew;
mod tail;
mod timing;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AcmeError, Result};

pub use bundle::simulate_bundle;
pub use calibration::{genomic_inflation, qq_data, QqPoint};
pub use generate::{hwe_genotypes, simulate_acme_pair, simulate_null_resampled, GenotypeSource, NullResampler, SimulatedPair};
pub use null::{acme_residual_pool, run_null_calibration, NullCalibration};
pub use power::{run_power_experiment, Model, PowerRow, PowerTable};
pub use skew::{sample_skew_normal, SkewNormalErrors};
pub use tail::{estimate_tail_type1, Proposal, TailErrorEstimate};
pub use timing::{time_fitters, FitTiming, FITTERS};

/// Draws of a monomorphic Hardy-Weinberg genotype are redrawn this many times.
pub const MAX_GENOTYPE_RETRIES: usize = 100;

/// Full description of a synthetic experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    pub beta0: f64,
    pub eta_grid: Vec<f64>,
    pub maf: f64,
    /// Standard deviation of the log-scale errors.
    pub sigma_eps: f64,
    /// Standard deviation of the covariate coefficients.
    pub sigma_gamma: f64,
    /// Skew-normal `delta`; 0 gives normal errors.
    pub delta: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 105,
            p: 19,
            beta0: 100.0,
            eta_grid: vec![-0.4, -0.25, -0.1, 0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
            maf: 0.25,
            sigma_eps: 1.0,
            sigma_gamma: 1.0,
            delta: 0.0,
            replicates: 100,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AcmeError::InvalidArgument(msg));
        if self.n <= self.p + 3 {
            return Err(AcmeError::InsufficientSamples {
                n: self.n,
                p: self.p,
                required: self.p + 4,
            });
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return bad(format!("beta0 must be positive, got {}", self.beta0));
        }
        if let Some(eta) = self.eta_grid.iter().find(|&&e| !(e > -0.5 && e <= 10.0)) {
            return bad(format!("eta {eta} outside (-0.5, 10]"));
        }
        if !(self.maf > 0.0 && self.maf <= 0.5) {
            return bad(format!("maf {} outside (0, 0.5]", self.maf));
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite()) {
            return bad(format!("sigma_eps must be nonnegative, got {}", self.sigma_eps));
        }
        if !(self.sigma_gamma >= 0.0 && self.sigma_gamma.is_finite()) {
            return bad(format!("sigma_gamma must be nonnegative, got {}", self.sigma_gamma));
        }
        if !(self.delta.abs() < 1.0) {
            return bad(format!("delta {} outside (-1, 1)", self.delta));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        Ok(())
    }
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
