use rand::{Rng, RngExt};
use rand_distr::SkewNormal;

use crate::error::{AcmeError, Result};
use crate::stats;

/// Skew-normal errors standardized to mean 0 and standard deviation `sigma`.
///
/// `delta = shape / sqrt(1 + shape^2)`; the raw skew-normal with location
/// `xi` and scale `omega` has mean `xi + omega delta sqrt(2/pi)` and variance
/// `omega^2 (1 - 2 delta^2 / pi)`, which fixes `xi` and `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNormalErrors {
    delta: f64,
    sigma: f64,
    shape: f64,
    location: f64,
    scale: f64,
}

impl SkewNormalErrors {
    pub fn new(delta: f64, sigma: f64) -> Result<Self> {
        if !(delta.abs() < 1.0) {
            return Err(AcmeError::InvalidArgument(format!("skew-normal delta {delta} outside (-1, 1)")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(AcmeError::InvalidArgument(format!("error scale must be positive, got {sigma}")));
        }
        let shape = delta / (1.0 - delta * delta).sqrt();
        let mean_unit = delta * (2.0 / std::f64::consts::PI).sqrt();
        let scale = sigma / (1.0 - mean_unit * mean_unit).sqrt();
        Ok(SkewNormalErrors {
            delta,
            sigma,
            shape,
            location: -scale * mean_unit,
            scale,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let dist = SkewNormal::new(self.location, self.scale, self.shape).expect("validated parameters");
        (0..n).map(|_| rng.sample(dist)).collect()
    }

    /// `ln f(x) = ln 2 - ln omega + ln phi(u) + ln Phi(shape u)`, `u = (x - xi) / omega`.
    pub fn ln_density(&self, x: f64) -> f64 {
        let u = (x - self.location) / self.scale;
        std::f64::consts::LN_2 - self.scale.ln() + stats::ln_normal_pdf(u) + stats::ln_normal_cdf(self.shape * u)
    }

    /// Closed-form skewness `(4 - pi)/2 (delta sqrt(2/pi))^3 / (1 - 2 delta^2/pi)^{3/2}`.
    pub fn skewness(&self) -> f64 {
        let m = self.delta * (2.0 / std::f64::consts::PI).sqrt();
        (4.0 - std::f64::consts::PI) / 2.0 * m.powi(3) / (1.0 - m * m).powf(1.5)
    }
}

/// `n` i.i.d. skew-normal draws with mean 0 and variance `sigma^2`.
pub fn sample_skew_normal<R: Rng + ?Sized>(n: usize, delta: f64, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    Ok(SkewNormalErrors::new(delta, sigma)?.sample(n, rng))
}
