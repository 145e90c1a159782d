use std::borrow::Cow;

use crate::error::{AcmeError, Result};
use crate::linalg::{dot, Projector};

use super::GenePair;

/// A pair with the baseline design `[1, Z^T]` factored once.
///
/// The genotype enters every model only through the class indicators
/// `u1 = 1{s = 1}` and `u2 = 1{s = 2}`. After residualizing `y`, `u1` and
/// `u2` against the baseline design, the null, log-linear, log-ANCOVA and
/// profiled ACME residual sums of squares are all functions of the 3 x 3
/// Gram matrix of those residual vectors.
#[derive(Debug, Clone)]
pub struct PairDesign<'a> {
    pair: &'a GenePair,
    projector: Cow<'a, Projector>,
    ry: Vec<f64>,
    r1: Vec<f64>,
    r2: Vec<f64>,
    /// Gram matrix of `(ry, r1, r2)`.
    gram: [[f64; 3]; 3],
    counts: [usize; 3],
}

impl<'a> PairDesign<'a> {
    pub fn new(pair: &'a GenePair) -> Result<Self> {
        if !pair.is_polymorphic() {
            return Err(AcmeError::MonomorphicGenotype);
        }
        let projector = Projector::new(pair.baseline_design())?;
        Self::build(pair, Cow::Owned(projector))
    }

    /// Reuse a factorization of `[1, Z^T]` shared by many pairs.
    pub(crate) fn with_projector(pair: &'a GenePair, projector: &'a Projector) -> Result<Self> {
        if !pair.is_polymorphic() {
            return Err(AcmeError::MonomorphicGenotype);
        }
        if projector.nrows() != pair.n() || projector.ncols() != pair.p() + 1 {
            return Err(AcmeError::DimensionMismatch(format!(
                "projector is {} x {}, pair needs {} x {}",
                projector.nrows(),
                projector.ncols(),
                pair.n(),
                pair.p() + 1
            )));
        }
        Self::build(pair, Cow::Borrowed(projector))
    }

    fn build(pair: &'a GenePair, projector: Cow<'a, Projector>) -> Result<Self> {
        let n = pair.n();
        let u1: Vec<f64> = pair.s().iter().map(|&v| (v == 1) as u8 as f64).collect();
        let u2: Vec<f64> = pair.s().iter().map(|&v| (v == 2) as u8 as f64).collect();
        let mut ry = vec![0.0; n];
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        projector.residualize_into(pair.y(), &mut ry);
        let counts = pair.class_counts();
        if counts[1] > 0 {
            projector.residualize_into(&u1, &mut r1);
        }
        if counts[2] > 0 {
            projector.residualize_into(&u2, &mut r2);
        }
        let vs = [&ry, &r1, &r2];
        let mut gram = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                gram[i][j] = dot(vs[i], vs[j]);
                gram[j][i] = gram[i][j];
            }
        }
        // A response inside the baseline span leaves only round-off in ry.
        if gram[0][0] <= 1e-24 * dot(pair.y(), pair.y()) {
            gram[0] = [0.0; 3];
            gram.iter_mut().for_each(|row| row[0] = 0.0);
            ry.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(PairDesign {
            pair,
            projector,
            ry,
            r1,
            r2,
            gram,
            counts,
        })
    }

    pub fn pair(&self) -> &GenePair {
        self.pair
    }

    pub(crate) fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn class_counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn observed_classes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// SSE of the reduced model `y ~ 1 + Z` (no genotype effect).
    pub fn null_sse(&self) -> f64 {
        self.gram[0][0]
    }

    /// Log-linear allele-count slope and SSE, via Frisch-Waugh-Lovell.
    pub fn log_linear(&self) -> (f64, f64) {
        let g = &self.gram;
        // rs = r1 + 2 r2
        let sy = g[0][1] + 2.0 * g[0][2];
        let ss = g[1][1] + 4.0 * g[1][2] + 4.0 * g[2][2];
        let slope = sy / ss;
        (slope, (g[0][0] - sy * sy / ss).max(0.0))
    }

    /// SSE of the log-ANCOVA model, using only the observed genotype classes.
    pub fn ancova_sse(&self) -> f64 {
        let g = &self.gram;
        if self.observed_classes() == 3 {
            let det = g[1][1] * g[2][2] - g[1][2] * g[1][2];
            let (b1, b2) = (g[0][1], g[0][2]);
            let explained = (g[2][2] * b1 * b1 - 2.0 * g[1][2] * b1 * b2 + g[1][1] * b2 * b2) / det;
            (g[0][0] - explained).max(0.0)
        } else {
            // A single non-baseline class: its indicator spans the genotype effect.
            let k = if self.counts[2] > 0 { 2 } else { 1 };
            (g[0][0] - g[0][k] * g[0][k] / g[k][k]).max(0.0)
        }
    }

    /// Profiled ACME objective: SSE after profiling `(log beta0, gamma)`.
    pub fn profiled_sse(&self, eta: f64) -> f64 {
        let (l1, l2) = self.log_terms(eta);
        let mut sse = 0.0;
        for i in 0..self.ry.len() {
            let e = self.ry[i] - l1 * self.r1[i] - l2 * self.r2[i];
            sse += e * e;
        }
        sse
    }

    /// `(sse, d sse / d eta, d^2 sse / d eta^2)` of the profiled objective.
    pub fn profiled_derivatives(&self, eta: f64) -> (f64, f64, f64) {
        let (l1, l2) = self.log_terms(eta);
        let (d1, d2) = self.log_slopes(eta);
        let g = &self.gram;
        // e = ry - l1 r1 - l2 r2; e is orthogonal to the baseline design,
        // so e.u_k = e.r_k.
        let (mut sse, mut e1, mut e2) = (0.0, 0.0, 0.0);
        for i in 0..self.ry.len() {
            let e = self.ry[i] - l1 * self.r1[i] - l2 * self.r2[i];
            sse += e * e;
            e1 += e * self.r1[i];
            e2 += e * self.r2[i];
        }
        let grad = -2.0 * (d1 * e1 + d2 * e2);
        let proj_slope_sq = d1 * d1 * g[1][1] + 2.0 * d1 * d2 * g[1][2] + d2 * d2 * g[2][2];
        // g'' = -s^2 / (1 + eta s)^2 = -(slope)^2 per class
        let hess = 2.0 * proj_slope_sq + 2.0 * (d1 * d1 * e1 + d2 * d2 * e2);
        (sse, grad, hess)
    }

    /// `(log(1 + eta), log(1 + 2 eta))`, zero for absent classes.
    pub(crate) fn log_terms(&self, eta: f64) -> (f64, f64) {
        let l1 = if self.counts[1] > 0 { eta.ln_1p() } else { 0.0 };
        let l2 = if self.counts[2] > 0 { (2.0 * eta).ln_1p() } else { 0.0 };
        debug_assert!(l1.is_finite() && l2.is_finite(), "log of nonpositive argument at eta={eta}");
        (l1, l2)
    }

    /// `(1/(1 + eta), 2/(1 + 2 eta))`, zero for absent classes.
    pub(crate) fn log_slopes(&self, eta: f64) -> (f64, f64) {
        let d1 = if self.counts[1] > 0 { 1.0 / (1.0 + eta) } else { 0.0 };
        let d2 = if self.counts[2] > 0 { 2.0 / (1.0 + 2.0 * eta) } else { 0.0 };
        (d1, d2)
    }

    /// OLS of another response on `(1, s, Z)`, reusing the factored design:
    /// returns `(slope, sse, null_sse)`.
    pub fn regress(&self, response: &[f64]) -> Result<(f64, f64, f64)> {
        if response.len() != self.pair.n() {
            return Err(AcmeError::DimensionMismatch(format!(
                "response has {} samples, pair has {}",
                response.len(),
                self.pair.n()
            )));
        }
        let r = self.projector.residualize(response);
        let rs: Vec<f64> = self.r1.iter().zip(&self.r2).map(|(a, b)| a + 2.0 * b).collect();
        let (sy, ss, yy) = (dot(&r, &rs), dot(&rs, &rs), dot(&r, &r));
        Ok((sy / ss, (yy - sy * sy / ss).max(0.0), yy))
    }
}
