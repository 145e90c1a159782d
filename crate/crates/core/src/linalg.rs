//! Householder-QR projector used to profile linear parameters out of every fit.

use nalgebra::{DMatrix, DVector};

use crate::error::{AcmeError, Result};

/// Relative pivot size below which a design column is treated as dependent.
const RANK_TOL: f64 = 1e-10;

/// Thin QR factorization of a full-rank `n x k` design matrix.
#[derive(Debug, Clone)]
pub struct Projector {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl Projector {
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        let (n, k) = design.shape();
        if k == 0 || n < k {
            return Err(AcmeError::DimensionMismatch(format!(
                "design is {n} x {k}; need at least as many rows as columns"
            )));
        }
        let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
        if design.iter().any(|v| !v.is_finite()) {
            return Err(AcmeError::NonFinite { what: "design matrix" });
        }
        let qr = design.qr();
        let r = qr.r();
        for (j, norm) in norms.iter().enumerate() {
            let pivot = r[(j, j)].abs();
            if *norm == 0.0 || pivot <= RANK_TOL * norm {
                return Err(AcmeError::RankDeficient { column: j, pivot });
            }
        }
        Ok(Projector { q: qr.q(), r })
    }

    pub fn nrows(&self) -> usize {
        self.q.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.q.ncols()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `Q^T v`.
    pub fn q_tr_mul(&self, v: &[f64]) -> DVector<f64> {
        let k = self.q.ncols();
        let mut out = DVector::zeros(k);
        for j in 0..k {
            out[j] = self.q.column(j).iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Writes `(I - Q Q^T) v` into `out`.
    pub fn residualize_into(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
        for col in self.q.column_iter() {
            let c: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, q) in out.iter_mut().zip(col.iter()) {
                *o -= c * q;
            }
        }
    }

    pub fn residualize(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.residualize_into(v, &mut out);
        out
    }

    /// Least-squares coefficients `R^{-1} Q^T v`.
    pub fn coefficients(&self, v: &[f64]) -> DVector<f64> {
        let qtv = self.q_tr_mul(v);
        self.r
            .solve_upper_triangular(&qtv)
            .expect("R has a nonzero diagonal after the rank check")
    }
}

/// Dot product of two equal-length slices.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
