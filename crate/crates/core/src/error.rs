use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by fits, transforms, simulations and the scan engine.
#[derive(Debug, Error)]
pub enum AcmeError {
    #[error("genotype vector is monomorphic; effect size is not identifiable")]
    MonomorphicGenotype,

    #[error("insufficient samples: n = {n} but at least {required} are needed for p = {p} covariates")]
    InsufficientSamples { n: usize, p: usize, required: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid allele count {value} at sample {index}; expected 0, 1 or 2")]
    InvalidAlleleCount { index: usize, value: u8 },

    #[error("design matrix is rank deficient (column {column}, |R_jj| = {pivot:.3e})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("ACME fit did not converge after {iterations} iterations (|gradient| = {gradient:.3e})")]
    ConvergenceFailure {
        iterations: usize,
        gradient: f64,
        best: Box<crate::model::AcmeFit>,
    },

    #[error("observed information is singular or indefinite (schur complement {schur:.3e}, relative {relative:.3e})")]
    SingularInformation { schur: f64, relative: f64 },

    #[error("no polymorphic genotype after {attempts} Hardy-Weinberg draws")]
    GenotypeDraw { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate id `{id}` in {path}")]
    DuplicateId { path: PathBuf, id: String },

    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AcmeError {
    /// True for failures caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, AcmeError::Io { .. })
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AcmeError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = AcmeError> = std::result::Result<T, E>;
