//! Whole-genome cis scans: TSV ingestion, cis-window pair enumeration,
//! the parallel per-pair fitting engine and cross-model comparison.

mod cis;
mod compare;
mod engine;
mod io;
mod record;

use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};
use crate::model::GenePair;
use crate::transforms::library_normalize;

pub use cis::{enumerate_cis_pairs, CisIndex};
pub use compare::{compare_models, Comparison, ComparisonRow, ModelAgreement};
pub use engine::{collect_cis_scan, failures_path, run_cis_scan, scan_to_path, PairFailure, ScanModels, ScanOptions, ScanSummary};
pub use io::{load_matrices, write_bundle, AlignmentReport, BundlePaths, DroppedSample};
pub use record::{format_float, read_scan_records, write_scan_records, ScanRecord, SCAN_COLUMNS};

/// SNP position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Locus {
    pub chrom: String,
    pub pos: u64,
}

/// Gene span, inclusive at both ends.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub chrom: String,
    pub start: u64,
    pub end: u64,
}

/// `S x n` allele counts, one SNP per row.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMatrix {
    pub snp_ids: Vec<String>,
    pub positions: Vec<Locus>,
    /// Row-major `S x n`, entries in `{0, 1, 2}`.
    pub data: Vec<u8>,
    pub n: usize,
}

impl GenotypeMatrix {
    pub fn len(&self) -> usize {
        self.snp_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snp_ids.is_empty()
    }

    pub fn row(&self, snp: usize) -> &[u8] {
        &self.data[snp * self.n..(snp + 1) * self.n]
    }
}

/// `T x n` nonnegative expression counts, one gene per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    pub gene_ids: Vec<String>,
    pub spans: Vec<Span>,
    pub data: DMatrix<f64>,
}

impl ExpressionMatrix {
    pub fn len(&self) -> usize {
        self.gene_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gene_ids.is_empty()
    }
}

/// Aligned inputs of a scan; every matrix has one column per entry of `samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub samples: Vec<String>,
    pub genotypes: GenotypeMatrix,
    pub expression: ExpressionMatrix,
    pub covariate_ids: Vec<String>,
    /// `p x n`.
    pub covariates: DMatrix<f64>,
}

impl Bundle {
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn gene_index(&self, id: &str) -> Option<usize> {
        self.expression.gene_ids.iter().position(|g| g == id)
    }

    pub fn snp_index(&self, id: &str) -> Option<usize> {
        self.genotypes.snp_ids.iter().position(|s| s == id)
    }

    /// `log(1 + c)` of the counts, after library-size scaling if requested; `T x n`.
    pub fn log_expression(&self, library_scaling: bool) -> Result<DMatrix<f64>> {
        let counts = &self.expression.data;
        let scaled = if library_scaling && counts.nrows() > 0 {
            library_normalize(counts, None)?
        } else {
            counts.clone()
        };
        Ok(scaled.map(f64::ln_1p))
    }

    /// Gene `gene` (response taken from `log_expr`) paired with SNP `snp`.
    pub fn pair(&self, log_expr: &DMatrix<f64>, gene: usize, snp: usize) -> Result<GenePair> {
        if gene >= log_expr.nrows() || snp >= self.genotypes.len() {
            return Err(AcmeError::InvalidArgument(format!("no gene {gene} / SNP {snp} in the bundle")));
        }
        GenePair::new(
            log_expr.row(gene).iter().copied().collect(),
            self.genotypes.row(snp).to_vec(),
            self.covariates.clone(),
        )
    }
}
