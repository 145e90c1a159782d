use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{AcmeError, Result};
use crate::linalg::Projector;
use crate::model::{analyze_design, f_test_association, minor_allele_frequency, FitOptions, GenePair, PairDesign};
use crate::transforms::quantile_normalize;

use super::cis::CisIndex;
use super::record::{write_header, ScanRecord};
use super::Bundle;

/// Baseline models computed alongside ACME, which is always fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanModels {
    pub ll: bool,
    pub qn: bool,
}

impl Default for ScanModels {
    fn default() -> Self {
        ScanModels { ll: true, qn: true }
    }
}

impl FromStr for ScanModels {
    type Err = AcmeError;

    /// Comma-separated subset of `acme,ll,qn`.
    fn from_str(s: &str) -> Result<Self> {
        let mut models = ScanModels { ll: false, qn: false };
        for token in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match token.to_ascii_lowercase().as_str() {
                "acme" => {}
                "ll" => models.ll = true,
                "qn" => models.qn = true,
                other => return Err(AcmeError::InvalidArgument(format!("unknown scan model `{other}`"))),
            }
        }
        Ok(models)
    }
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Cis window in base pairs on each side of the gene span.
    pub window: u64,
    /// Pairs whose sample MAF is below this are skipped.
    pub min_maf: f64,
    pub models: ScanModels,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Scale counts by library size before `log(1 + c)`.
    pub library_normalize: bool,
    /// Genes are processed in batches of at least this many pairs; bounds
    /// the number of results held in memory.
    pub batch_pairs: usize,
    pub fit: FitOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            window: 1_000_000,
            min_maf: 0.05,
            models: ScanModels::default(),
            workers: 0,
            library_normalize: true,
            batch_pairs: 4096,
            fit: FitOptions::default(),
        }
    }
}

/// A pair whose fit failed; the scan continues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFailure {
    pub gene_id: String,
    pub snp_id: String,
    /// Short machine-readable cause, e.g. `rank_deficient`.
    pub reason: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScanSummary {
    pub genes: usize,
    /// Cis pairs before the MAF filter.
    pub cis_pairs: usize,
    /// Pairs below the MAF threshold or monomorphic in the retained samples.
    pub skipped: usize,
    pub records: usize,
    pub failures: usize,
    /// Largest number of pair results held at once.
    pub max_buffered: usize,
}

enum Outcome {
    Record(ScanRecord),
    Failure(PairFailure),
    Skipped,
}

fn reason_code(err: &AcmeError) -> &'static str {
    match err {
        AcmeError::MonomorphicGenotype => "monomorphic",
        AcmeError::InsufficientSamples { .. } => "insufficient_samples",
        AcmeError::NonFinite { .. } => "non_finite",
        AcmeError::RankDeficient { .. } => "rank_deficient",
        AcmeError::ConvergenceFailure { .. } => "no_convergence",
        AcmeError::SingularInformation { .. } => "singular_information",
        _ => "invalid",
    }
}

/// Read-only state shared by all workers.
struct Context<'a> {
    bundle: &'a Bundle,
    opts: &'a ScanOptions,
    /// Log expression, `T x n`.
    log_expr: DMatrix<f64>,
    projector: Option<Projector>,
    index: CisIndex,
}

impl Context<'_> {
    fn gene(&self, g: usize) -> Vec<Outcome> {
        let bundle = self.bundle;
        let gene_id = &bundle.expression.gene_ids[g];
        let snps = self.index.snps_near(&bundle.expression.spans[g], self.opts.window);
        let y: Vec<f64> = self.log_expr.row(g).iter().copied().collect();
        let qn = self.opts.models.qn.then(|| quantile_normalize(&y));
        snps.iter()
            .map(|&k| {
                let snp_id = &bundle.genotypes.snp_ids[k];
                let s = bundle.genotypes.row(k);
                let maf = minor_allele_frequency(s);
                if maf < self.opts.min_maf || s.iter().all(|&v| v == s[0]) {
                    return Outcome::Skipped;
                }
                match self.pair(&y, s, maf, qn.as_deref(), gene_id, snp_id) {
                    Ok(rec) => Outcome::Record(rec),
                    Err(err) => Outcome::Failure(PairFailure {
                        gene_id: gene_id.clone(),
                        snp_id: snp_id.clone(),
                        reason: reason_code(&err),
                        message: err.to_string(),
                    }),
                }
            })
            .collect()
    }

    fn pair(&self, y: &[f64], s: &[u8], maf: f64, qn: Option<&[f64]>, gene_id: &str, snp_id: &str) -> Result<ScanRecord> {
        let pair = GenePair::new(y.to_vec(), s.to_vec(), self.bundle.covariates.clone())?;
        let projector = self.projector.as_ref().ok_or(AcmeError::RankDeficient {
            column: 0,
            pivot: f64::NAN,
        });
        let design = PairDesign::with_projector(&pair, projector?)?;
        let analysis = analyze_design(&design, &self.opts.fit)?;
        let (n, p) = (pair.n(), pair.p());
        let (qn_beta, qn_p) = match qn {
            Some(qn) => {
                let (slope, sse, null_sse) = design.regress(qn)?;
                (Some(slope), Some(f_test_association(sse, null_sse, n, p)?.p_value))
            }
            None => (None, None),
        };
        let ll = self.opts.models.ll;
        Ok(ScanRecord {
            gene_id: gene_id.to_owned(),
            snp_id: snp_id.to_owned(),
            n_used: n,
            maf,
            beta0: analysis.acme.beta0,
            eta: analysis.acme.eta,
            se_eta: analysis.acme.se_eta,
            f_stat: analysis.acme_test.f_stat,
            p_value: analysis.acme_test.p_value,
            gof_p: analysis.acme_gof.map(|t| t.p_value),
            qn_p,
            ll_eta: ll.then(|| analysis.ll_slope.exp_m1()),
            ll_p: ll.then_some(analysis.ll_test.p_value),
            qn_beta,
            converged: analysis.acme.converged,
        })
    }
}

/// Core loop: per-gene work in parallel, results handed to `emit` in
/// canonical (gene, position) order one batch at a time.
fn scan_with(
    bundle: &Bundle,
    opts: &ScanOptions,
    mut emit: impl FnMut(Outcome) -> Result<()>,
) -> Result<ScanSummary> {
    if !(0.0..=0.5).contains(&opts.min_maf) {
        return Err(AcmeError::InvalidArgument(format!("min_maf {} outside [0, 0.5]", opts.min_maf)));
    }
    let log_expr = bundle.log_expression(opts.library_normalize)?;
    let n = bundle.n();
    let p = bundle.covariates.nrows();
    let baseline = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { bundle.covariates[(j - 1, i)] });
    // A singular baseline design fails every pair; report it per pair.
    let projector = match Projector::new(baseline) {
        Ok(p) => Some(p),
        Err(err) => {
            log::warn!("baseline design [1, Z] unusable: {err}");
            None
        }
    };
    let ctx = Context {
        bundle,
        opts,
        log_expr,
        projector,
        index: CisIndex::new(&bundle.genotypes.positions),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| AcmeError::InvalidArgument(format!("cannot start {} workers: {e}", opts.workers)))?;

    let mut summary = ScanSummary {
        genes: bundle.expression.len(),
        ..ScanSummary::default()
    };
    let batch_pairs = opts.batch_pairs.max(1);
    let mut batch = Vec::new();
    let mut pending = 0;
    let genes = bundle.expression.len();
    for g in 0..genes {
        let size = ctx.index.snps_near(&bundle.expression.spans[g], opts.window).len();
        summary.cis_pairs += size;
        batch.push(g);
        pending += size;
        if pending < batch_pairs && g + 1 < genes {
            continue;
        }
        let results: Vec<Vec<Outcome>> = pool.install(|| batch.par_iter().map(|&g| ctx.gene(g)).collect());
        summary.max_buffered = summary.max_buffered.max(pending);
        for outcome in results.into_iter().flatten() {
            match &outcome {
                Outcome::Record(_) => summary.records += 1,
                Outcome::Failure(_) => summary.failures += 1,
                Outcome::Skipped => summary.skipped += 1,
            }
            emit(outcome)?;
        }
        batch.clear();
        pending = 0;
    }
    Ok(summary)
}

/// Scan every cis pair of `bundle`, writing records to `out` and failures
/// to `failures` (both with a header line). Output is identical for any
/// worker count.
pub fn run_cis_scan(
    bundle: &Bundle,
    opts: &ScanOptions,
    out: &mut dyn Write,
    failures: &mut dyn Write,
) -> Result<ScanSummary> {
    let io = |e| AcmeError::io(Path::new("<scan output>"), e);
    write_header(out).map_err(io)?;
    writeln!(failures, "gene_id\tsnp_id\treason\tmessage").map_err(io)?;
    let summary = scan_with(bundle, opts, |outcome| {
        match outcome {
            Outcome::Record(rec) => rec.write_row(out),
            Outcome::Failure(f) => writeln!(
                failures,
                "{}\t{}\t{}\t{}",
                f.gene_id,
                f.snp_id,
                f.reason,
                f.message.replace(['\t', '\n'], " ")
            ),
            Outcome::Skipped => Ok(()),
        }
        .map_err(io)
    })?;
    out.flush().map_err(io)?;
    failures.flush().map_err(io)?;
    Ok(summary)
}

/// [`run_cis_scan`] into `out` and the sidecar `<out>.failures.tsv`.
pub fn scan_to_path(bundle: &Bundle, opts: &ScanOptions, out: &Path) -> Result<ScanSummary> {
    let failures_path = failures_path(out);
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| AcmeError::io(p, e));
    let mut w = create(out)?;
    let mut f = create(&failures_path)?;
    run_cis_scan(bundle, opts, &mut w, &mut f).map_err(|err| match err {
        AcmeError::Io { source, .. } => AcmeError::io(out, source),
        other => other,
    })
}

pub fn failures_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".failures.tsv");
    out.with_file_name(name)
}

/// Scan into memory.
pub fn collect_cis_scan(bundle: &Bundle, opts: &ScanOptions) -> Result<(Vec<ScanRecord>, Vec<PairFailure>, ScanSummary)> {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let summary = scan_with(bundle, opts, |outcome| {
        match outcome {
            Outcome::Record(r) => records.push(r),
            Outcome::Failure(f) => failures.push(f),
            Outcome::Skipped => {}
        }
        Ok(())
    })?;
    Ok((records, failures, summary))
}
