//! `acme-eqtl`: cis-eQTL scans, single-pair fits, simulations and timing runs.

mod bench;
mod data;
mod manifest;
mod simulate;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acme_eqtl::{AcmeError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "acme-eqtl", version, about = "Log-of-linear cis-eQTL effect sizes, tests and simulations")]
struct Cli {
    /// Log filter for standard error (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit every cis gene-SNP pair of a data bundle.
    Scan(data::ScanArgs),
    /// Report every model fit and test for one gene-SNP pair.
    Fit(data::FitArgs),
    /// Join ACME and baseline scan outputs and summarize their agreement.
    Compare(data::CompareArgs),
    /// Synthetic experiments.
    #[command(subcommand)]
    Simulate(simulate::SimulateCommand),
    /// Per-pair fit timings: OLS, generic quasi-Newton and the ACME fitter.
    Bench(bench::BenchArgs),
}

/// Input files of a data bundle.
#[derive(Debug, Args)]
pub struct BundleArgs {
    /// SNP x sample allele counts.
    #[arg(long)]
    genotype: PathBuf,
    /// Gene x sample read counts.
    #[arg(long)]
    expression: PathBuf,
    /// Covariate x sample matrix.
    #[arg(long)]
    covariates: Option<PathBuf>,
    /// `snp_id  chrom  pos` table.
    #[arg(long)]
    snp_loc: PathBuf,
    /// `gene_id  chrom  start  end` table.
    #[arg(long)]
    gene_loc: PathBuf,
    /// Skip library-size scaling before log(1 + c).
    #[arg(long)]
    no_library_norm: bool,
}

impl BundleArgs {
    fn paths(&self) -> acme_eqtl::scan::BundlePaths {
        acme_eqtl::scan::BundlePaths {
            genotype: self.genotype.clone(),
            expression: self.expression.clone(),
            covariates: self.covariates.clone(),
            snp_locations: self.snp_loc.clone(),
            gene_locations: self.gene_loc.clone(),
        }
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| AcmeError::io(path, e))
}

/// Run `body` against a buffered writer on `path`, attaching the path to I/O errors.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w).and_then(|_| w.flush()).map_err(|e| AcmeError::io(path, e))
}

/// `path` with `suffix` appended to its file name.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AcmeError::InvalidArgument(format!("cannot start {workers} workers: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(args) => data::scan(args),
        Command::Fit(args) => data::fit(args),
        Command::Compare(args) => data::compare(args),
        Command::Simulate(cmd) => simulate::run(cmd),
        Command::Bench(args) => bench::run(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_io() { 3 } else { 2 })
        }
    }
}
