use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use acme_eqtl::scan::{format_float, write_bundle, BundlePaths};
use acme_eqtl::simulation::{
    acme_residual_pool, estimate_tail_type1, qq_data, run_null_calibration, run_power_experiment, simulate_bundle,
    Model, Proposal, SimConfig,
};
use acme_eqtl::{AcmeError, Result};
use clap::{Args, Subcommand};

use crate::manifest::write_manifest;
use crate::{sidecar, thread_pool, write_file};

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Null pairs with resampled ACME residuals; p-values and genomic inflation.
    Null(NullArgs),
    /// Mean -log10 p and predictions per (eta, model) on simulated ACME data.
    Power(PowerArgs),
    /// Importance-sampling estimates of far-tail Type-I error.
    Tail(TailArgs),
    /// Write a synthetic scan bundle (one causal SNP per gene) into the `--out` directory.
    Bundle(BundleArgs),
}

/// Parameters shared by every experiment; unset values take the
/// experiment's default.
#[derive(Debug, Args)]
pub struct SimArgs {
    /// Samples per pair.
    #[arg(long)]
    n: Option<usize>,
    /// Covariates per pair.
    #[arg(long)]
    p: Option<usize>,
    /// Minor allele frequency of Hardy-Weinberg genotypes.
    #[arg(long)]
    maf: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    beta0: f64,
    /// Standard deviation of the log-scale errors.
    #[arg(long, default_value_t = 1.0)]
    sigma_eps: f64,
    /// Standard deviation of the covariate coefficients.
    #[arg(long, default_value_t = 1.0)]
    sigma_gamma: f64,
    /// Skew-normal delta of the errors (0: normal).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    /// Comma-separated effect sizes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eta_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (0: one per core); results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output TSV.
    #[arg(long)]
    out: PathBuf,
}

impl SimArgs {
    fn config(&self, n: usize, p: usize, maf: f64) -> Result<SimConfig> {
        let defaults = SimConfig::default();
        let config = SimConfig {
            n: self.n.unwrap_or(n),
            p: self.p.unwrap_or(p),
            beta0: self.beta0,
            eta_grid: self.eta_grid.clone().unwrap_or(defaults.eta_grid),
            maf: self.maf.unwrap_or(maf),
            sigma_eps: self.sigma_eps,
            sigma_gamma: self.sigma_gamma,
            delta: self.delta,
            replicates: defaults.replicates,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct NullArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Null pairs to simulate.
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
    /// Simulated ACME fits whose residuals form the resampling pool.
    #[arg(long, default_value_t = 1_000)]
    pool_fits: usize,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    /// Comma-separated subset of RAW,QN,LL,ANCOVA,ACME.
    #[arg(long, value_delimiter = ',', default_value = "RAW,QN,LL,ANCOVA,ACME")]
    models: Vec<Model>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Comma-separated nominal levels.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-4,1e-6")]
    alpha: Vec<f64>,
    /// Proposal draws per level.
    #[arg(long, default_value_t = 20_000)]
    draws: usize,
    /// `boundary` (shift to the rejection boundary), `null` (plain Monte
    /// Carlo) or a fixed shift size in error standard deviations.
    #[arg(long, default_value = "boundary")]
    proposal: String,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long, default_value_t = 20)]
    genes: usize,
    #[arg(long, default_value_t = 5)]
    snps_per_gene: usize,
}

pub fn run(cmd: SimulateCommand) -> Result<()> {
    let started = Instant::now();
    let workers = match &cmd {
        SimulateCommand::Null(a) => a.sim.workers,
        SimulateCommand::Power(a) => a.sim.workers,
        SimulateCommand::Tail(a) => a.sim.workers,
        SimulateCommand::Bundle(a) => a.sim.workers,
    };
    let pool = thread_pool(workers)?;
    let (sim, outputs) = pool.install(|| match &cmd {
        SimulateCommand::Null(a) => null(a).map(|o| (&a.sim, o)),
        SimulateCommand::Power(a) => power(a).map(|o| (&a.sim, o)),
        SimulateCommand::Tail(a) => tail(a).map(|o| (&a.sim, o)),
        SimulateCommand::Bundle(a) => bundle(a).map(|o| (&a.sim, o)),
    })?;
    write_manifest(&sim.out, started, Some(sim.seed), workers, &[], &outputs)
}

fn null(args: &NullArgs) -> Result<Vec<PathBuf>> {
    let config = args.sim.config(105, 19, 0.25)?;
    let pool = acme_residual_pool(&config, args.pool_fits)?;
    let cal = run_null_calibration(&config, &pool, args.pairs)?;
    let out = &args.sim.out;
    write_file(out, |w| {
        writeln!(w, "acme_p\tll_p")?;
        for (a, l) in cal.acme_p.iter().zip(&cal.ll_p) {
            writeln!(w, "{}\t{}", format_float(*a), format_float(*l))?;
        }
        Ok(())
    })?;
    let summary = sidecar(out, ".summary.tsv");
    write_file(&summary, |w| {
        writeln!(w, "statistic\tvalue")?;
        writeln!(w, "pairs\t{}", cal.acme_p.len())?;
        writeln!(w, "failures\t{}", cal.failures)?;
        writeln!(w, "lambda_acme\t{}", format_float(cal.lambda_acme))?;
        writeln!(w, "lambda_ll\t{}", format_float(cal.lambda_ll))
    })?;
    let qq = sidecar(out, ".qq.tsv");
    let qq_acme = qq_data(&cal.acme_p)?;
    let qq_ll = qq_data(&cal.ll_p)?;
    write_file(&qq, |w| {
        writeln!(w, "model\texpected\tobserved\tband_low\tband_high")?;
        for (model, points) in [("ACME", &qq_acme), ("LL", &qq_ll)] {
            for q in points {
                writeln!(
                    w,
                    "{model}\t{}\t{}\t{}\t{}",
                    format_float(q.expected),
                    format_float(q.observed),
                    format_float(q.band_low),
                    format_float(q.band_high)
                )?;
            }
        }
        Ok(())
    })?;
    log::info!("lambda ACME {:.4}, LL {:.4}", cal.lambda_acme, cal.lambda_ll);
    Ok(vec![out.clone(), summary, qq])
}

fn power(args: &PowerArgs) -> Result<Vec<PathBuf>> {
    let mut config = args.sim.config(105, 19, 0.25)?;
    config.replicates = args.replicates;
    config.validate()?;
    let table = run_power_experiment(&config, &args.models)?;
    let out = &args.sim.out;
    let pair = |x: Option<(f64, f64)>| match x {
        Some((m, s)) => format!("{}\t{}", format_float(m), format_float(s)),
        None => "NA\tNA".into(),
    };
    write_file(out, |w| {
        writeln!(
            w,
            "eta\tw\tmodel\treplicates\tfailures\tmean_neg_log10_p\tsd_neg_log10_p\tpred1_mean\tpred1_sd\tpred2_mean\tpred2_sd"
        )?;
        for r in &table.rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                format_float(r.eta),
                format_float(r.w),
                r.model,
                r.replicates,
                r.failures,
                format_float(r.mean_neg_log10_p),
                format_float(r.sd_neg_log10_p),
                pair(r.pred1),
                pair(r.pred2)
            )?;
        }
        Ok(())
    })?;
    Ok(vec![out.clone()])
}

fn parse_proposal(text: &str) -> Result<Proposal> {
    match text.to_ascii_lowercase().as_str() {
        "boundary" => Ok(Proposal::Boundary),
        "null" => Ok(Proposal::Null),
        other => other
            .parse::<f64>()
            .map(Proposal::Shift)
            .map_err(|_| AcmeError::InvalidArgument(format!("proposal `{text}`: expected boundary, null or a number"))),
    }
}

fn tail(args: &TailArgs) -> Result<Vec<PathBuf>> {
    let config = args.sim.config(250, 0, 0.1)?;
    let estimates = estimate_tail_type1(&config, &args.alpha, parse_proposal(&args.proposal)?, args.draws)?;
    let out = &args.sim.out;
    write_file(out, |w| {
        writeln!(
            w,
            "alpha\testimate\tmc_se\tratio\tz\tn_effective\tflagged\tshift\tdraws\trejections\tfailures"
        )?;
        for e in &estimates {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                format_float(e.alpha),
                format_float(e.estimate),
                format_float(e.mc_se),
                format_float(e.estimate / e.alpha),
                format_float((e.estimate - e.alpha) / e.mc_se),
                format_float(e.n_effective),
                e.flagged,
                format_float(e.shift),
                e.draws,
                e.rejections,
                e.failures
            )?;
        }
        Ok(())
    })?;
    Ok(vec![out.clone()])
}

fn bundle(args: &BundleArgs) -> Result<Vec<PathBuf>> {
    let config = args.sim.config(105, 3, 0.25)?;
    let etas: Vec<f64> = (0..args.genes)
        .map(|g| config.eta_grid[g % config.eta_grid.len()])
        .collect();
    let b = simulate_bundle(&config, &etas, args.snps_per_gene)?;
    // `--out` is a directory holding the conventional file names.
    let dir = &args.sim.out;
    std::fs::create_dir_all(dir).map_err(|e| AcmeError::io(dir, e))?;
    let mut paths = BundlePaths::in_dir(dir);
    if config.p == 0 {
        paths.covariates = None;
    }
    write_bundle(&b, &paths)?;
    let truth = dir.join("truth.tsv");
    write_file(&truth, |w| {
        writeln!(w, "gene_id\tcausal_snp_id\teta")?;
        for (g, eta) in etas.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", b.expression.gene_ids[g], b.genotypes.snp_ids[g * args.snps_per_gene], eta)?;
        }
        Ok(())
    })?;
    let mut outputs: Vec<PathBuf> = paths.all().into_iter().map(PathBuf::from).collect();
    outputs.push(truth);
    Ok(outputs)
}
