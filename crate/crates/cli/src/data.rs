use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use acme_eqtl::model::{analyze_pair, fit_log_ancova, fit_log_linear, predict_expression, FitOptions};
use acme_eqtl::scan::{
    compare_models, failures_path, format_float, load_matrices, read_scan_records, scan_to_path, ScanModels, ScanOptions,
};
use acme_eqtl::{AcmeError, Result};
use clap::Args;

use crate::manifest::write_manifest;
use crate::{sidecar, write_file, BundleArgs};

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    bundle: BundleArgs,
    /// Cis window in base pairs on each side of the gene span.
    #[arg(long, default_value_t = 1_000_000)]
    window: u64,
    /// Skip pairs whose sample minor allele frequency is below this.
    #[arg(long, default_value_t = 0.05)]
    min_maf: f64,
    /// Models to report: comma-separated subset of acme,ll,qn (ACME is always fitted).
    #[arg(long, default_value = "acme,ll,qn")]
    models: String,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output TSV; failures go to `<out>.failures.tsv`.
    #[arg(long)]
    out: PathBuf,
}

pub fn scan(args: ScanArgs) -> Result<()> {
    let started = Instant::now();
    let paths = args.bundle.paths();
    let (bundle, report) = load_matrices(&paths)?;
    for d in &report.dropped {
        log::warn!("sample {} of {} is missing elsewhere; dropped", d.sample, d.file.display());
    }
    log::info!(
        "{} samples, {} genes, {} SNPs, {} covariates",
        bundle.n(),
        bundle.expression.len(),
        bundle.genotypes.len(),
        bundle.covariates.nrows()
    );
    let opts = ScanOptions {
        window: args.window,
        min_maf: args.min_maf,
        models: args.models.parse::<ScanModels>()?,
        workers: args.workers,
        library_normalize: !args.bundle.no_library_norm,
        ..ScanOptions::default()
    };
    let summary = scan_to_path(&bundle, &opts, &args.out)?;
    log::info!("{summary:?}");
    if summary.failures > 0 {
        log::warn!("{} pairs failed; see {}", summary.failures, failures_path(&args.out).display());
    }
    let inputs: Vec<PathBuf> = paths.all().into_iter().map(PathBuf::from).collect();
    write_manifest(
        &args.out,
        started,
        None,
        args.workers,
        &inputs,
        &[args.out.clone(), failures_path(&args.out)],
    )
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    bundle: BundleArgs,
    #[arg(long)]
    gene: String,
    #[arg(long)]
    snp: String,
    /// Write the report here (with a manifest) instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn full(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        format!("{x}")
    }
}

/// `quantity  value` lines for every fit and test of one pair.
pub fn fit_report(bundle_args: &BundleArgs, gene: &str, snp: &str) -> Result<Vec<(String, String)>> {
    let (bundle, _) = load_matrices(&bundle_args.paths())?;
    let g = bundle.gene_index(gene).ok_or_else(|| AcmeError::UnknownId {
        kind: "gene",
        id: gene.to_owned(),
    })?;
    let k = bundle.snp_index(snp).ok_or_else(|| AcmeError::UnknownId {
        kind: "SNP",
        id: snp.to_owned(),
    })?;
    let log_expr = bundle.log_expression(!bundle_args.no_library_norm)?;
    let pair = bundle.pair(&log_expr, g, k)?;
    let a = analyze_pair(&pair, &FitOptions::default())?;
    let ll = fit_log_linear(&pair)?;
    let ancova = fit_log_ancova(&pair)?;

    let mut rows: Vec<(String, String)> = Vec::new();
    let mut put = |key: &str, value: String| rows.push((key.to_owned(), value));
    put("gene_id", gene.to_owned());
    put("snp_id", snp.to_owned());
    put("n", pair.n().to_string());
    put("p", pair.p().to_string());
    put("maf", full(pair.maf()));
    for (s, count) in pair.class_counts().iter().enumerate() {
        put(&format!("class_{s}_count"), count.to_string());
    }

    let fit = &a.acme;
    put("acme_beta0", full(fit.beta0));
    put("acme_eta", full(fit.eta));
    put("acme_beta1", full(fit.beta1()));
    put("acme_se_eta", full(fit.se_eta));
    put("acme_sigma2", full(fit.sigma2));
    put("acme_sse", full(fit.sse));
    put("acme_iterations", fit.iterations.to_string());
    put("acme_converged", fit.converged.to_string());
    for (j, (id, g)) in bundle.covariate_ids.iter().zip(&fit.gamma).enumerate() {
        put(&format!("acme_gamma_{j}_{id}"), full(*g));
    }
    for s in 0..3u8 {
        put(&format!("acme_pred_{s}"), full(predict_expression(fit, s)?));
    }
    for (name, test) in [("acme", &a.acme_test), ("ll", &a.ll_test), ("ancova", &a.ancova_test)] {
        put(&format!("{name}_f"), full(test.f_stat));
        put(&format!("{name}_df1"), test.df1.to_string());
        put(&format!("{name}_df2"), test.df2.to_string());
        put(&format!("{name}_p"), full(test.p_value));
    }

    let (t0, t1) = (ll.coefficients[0], ll.coefficients[1]);
    put("ll_theta0", full(t0));
    put("ll_theta1", full(t1));
    put("ll_sse", full(ll.sse));
    for s in 0..3 {
        put(&format!("ll_pred_{s}"), full((t0 + t1 * s as f64).exp()));
    }
    for s in 0..3 {
        put(&format!("ancova_alpha{s}"), full(ancova.coefficients[s]));
    }
    put("ancova_sse", full(ancova.sse));
    put("ancova_collapsed", ancova.collapsed.to_string());
    for s in 0..3 {
        put(&format!("ancova_pred_{s}"), full(ancova.coefficients[s].exp()));
    }
    for (name, gof) in [("acme_gof", &a.acme_gof), ("ll_gof", &a.ll_gof)] {
        put(&format!("{name}_f"), gof.map_or("NA".into(), |t| full(t.f_stat)));
        put(&format!("{name}_p"), gof.map_or("NA".into(), |t| full(t.p_value)));
    }
    Ok(rows)
}

pub fn fit(args: FitArgs) -> Result<()> {
    let started = Instant::now();
    let rows = fit_report(&args.bundle, &args.gene, &args.snp)?;
    let render = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "quantity\tvalue")?;
        for (k, v) in &rows {
            writeln!(w, "{k}\t{v}")?;
        }
        Ok(())
    };
    match &args.out {
        Some(out) => {
            write_file(out, |w| render(w))?;
            let inputs: Vec<PathBuf> = args.bundle.paths().all().into_iter().map(PathBuf::from).collect();
            write_manifest(out, started, None, 1, &inputs, std::slice::from_ref(out))
        }
        None => {
            let stdout = std::io::stdout();
            render(&mut stdout.lock()).map_err(|e| AcmeError::io("<stdout>", e))
        }
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Scan output supplying the ACME estimates.
    #[arg(long)]
    acme: PathBuf,
    /// Scan output supplying the LL/QN estimates (defaults to the ACME file).
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Joined per-pair table; the summary goes to `<out>.summary.tsv`.
    #[arg(long)]
    out: PathBuf,
}

pub fn compare(args: CompareArgs) -> Result<()> {
    let started = Instant::now();
    let acme = read_scan_records(&args.acme)?;
    let baseline_path = args.baseline.clone().unwrap_or_else(|| args.acme.clone());
    let baseline = if args.baseline.is_some() {
        read_scan_records(&baseline_path)?
    } else {
        acme.clone()
    };
    let cmp = compare_models(&acme, &baseline)?;
    let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_owned(), format_float);
    write_file(&args.out, |w| {
        writeln!(w, "gene_id\tsnp_id\tw_acme\tacme_p\tll_effect\tll_p\tqn_effect\tqn_p")?;
        for r in &cmp.rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.gene_id,
                r.snp_id,
                format_float(r.w_acme),
                format_float(r.acme_p),
                opt(r.ll_effect),
                opt(r.ll_p),
                opt(r.qn_effect),
                opt(r.qn_p)
            )?;
        }
        Ok(())
    })?;
    let summary = sidecar(&args.out, ".summary.tsv");
    write_file(&summary, |w| {
        writeln!(w, "model\tpairs\teffect_spearman\tsign_agreement\tp_spearman")?;
        for a in &cmp.agreement {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                a.model,
                a.pairs,
                format_float(a.effect_spearman),
                format_float(a.sign_agreement),
                format_float(a.p_spearman)
            )?;
        }
        Ok(())
    })?;
    let mut inputs = vec![args.acme.clone()];
    if args.baseline.is_some() {
        inputs.push(baseline_path);
    }
    write_manifest(&args.out, started, None, 1, &inputs, &[args.out.clone(), summary])
}
