use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acme_eqtl::model::{analyze_pair, FitOptions};
use acme_eqtl::scan::{load_matrices, read_scan_records, BundlePaths};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_acme-eqtl");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn bundle_args(dir: &Path) -> Vec<String> {
    let mut args = Vec::new();
    for (flag, file) in [
        ("--genotype", "genotype.tsv"),
        ("--expression", "expression.tsv"),
        ("--covariates", "covariates.tsv"),
        ("--snp-loc", "snp_loc.tsv"),
        ("--gene-loc", "gene_loc.tsv"),
    ] {
        let path = dir.join(file);
        if path.exists() {
            args.push(flag.to_string());
            args.push(path.display().to_string());
        }
    }
    args
}

/// `[subcommand, bundle flags.., rest..]` from `bundle` and `[subcommand, rest..]`.
fn with<'a>(bundle: &'a [String], command: &[&'a str]) -> Vec<&'a str> {
    let (head, rest) = command.split_first().expect("subcommand");
    std::iter::once(*head)
        .chain(bundle.iter().map(String::as_str))
        .chain(rest.iter().copied())
        .collect()
}

fn table(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').map(str::to_owned).collect())
        .collect()
}

#[test]
fn scan_matches_golden_output_at_any_worker_count() {
    let tmp = TempDir::new().unwrap();
    let toy = bundle_args(&fixtures().join("toy"));
    let golden = fs::read(fixtures().join("toy_scan.tsv")).unwrap();
    for workers in ["1", "4"] {
        let out = tmp.path().join(format!("scan_{workers}.tsv"));
        ok(&with(&toy, &["scan", "--workers", workers, "--out", out.to_str().unwrap()]));
        assert_eq!(fs::read(&out).unwrap(), golden, "workers {workers}");
    }
}

#[test]
fn zero_window_keeps_only_snps_inside_gene_spans() {
    let tmp = TempDir::new().unwrap();
    let dir = fixtures().join("toy");
    let out = tmp.path().join("scan.tsv");
    ok(&with(&bundle_args(&dir), &["scan", "--window", "0", "--min-maf", "0", "--out", out.to_str().unwrap()]));
    let snps: HashMap<String, (String, u64)> = table(&dir.join("snp_loc.tsv"))
        .into_iter()
        .skip(1)
        .map(|r| (r[0].clone(), (r[1].clone(), r[2].parse().unwrap())))
        .collect();
    let genes: HashMap<String, (String, u64, u64)> = table(&dir.join("gene_loc.tsv"))
        .into_iter()
        .skip(1)
        .map(|r| (r[0].clone(), (r[1].clone(), r[2].parse().unwrap(), r[3].parse().unwrap())))
        .collect();
    let records = read_scan_records(&out).unwrap();
    assert!(!records.is_empty());
    for r in &records {
        let (chrom, pos) = &snps[&r.snp_id];
        let (gchrom, start, end) = &genes[&r.gene_id];
        assert!(chrom == gchrom && start <= pos && pos <= end, "{} {}", r.gene_id, r.snp_id);
    }
    let wide = tmp.path().join("wide.tsv");
    ok(&with(&bundle_args(&dir), &["scan", "--min-maf", "0", "--out", wide.to_str().unwrap()]));
    assert!(read_scan_records(&wide).unwrap().len() > records.len());
}

#[test]
fn usage_and_validation_errors_exit_2() {
    let toy = bundle_args(&fixtures().join("toy"));
    assert_eq!(run(&["scan", "--out", "x.tsv"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    let out = run(&with(&toy, &["fit", "--gene", "G00000", "--snp", "nope"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    let out = run(&["simulate", "null", "--maf", "0.9", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let tmp = TempDir::new().unwrap();
    let mut toy = bundle_args(&fixtures().join("toy"));
    toy[1] = tmp.path().join("missing.tsv").display().to_string();
    let out = run(&with(&toy, &["scan", "--out", tmp.path().join("o.tsv").to_str().unwrap()]));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.tsv"));
}

#[test]
fn fit_report_equals_library_results() {
    let dir = fixtures().join("toy");
    let out = ok(&with(&bundle_args(&dir), &["fit", "--gene", "G00001", "--snp", "rs1_0"]));
    let report: HashMap<String, String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once('\t').unwrap();
            (k.to_owned(), v.to_owned())
        })
        .collect();
    let (bundle, _) = load_matrices(&BundlePaths::in_dir(&dir)).unwrap();
    let log_expr = bundle.log_expression(true).unwrap();
    let pair = bundle
        .pair(&log_expr, bundle.gene_index("G00001").unwrap(), bundle.snp_index("rs1_0").unwrap())
        .unwrap();
    let a = analyze_pair(&pair, &FitOptions::default()).unwrap();
    assert_eq!(report["acme_eta"], a.acme.eta.to_string());
    assert_eq!(report["acme_beta0"], a.acme.beta0.to_string());
    assert_eq!(report["acme_se_eta"], a.acme.se_eta.to_string());
    assert_eq!(report["acme_p"], a.acme_test.p_value.to_string());
    assert_eq!(report["ll_p"], a.ll_test.p_value.to_string());
    assert_eq!(report["n"], pair.n().to_string());
}

/// One gene with expression `100 (1 + 0.5 s)` exactly on the log(1 + c) scale.
fn write_exact_bundle(dir: &Path) {
    let s: Vec<u8> = (0..24).map(|i| [0, 1, 2, 1][i % 4]).collect();
    let samples: Vec<String> = (0..s.len()).map(|i| format!("S{i:02}")).collect();
    let header = format!("id\t{}\n", samples.join("\t"));
    let row = |id: &str, values: Vec<String>| format!("{id}\t{}\n", values.join("\t"));
    let genotype = header.clone()
        + &row("rsA", s.iter().map(u8::to_string).collect())
        + &row("rsMono", s.iter().map(|_| "0".to_string()).collect());
    let counts = s.iter().map(|&v| (100.0 * (1.0 + 0.5 * v as f64) - 1.0).to_string()).collect();
    fs::write(dir.join("genotype.tsv"), genotype).unwrap();
    fs::write(dir.join("expression.tsv"), header + &row("G1", counts)).unwrap();
    fs::write(dir.join("snp_loc.tsv"), "snp_id\tchrom\tpos\nrsA\t1\t5000\nrsMono\t1\t6000\n").unwrap();
    fs::write(dir.join("gene_loc.tsv"), "gene_id\tchrom\tstart\tend\nG1\t1\t4000\t7000\n").unwrap();
}

#[test]
fn noiseless_bundle_gives_exact_parameters() {
    let tmp = TempDir::new().unwrap();
    write_exact_bundle(tmp.path());
    let args = bundle_args(tmp.path());
    let out = ok(&with(&args, &["fit", "--no-library-norm", "--gene", "G1", "--snp", "rsA"]));
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key}\t")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("acme_beta0") - 100.0).abs() < 1e-8);
    assert!((value("acme_eta") - 0.5).abs() < 1e-8);
    assert!(value("acme_sse") < 1e-16);
}

#[test]
fn monomorphic_snp_is_a_clean_error() {
    let tmp = TempDir::new().unwrap();
    write_exact_bundle(tmp.path());
    let out = run(&with(&bundle_args(tmp.path()), &["fit", "--gene", "G1", "--snp", "rsMono"]));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("monomorphic") && !stderr.contains("panicked"), "{stderr}");
}

#[test]
fn compare_output_is_parseable() {
    let tmp = TempDir::new().unwrap();
    let scan = tmp.path().join("scan.tsv");
    let cmp = tmp.path().join("cmp.tsv");
    ok(&with(&bundle_args(&fixtures().join("toy")), &["scan", "--out", scan.to_str().unwrap()]));
    ok(&["compare", "--acme", scan.to_str().unwrap(), "--out", cmp.to_str().unwrap()]);
    let rows = table(&cmp);
    assert_eq!(rows.len() - 1, read_scan_records(&scan).unwrap().len());
    for r in &rows[1..] {
        assert_eq!(r.len(), 8);
        for v in &r[2..] {
            assert!(v == "NA" || v.parse::<f64>().is_ok(), "{v}");
        }
    }
    let summary = table(&tmp.path().join("cmp.tsv.summary.tsv"));
    let models: Vec<&str> = summary[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(models, ["LL", "QN"]);
}

#[test]
fn manifest_records_seed_and_output_digests() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("power.tsv");
    ok(&["simulate", "power", "--replicates", "3", "--eta-grid", "0,1", "--seed", "9", "--out", out.to_str().unwrap()]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("power.tsv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    let digest = manifest["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(manifest["command_line"].as_array().unwrap().iter().any(|a| a == "power"));
}

#[test]
fn simulate_null_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let outputs: Vec<Vec<u8>> = ["1", "2"]
        .iter()
        .map(|workers| {
            let out = tmp.path().join(format!("null_{workers}.tsv"));
            ok(&[
                "simulate", "null", "--pairs", "300", "--pool-fits", "20", "--seed", "4", "--workers", workers, "--out",
                out.to_str().unwrap(),
            ]);
            let mut bytes = fs::read(&out).unwrap();
            bytes.extend(fs::read(tmp.path().join(format!("null_{workers}.tsv.summary.tsv"))).unwrap());
            bytes.extend(fs::read(tmp.path().join(format!("null_{workers}.tsv.qq.tsv"))).unwrap());
            bytes
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    let rows = table(&tmp.path().join("null_1.tsv"));
    assert_eq!(rows[0], ["acme_p", "ll_p"]);
    assert_eq!(rows.len(), 301);
}

#[test]
fn simulate_power_has_one_row_per_effect_and_model() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("power.tsv");
    ok(&[
        "simulate", "power", "--replicates", "5", "--eta-grid", "0,0.5,2", "--models", "LL,ACME,QN", "--out",
        out.to_str().unwrap(),
    ]);
    let rows = table(&out);
    assert_eq!(rows.len(), 1 + 3 * 3);
    let mut cells: Vec<(String, String)> = rows[1..].iter().map(|r| (r[0].clone(), r[2].clone())).collect();
    cells.sort();
    cells.dedup();
    assert_eq!(cells.len(), 9);
}

#[test]
fn simulate_tail_is_calibrated_at_a_moderate_level() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("tail.tsv");
    ok(&[
        "simulate", "tail", "--delta", "0", "--n", "100", "--alpha", "1e-3", "--draws", "4000", "--out",
        out.to_str().unwrap(),
    ]);
    let rows = table(&out);
    let z: f64 = rows[1][rows[0].iter().position(|c| c == "z").unwrap()].parse().unwrap();
    assert!(z.abs() <= 3.0, "z = {z}");
}

#[test]
fn bench_writes_one_row_per_fitter() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bench.tsv");
    ok(&["bench", "--pairs", "10", "--out", out.to_str().unwrap()]);
    let rows = table(&out);
    assert_eq!(rows[0], ["method", "pairs", "mean_ms", "sd_ms", "failures"]);
    let methods: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["ols", "generic_bfgs", "acme"]);
    for r in &rows[1..] {
        assert_eq!(r[1], "10");
        assert!(r[2].parse::<f64>().unwrap() > 0.0);
        assert_eq!(r[4], "0");
    }
}
