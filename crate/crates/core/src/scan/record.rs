use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{AcmeError, Result};

/// Output columns, in order.
pub const SCAN_COLUMNS: [&str; 15] = [
    "gene_id", "snp_id", "n_used", "maf", "beta0", "eta", "se_eta", "f_stat", "p_value", "gof_p", "qn_p", "ll_eta",
    "ll_p", "qn_beta", "converged",
];

/// One scanned gene-SNP pair.
///
/// `gof_p` is missing when the ANCOVA alternative collapses (a genotype
/// class is absent); the LL and QN fields are missing unless those models
/// were selected.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub gene_id: String,
    pub snp_id: String,
    pub n_used: usize,
    pub maf: f64,
    pub beta0: f64,
    pub eta: f64,
    pub se_eta: f64,
    pub f_stat: f64,
    pub p_value: f64,
    pub gof_p: Option<f64>,
    pub qn_p: Option<f64>,
    /// LL effect on the ACME scale, `exp(theta1) - 1`.
    pub ll_eta: Option<f64>,
    pub ll_p: Option<f64>,
    /// QN regression slope.
    pub qn_beta: Option<f64>,
    pub converged: bool,
}

/// `%g`-style rendering with 6 significant digits; non-finite values print
/// as `inf`, `-inf` or `nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn optional(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), format_float)
}

impl ScanRecord {
    pub(crate) fn write_row(&self, w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.gene_id,
            self.snp_id,
            self.n_used,
            format_float(self.maf),
            format_float(self.beta0),
            format_float(self.eta),
            format_float(self.se_eta),
            format_float(self.f_stat),
            format_float(self.p_value),
            optional(self.gof_p),
            optional(self.qn_p),
            optional(self.ll_eta),
            optional(self.ll_p),
            optional(self.qn_beta),
            self.converged,
        )
    }

    fn parse(fields: &[&str]) -> std::result::Result<Self, String> {
        if fields.len() != SCAN_COLUMNS.len() {
            return Err(format!("expected {} fields, found {}", SCAN_COLUMNS.len(), fields.len()));
        }
        let num = |k: usize| -> std::result::Result<f64, String> {
            fields[k]
                .parse()
                .map_err(|_| format!("column {}: `{}` is not a number", SCAN_COLUMNS[k], fields[k]))
        };
        let opt = |k: usize| -> std::result::Result<Option<f64>, String> {
            if fields[k] == "NA" {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        Ok(ScanRecord {
            gene_id: fields[0].to_owned(),
            snp_id: fields[1].to_owned(),
            n_used: fields[2]
                .parse()
                .map_err(|_| format!("column n_used: `{}` is not a count", fields[2]))?,
            maf: num(3)?,
            beta0: num(4)?,
            eta: num(5)?,
            se_eta: num(6)?,
            f_stat: num(7)?,
            p_value: num(8)?,
            gof_p: opt(9)?,
            qn_p: opt(10)?,
            ll_eta: opt(11)?,
            ll_p: opt(12)?,
            qn_beta: opt(13)?,
            converged: fields[14]
                .parse()
                .map_err(|_| format!("column converged: `{}` is not true/false", fields[14]))?,
        })
    }
}

pub(crate) fn write_header(w: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
    writeln!(w, "{}", SCAN_COLUMNS.join("\t"))
}

/// Write records as a scan TSV, header included.
pub fn write_scan_records(w: &mut impl Write, records: &[ScanRecord]) -> std::io::Result<()> {
    write_header(w)?;
    for r in records {
        r.write_row(w)?;
    }
    Ok(())
}

/// Read a scan TSV written by this crate.
pub fn read_scan_records(path: &Path) -> Result<Vec<ScanRecord>> {
    let file = File::open(path).map_err(|e| AcmeError::io(path, e))?;
    let parse_error = |line, message| AcmeError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| AcmeError::io(path, e))?
        .ok_or_else(|| parse_error(1, "empty file".into()))?;
    if header != SCAN_COLUMNS.join("\t") {
        return Err(parse_error(1, "header does not match the scan output columns".into()));
    }
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| AcmeError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        records.push(ScanRecord::parse(&fields).map_err(|m| parse_error(k + 2, m))?);
    }
    Ok(records)
}
