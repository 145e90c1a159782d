use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};

use super::{Bundle, ExpressionMatrix, GenotypeMatrix, Locus, Span};

/// Input files of a scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundlePaths {
    pub genotype: PathBuf,
    pub expression: PathBuf,
    pub covariates: Option<PathBuf>,
    pub snp_locations: PathBuf,
    pub gene_locations: PathBuf,
}

impl BundlePaths {
    /// Conventional file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        BundlePaths {
            genotype: dir.join("genotype.tsv"),
            expression: dir.join("expression.tsv"),
            covariates: Some(dir.join("covariates.tsv")),
            snp_locations: dir.join("snp_loc.tsv"),
            gene_locations: dir.join("gene_loc.tsv"),
        }
    }

    /// Every input path, in a fixed order.
    pub fn all(&self) -> Vec<&Path> {
        let mut paths = vec![self.genotype.as_path(), self.expression.as_path()];
        if let Some(c) = &self.covariates {
            paths.push(c);
        }
        paths.push(&self.snp_locations);
        paths.push(&self.gene_locations);
        paths
    }
}

/// A sample present in one input but missing from another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedSample {
    pub file: PathBuf,
    pub sample: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignmentReport {
    pub dropped: Vec<DroppedSample>,
}

/// A sample-by-column matrix file: header of sample ids, one id-prefixed row per feature.
struct RawMatrix {
    samples: Vec<String>,
    ids: Vec<String>,
    /// Row-major cell text positions are not kept; rows are parsed eagerly.
    rows: Vec<Vec<String>>,
    /// Line numbers of the rows (1-based).
    lines: Vec<usize>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| AcmeError::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: String) -> AcmeError {
    AcmeError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

fn read_raw_matrix(path: &Path) -> Result<RawMatrix> {
    let mut lines = open(path)?.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| AcmeError::io(path, e))?,
        None => return Err(parse_error(path, 1, "empty file; expected a header of sample ids".into())),
    };
    let samples: Vec<String> = header.trim_end_matches('\r').split('\t').skip(1).map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for s in &samples {
        if !seen.insert(s.as_str()) {
            return Err(AcmeError::DuplicateId {
                path: path.to_path_buf(),
                id: s.clone(),
            });
        }
    }
    let mut raw = RawMatrix {
        samples,
        ids: Vec::new(),
        rows: Vec::new(),
        lines: Vec::new(),
    };
    let mut ids = HashSet::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let line = line.map_err(|e| AcmeError::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().to_owned();
        let cells: Vec<String> = fields.map(str::to_owned).collect();
        if cells.len() != raw.samples.len() {
            return Err(parse_error(
                path,
                line_no,
                format!("row `{id}` has {} values for {} samples", cells.len(), raw.samples.len()),
            ));
        }
        if !ids.insert(id.clone()) {
            return Err(AcmeError::DuplicateId {
                path: path.to_path_buf(),
                id,
            });
        }
        raw.ids.push(id);
        raw.rows.push(cells);
        raw.lines.push(line_no);
    }
    Ok(raw)
}

/// Location rows after a header line: `id` followed by `fields` columns.
fn read_locations(path: &Path, fields: usize) -> Result<HashMap<String, (usize, Vec<String>)>> {
    let mut out = HashMap::new();
    for (k, line) in open(path)?.lines().enumerate().skip(1) {
        let line_no = k + 1;
        let line = line.map_err(|e| AcmeError::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != fields + 1 {
            return Err(parse_error(
                path,
                line_no,
                format!("expected {} tab-separated fields, found {}", fields + 1, cols.len()),
            ));
        }
        let id = cols[0].to_owned();
        let rest = cols[1..].iter().map(|c| (*c).to_owned()).collect();
        if out.insert(id.clone(), (line_no, rest)).is_some() {
            return Err(AcmeError::DuplicateId {
                path: path.to_path_buf(),
                id,
            });
        }
    }
    Ok(out)
}

fn parse_coordinate(path: &Path, line: usize, text: &str) -> Result<u64> {
    text.parse()
        .map_err(|_| parse_error(path, line, format!("invalid coordinate `{text}`")))
}

/// Load and align a scan bundle.
///
/// Samples are intersected across the matrices and put in sorted order;
/// samples missing from any matrix are dropped and reported. Genotype
/// entries must be exactly `0`, `1` or `2`; expression values must be finite
/// and nonnegative. Every SNP and gene needs a location row.
pub fn load_matrices(paths: &BundlePaths) -> Result<(Bundle, AlignmentReport)> {
    let geno = read_raw_matrix(&paths.genotype)?;
    let expr = read_raw_matrix(&paths.expression)?;
    let cov = paths.covariates.as_deref().map(read_raw_matrix).transpose()?;

    let mut inputs: Vec<(&Path, &RawMatrix)> = vec![(&paths.genotype, &geno), (&paths.expression, &expr)];
    if let (Some(path), Some(cov)) = (&paths.covariates, &cov) {
        inputs.push((path, cov));
    }
    let mut common: HashSet<&str> = geno.samples.iter().map(String::as_str).collect();
    for (_, m) in &inputs[1..] {
        let here: HashSet<&str> = m.samples.iter().map(String::as_str).collect();
        common.retain(|s| here.contains(s));
    }
    let mut samples: Vec<String> = common.iter().map(|s| (*s).to_owned()).collect();
    samples.sort();
    if samples.is_empty() {
        return Err(AcmeError::InvalidArgument("no sample is shared by all input matrices".into()));
    }
    let mut report = AlignmentReport::default();
    for (path, m) in &inputs {
        for s in &m.samples {
            if !common.contains(s.as_str()) {
                report.dropped.push(DroppedSample {
                    file: path.to_path_buf(),
                    sample: s.clone(),
                });
            }
        }
    }
    let columns = |m: &RawMatrix| -> Vec<usize> {
        let index: HashMap<&str, usize> = m.samples.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
        samples.iter().map(|s| index[s.as_str()]).collect()
    };
    let n = samples.len();

    // Genotypes.
    let snp_loc = read_locations(&paths.snp_locations, 2)?;
    let cols = columns(&geno);
    let mut data = Vec::with_capacity(geno.ids.len() * n);
    let mut positions = Vec::with_capacity(geno.ids.len());
    for (r, id) in geno.ids.iter().enumerate() {
        for &c in &cols {
            let cell = geno.rows[r][c].as_str();
            let v = match cell {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                _ => {
                    return Err(parse_error(
                        &paths.genotype,
                        geno.lines[r],
                        format!(
                            "SNP `{id}`, sample `{}`: genotype `{cell}` is not 0, 1 or 2",
                            geno.samples[c]
                        ),
                    ))
                }
            };
            data.push(v);
        }
        let (line, loc) = snp_loc.get(id).ok_or_else(|| AcmeError::UnknownId {
            kind: "SNP location",
            id: id.clone(),
        })?;
        positions.push(Locus {
            chrom: loc[0].clone(),
            pos: parse_coordinate(&paths.snp_locations, *line, &loc[1])?,
        });
    }
    let genotypes = GenotypeMatrix {
        snp_ids: geno.ids.clone(),
        positions,
        data,
        n,
    };

    // Expression.
    let gene_loc = read_locations(&paths.gene_locations, 3)?;
    let cols = columns(&expr);
    let t = expr.ids.len();
    let mut values = DMatrix::zeros(t, n);
    let mut spans = Vec::with_capacity(t);
    for (r, id) in expr.ids.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let cell = expr.rows[r][c].as_str();
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite() && *v >= 0.0).ok_or_else(|| {
                parse_error(
                    &paths.expression,
                    expr.lines[r],
                    format!(
                        "gene `{id}`, sample `{}`: `{cell}` is not a finite nonnegative number",
                        expr.samples[c]
                    ),
                )
            })?;
            values[(r, j)] = v;
        }
        let (line, loc) = gene_loc.get(id).ok_or_else(|| AcmeError::UnknownId {
            kind: "gene location",
            id: id.clone(),
        })?;
        let start = parse_coordinate(&paths.gene_locations, *line, &loc[1])?;
        let end = parse_coordinate(&paths.gene_locations, *line, &loc[2])?;
        if end < start {
            return Err(parse_error(
                &paths.gene_locations,
                *line,
                format!("gene `{id}` ends ({end}) before it starts ({start})"),
            ));
        }
        spans.push(Span {
            chrom: loc[0].clone(),
            start,
            end,
        });
    }
    let expression = ExpressionMatrix {
        gene_ids: expr.ids.clone(),
        spans,
        data: values,
    };

    // Covariates.
    let (covariate_ids, covariates) = match (&cov, &paths.covariates) {
        (Some(cov), Some(path)) => {
            let cols = columns(cov);
            let mut z = DMatrix::zeros(cov.ids.len(), n);
            for r in 0..cov.ids.len() {
                for (j, &c) in cols.iter().enumerate() {
                    let cell = cov.rows[r][c].as_str();
                    z[(r, j)] = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                        parse_error(
                            path,
                            cov.lines[r],
                            format!("covariate `{}`, sample `{}`: `{cell}` is not a finite number", cov.ids[r], cov.samples[c]),
                        )
                    })?;
                }
            }
            (cov.ids.clone(), z)
        }
        _ => (Vec::new(), DMatrix::zeros(0, n)),
    };

    Ok((
        Bundle {
            samples,
            genotypes,
            expression,
            covariate_ids,
            covariates,
        },
        report,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| AcmeError::io(path, e))
}

fn write_header(w: &mut impl Write, label: &str, samples: &[String]) -> std::io::Result<()> {
    write!(w, "{label}")?;
    for s in samples {
        write!(w, "\t{s}")?;
    }
    writeln!(w)
}

/// Write a bundle in the input formats; floats use the shortest
/// representation that reads back exactly.
pub fn write_bundle(bundle: &Bundle, paths: &BundlePaths) -> Result<()> {
    let n = bundle.n();

    let path = &paths.genotype;
    let mut w = create(path)?;
    (|| -> std::io::Result<()> {
        write_header(&mut w, "snp_id", &bundle.samples)?;
        for (k, id) in bundle.genotypes.snp_ids.iter().enumerate() {
            write!(w, "{id}")?;
            for v in bundle.genotypes.row(k) {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    })()
    .map_err(|e| AcmeError::io(path, e))?;

    let path = &paths.expression;
    let mut w = create(path)?;
    (|| -> std::io::Result<()> {
        write_header(&mut w, "gene_id", &bundle.samples)?;
        for (k, id) in bundle.expression.gene_ids.iter().enumerate() {
            write!(w, "{id}")?;
            for j in 0..n {
                write!(w, "\t{}", bundle.expression.data[(k, j)])?;
            }
            writeln!(w)?;
        }
        w.flush()
    })()
    .map_err(|e| AcmeError::io(path, e))?;

    if let Some(path) = &paths.covariates {
        let mut w = create(path)?;
        (|| -> std::io::Result<()> {
            write_header(&mut w, "cov_id", &bundle.samples)?;
            for (k, id) in bundle.covariate_ids.iter().enumerate() {
                write!(w, "{id}")?;
                for j in 0..n {
                    write!(w, "\t{}", bundle.covariates[(k, j)])?;
                }
                writeln!(w)?;
            }
            w.flush()
        })()
        .map_err(|e| AcmeError::io(path, e))?;
    } else if bundle.covariates.nrows() > 0 {
        return Err(AcmeError::InvalidArgument("bundle has covariates but no covariate path was given".into()));
    }

    let path = &paths.snp_locations;
    let mut w = create(path)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "snp_id\tchrom\tpos")?;
        for (id, loc) in bundle.genotypes.snp_ids.iter().zip(&bundle.genotypes.positions) {
            writeln!(w, "{id}\t{}\t{}", loc.chrom, loc.pos)?;
        }
        w.flush()
    })()
    .map_err(|e| AcmeError::io(path, e))?;

    let path = &paths.gene_locations;
    let mut w = create(path)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "gene_id\tchrom\tstart\tend")?;
        for (id, span) in bundle.expression.gene_ids.iter().zip(&bundle.expression.spans) {
            writeln!(w, "{id}\t{}\t{}\t{}", span.chrom, span.start, span.end)?;
        }
        w.flush()
    })()
    .map_err(|e| AcmeError::io(path, e))?;
    Ok(())
}
