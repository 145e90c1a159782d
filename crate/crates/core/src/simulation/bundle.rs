use nalgebra::DMatrix;

use crate::error::{AcmeError, Result};
use crate::scan::{Bundle, ExpressionMatrix, GenotypeMatrix, Locus, Span};

use super::generate::{normal_covariates, GenotypeSource};
use super::{simulate_acme_pair, stream_rng, SimConfig};

/// Base-pair distance between consecutive genes on a chromosome; larger
/// than twice the default cis window, so genes never share SNPs.
const GENE_SPACING: u64 = 5_000_000;
const SNP_SPACING: u64 = 1_000;

/// A synthetic scan bundle with one gene per entry of `etas`.
///
/// Gene `g` lies on chromosome `g % 3 + 1` and owns `snps_per_gene` SNPs
/// inside its span, `SNP_SPACING` apart; the first of them is causal with
/// effect `etas[g]`, the rest are independent Hardy-Weinberg draws. Counts
/// are `exp(y) - 1` (floored at 0), so `log(1 + c)` recovers the simulated
/// response. Covariates are standard normal and shared by all genes.
pub fn simulate_bundle(config: &SimConfig, etas: &[f64], snps_per_gene: usize) -> Result<Bundle> {
    config.validate()?;
    if snps_per_gene == 0 {
        return Err(AcmeError::InvalidArgument("snps_per_gene must be positive".into()));
    }
    let (n, p) = (config.n, config.p);
    let z = normal_covariates(p, n, &mut stream_rng(config.seed, u64::MAX));
    let genes = etas.len();
    let mut genotypes = GenotypeMatrix {
        snp_ids: Vec::with_capacity(genes * snps_per_gene),
        positions: Vec::with_capacity(genes * snps_per_gene),
        data: Vec::with_capacity(genes * snps_per_gene * n),
        n,
    };
    let mut counts = DMatrix::zeros(genes, n);
    let mut spans = Vec::with_capacity(genes);
    for (g, &eta) in etas.iter().enumerate() {
        let mut rng = stream_rng(config.seed, g as u64);
        let sim = simulate_acme_pair(config, eta, &GenotypeSource::Hwe(config.maf), Some(&z), &mut rng)?;
        let chrom = (g % 3 + 1).to_string();
        let start = 1_000_000 + (g / 3) as u64 * GENE_SPACING;
        spans.push(Span {
            chrom: chrom.clone(),
            start,
            end: start + SNP_SPACING * snps_per_gene as u64,
        });
        for (i, y) in sim.pair.y().iter().enumerate() {
            counts[(g, i)] = y.exp_m1().max(0.0);
        }
        for k in 0..snps_per_gene {
            let s = if k == 0 {
                sim.pair.s().to_vec()
            } else {
                super::hwe_genotypes(n, config.maf, &mut rng)?
            };
            genotypes.snp_ids.push(format!("rs{g}_{k}"));
            genotypes.positions.push(Locus {
                chrom: chrom.clone(),
                pos: start + SNP_SPACING * k as u64,
            });
            genotypes.data.extend_from_slice(&s);
        }
    }
    Ok(Bundle {
        samples: (0..n).map(|i| format!("S{i:04}")).collect(),
        genotypes,
        expression: ExpressionMatrix {
            gene_ids: (0..genes).map(|g| format!("G{g:05}")).collect(),
            spans,
            data: counts,
        },
        covariate_ids: (0..p).map(|j| format!("C{j}")).collect(),
        covariates: z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_recovery() {
        let cfg = SimConfig {
            n: 30,
            p: 2,
            ..SimConfig::default()
        };
        let b = simulate_bundle(&cfg, &[0.0, 1.0, -0.2, 0.5], 3).unwrap();
        assert_eq!(b.genotypes.len(), 12);
        assert_eq!(b.expression.len(), 4);
        assert_eq!(b.genotypes.data.len(), 12 * 30);
        assert_eq!(b.expression.spans[3].chrom, "1");
        assert!(b.genotypes.positions[9..].iter().all(|l| l.pos >= b.expression.spans[3].start
            && l.pos <= b.expression.spans[3].end));
        assert_eq!(b, simulate_bundle(&cfg, &[0.0, 1.0, -0.2, 0.5], 3).unwrap());
    }
}
