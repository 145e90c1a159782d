use std::collections::HashMap;

use super::{Locus, Span};

/// SNPs grouped by chromosome and sorted by position (ties by input index).
#[derive(Debug, Clone)]
pub struct CisIndex {
    by_chrom: HashMap<String, Vec<(u64, usize)>>,
    /// Flattened SNP indices per chromosome, parallel to `by_chrom`.
    order: HashMap<String, Vec<usize>>,
}

impl CisIndex {
    pub fn new(snps: &[Locus]) -> Self {
        let mut by_chrom: HashMap<String, Vec<(u64, usize)>> = HashMap::new();
        for (k, locus) in snps.iter().enumerate() {
            by_chrom.entry(locus.chrom.clone()).or_default().push((locus.pos, k));
        }
        for list in by_chrom.values_mut() {
            list.sort_unstable();
        }
        let order = by_chrom
            .iter()
            .map(|(c, list)| (c.clone(), list.iter().map(|&(_, k)| k).collect()))
            .collect();
        CisIndex { by_chrom, order }
    }

    /// SNP indices within `[start - window, end + window]` on the gene's
    /// chromosome, by ascending position.
    pub fn snps_near(&self, gene: &Span, window: u64) -> &[usize] {
        let (Some(list), Some(order)) = (self.by_chrom.get(&gene.chrom), self.order.get(&gene.chrom)) else {
            return &[];
        };
        let lo = gene.start.saturating_sub(window);
        let hi = gene.end.saturating_add(window);
        let first = list.partition_point(|&(pos, _)| pos < lo);
        let last = list.partition_point(|&(pos, _)| pos <= hi);
        &order[first..last.max(first)]
    }
}

/// All cis pairs `(gene_index, snp_index)`: same chromosome, SNP within
/// `window` base pairs of the gene span (inclusive). Genes come in input
/// order, SNPs by position within each gene.
pub fn enumerate_cis_pairs<'a>(
    genes: &'a [Span],
    snps: &[Locus],
    window: u64,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    let index = CisIndex::new(snps);
    genes.iter().enumerate().flat_map(move |(g, span)| {
        index
            .snps_near(span, window)
            .iter()
            .map(move |&s| (g, s))
            .collect::<Vec<_>>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::stream_rng;
    use rand::RngExt;

    fn locus(chrom: &str, pos: u64) -> Locus {
        Locus {
            chrom: chrom.into(),
            pos,
        }
    }

    fn span(chrom: &str, start: u64, end: u64) -> Span {
        Span {
            chrom: chrom.into(),
            start,
            end,
        }
    }

    #[test]
    fn window_boundaries_are_inclusive() {
        let gene = [span("1", 2_000_000, 2_000_500)];
        let snps = [
            locus("1", 999_999),
            locus("1", 1_000_000),
            locus("1", 3_000_500),
            locus("1", 3_000_501),
            locus("2", 2_000_100),
        ];
        let pairs: Vec<_> = enumerate_cis_pairs(&gene, &snps, 1_000_000).collect();
        assert_eq!(pairs, [(0, 1), (0, 2)]);
        let inside: Vec<_> = enumerate_cis_pairs(&gene, &snps, 0).collect();
        assert!(inside.is_empty());
    }

    #[test]
    fn window_near_origin_saturates() {
        let pairs: Vec<_> = enumerate_cis_pairs(&[span("X", 10, 20)], &[locus("X", 0), locus("X", 25)], 100).collect();
        assert_eq!(pairs, [(0, 0), (0, 1)]);
    }

    #[test]
    fn unsorted_input_comes_out_by_position() {
        let snps = [locus("1", 300), locus("1", 100), locus("1", 200), locus("1", 100)];
        let pairs: Vec<_> = enumerate_cis_pairs(&[span("1", 150, 150)], &snps, 1000).collect();
        assert_eq!(pairs, [(0, 1), (0, 3), (0, 2), (0, 0)]);
    }

    #[test]
    fn matches_quadratic_oracle() {
        for case in 0..50 {
            let mut rng = stream_rng(99, case);
            let chroms = ["1", "2", "3"];
            let snps: Vec<Locus> = (0..rng.random_range(0..80))
                .map(|_| locus(chroms[rng.random_range(0..3)], rng.random_range(0..5_000)))
                .collect();
            let genes: Vec<Span> = (0..rng.random_range(0..20))
                .map(|_| {
                    let start = rng.random_range(0..5_000);
                    span(chroms[rng.random_range(0..3)], start, start + rng.random_range(0..300))
                })
                .collect();
            let window = rng.random_range(0..1_000);
            let mut fast: Vec<_> = enumerate_cis_pairs(&genes, &snps, window).collect();
            let mut slow = Vec::new();
            for (g, gene) in genes.iter().enumerate() {
                for (s, snp) in snps.iter().enumerate() {
                    if snp.chrom == gene.chrom
                        && snp.pos + window >= gene.start
                        && snp.pos <= gene.end + window
                    {
                        slow.push((g, s));
                    }
                }
            }
            // Emission order: by gene, then by position.
            assert!(fast.windows(2).all(|w| {
                w[0].0 < w[1].0 || (w[0].0 == w[1].0 && snps[w[0].1].pos <= snps[w[1].1].pos)
            }));
            fast.sort_unstable();
            assert_eq!(fast, slow, "case {case}");
        }
    }
}
