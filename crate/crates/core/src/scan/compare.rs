use std::collections::{HashMap, HashSet};

use crate::error::{AcmeError, Result};
use crate::model::effect_axis;
use crate::stats;

use super::ScanRecord;

/// One pair of the joined table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub gene_id: String,
    pub snp_id: String,
    /// `w(eta) = log(1 + 2 eta)` of the ACME estimate.
    pub w_acme: f64,
    pub acme_p: f64,
    /// LL allele-count slope `theta1 = log(1 + ll_eta)`.
    pub ll_effect: Option<f64>,
    pub ll_p: Option<f64>,
    pub qn_effect: Option<f64>,
    pub qn_p: Option<f64>,
}

/// Agreement of one baseline model with ACME over the pairs where the
/// baseline is present.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAgreement {
    pub model: &'static str,
    pub pairs: usize,
    /// Spearman correlation of the baseline effect with `w(eta)`.
    pub effect_spearman: f64,
    /// Fraction of pairs whose effects have the same sign, among pairs where
    /// both are nonzero.
    pub sign_agreement: f64,
    /// Spearman correlation of the p-values.
    pub p_spearman: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub agreement: Vec<ModelAgreement>,
}

type Key<'a> = (&'a str, &'a str);

fn key(r: &ScanRecord) -> Key<'_> {
    (r.gene_id.as_str(), r.snp_id.as_str())
}

/// Join ACME estimates with LL/QN estimates by `(gene_id, snp_id)` and
/// summarize how the effect sizes and p-values agree.
///
/// Both inputs may be the same scan output. Every pair must appear in both
/// inputs exactly once.
pub fn compare_models(acme: &[ScanRecord], baseline: &[ScanRecord]) -> Result<Comparison> {
    let mut by_key: HashMap<Key<'_>, &ScanRecord> = HashMap::with_capacity(baseline.len());
    for r in baseline {
        if by_key.insert(key(r), r).is_some() {
            return Err(AcmeError::InvalidArgument(format!(
                "pair {}/{} appears twice in the baseline output",
                r.gene_id, r.snp_id
            )));
        }
    }
    let mut seen = HashSet::with_capacity(acme.len());
    let mut missing = Vec::new();
    let mut rows = Vec::with_capacity(acme.len());
    for a in acme {
        if !seen.insert(key(a)) {
            return Err(AcmeError::InvalidArgument(format!(
                "pair {}/{} appears twice in the ACME output",
                a.gene_id, a.snp_id
            )));
        }
        let Some(b) = by_key.get(&key(a)) else {
            missing.push(key(a));
            continue;
        };
        rows.push(ComparisonRow {
            gene_id: a.gene_id.clone(),
            snp_id: a.snp_id.clone(),
            w_acme: effect_axis(a.eta),
            acme_p: a.p_value,
            ll_effect: b.ll_eta.map(f64::ln_1p),
            ll_p: b.ll_p,
            qn_effect: b.qn_beta,
            qn_p: b.qn_p,
        });
    }
    let extra: Vec<Key<'_>> = baseline.iter().map(key).filter(|k| !seen.contains(k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let first = missing.first().or(extra.first()).expect("a mismatched key");
        return Err(AcmeError::InvalidArgument(format!(
            "pair keys differ: {} only in the ACME output, {} only in the baseline output (first: {}/{})",
            missing.len(),
            extra.len(),
            first.0,
            first.1
        )));
    }
    let agreement = [
        ("LL", (|r: &ComparisonRow| r.ll_effect.zip(r.ll_p)) as fn(&ComparisonRow) -> Option<(f64, f64)>),
        ("QN", |r: &ComparisonRow| r.qn_effect.zip(r.qn_p)),
    ]
    .into_iter()
    .filter_map(|(model, pick)| agree(model, &rows, pick))
    .collect();
    Ok(Comparison { rows, agreement })
}

fn agree(model: &'static str, rows: &[ComparisonRow], pick: fn(&ComparisonRow) -> Option<(f64, f64)>) -> Option<ModelAgreement> {
    let mut w = Vec::new();
    let mut effect = Vec::new();
    let mut acme_p = Vec::new();
    let mut p = Vec::new();
    for r in rows {
        if let Some((e, pv)) = pick(r) {
            w.push(r.w_acme);
            effect.push(e);
            acme_p.push(r.acme_p);
            p.push(pv);
        }
    }
    if w.is_empty() {
        return None;
    }
    let signed: Vec<bool> = w
        .iter()
        .zip(&effect)
        .filter(|(a, b)| **a != 0.0 && **b != 0.0)
        .map(|(a, b)| (*a > 0.0) == (*b > 0.0))
        .collect();
    let sign_agreement = if signed.is_empty() {
        f64::NAN
    } else {
        signed.iter().filter(|&&s| s).count() as f64 / signed.len() as f64
    };
    Some(ModelAgreement {
        model,
        pairs: w.len(),
        effect_spearman: stats::spearman(&w, &effect),
        sign_agreement,
        p_spearman: stats::spearman(&acme_p, &p),
    })
}
