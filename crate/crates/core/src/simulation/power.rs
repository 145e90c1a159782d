use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{AcmeError, Result};
use crate::model::{
    analyze_pair, effect_axis, f_test_association, fit_log_ancova, fit_log_linear, fit_ols, predict_expression,
    FitOptions, GenePair, PairDesign,
};
use crate::stats;
use crate::transforms::quantile_normalize;

use super::generate::{normal_covariates, GenotypeSource};
use super::{simulate_acme_pair, stream_rng, SimConfig};

/// Models compared in the power experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// Linear regression of raw expression `exp(y)`.
    Raw,
    /// Linear regression of quantile-normalized `y`.
    Qn,
    /// Log-linear.
    Ll,
    /// Log-ANCOVA.
    Ancova,
    Acme,
}

impl Model {
    pub const ALL: [Model; 5] = [Model::Raw, Model::Qn, Model::Ll, Model::Ancova, Model::Acme];

    pub fn name(self) -> &'static str {
        match self {
            Model::Raw => "RAW",
            Model::Qn => "QN",
            Model::Ll => "LL",
            Model::Ancova => "ANCOVA",
            Model::Acme => "ACME",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = AcmeError;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AcmeError::InvalidArgument(format!("unknown model `{s}`")))
    }
}

/// Summary of one `(eta, model)` cell over the replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub eta: f64,
    /// `w(eta) = log(1 + 2 eta)`.
    pub w: f64,
    pub model: Model,
    pub mean_neg_log10_p: f64,
    pub sd_neg_log10_p: f64,
    /// Mean and sd of predicted raw expression at one and two alleles;
    /// `None` for QN, which has no raw scale.
    pub pred1: Option<(f64, f64)>,
    pub pred2: Option<(f64, f64)>,
    pub replicates: usize,
    /// Replicates whose fit failed, excluded from the summaries.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn row(&self, eta: f64, model: Model) -> Option<&PowerRow> {
        self.rows.iter().find(|r| r.eta == eta && r.model == model)
    }
}

/// Per-replicate outcome: `(-log10 p, predictions at s = 1, 2)`.
type Outcome = Result<(f64, Option<(f64, f64)>)>;

/// Simulate `config.replicates` pairs at every `eta` of the grid and fit
/// each requested model.
///
/// Covariates are standard normal and shared by all replicates and effect
/// sizes; genotypes (Hardy-Weinberg), `gamma` and errors are drawn per
/// replicate. Replicate `r` uses the same random stream at every `eta`.
pub fn run_power_experiment(config: &SimConfig, models: &[Model]) -> Result<PowerTable> {
    config.validate()?;
    let z = normal_covariates(config.p, config.n, &mut stream_rng(config.seed, u64::MAX));
    let opts = FitOptions::default();
    let mut rows = Vec::new();
    for &eta in &config.eta_grid {
        let outcomes: Vec<Vec<Outcome>> = (0..config.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(config.seed, r);
                match simulate_acme_pair(config, eta, &GenotypeSource::Hwe(config.maf), Some(&z), &mut rng) {
                    Ok(sim) => models.iter().map(|&m| evaluate(&sim.pair, m, &opts)).collect(),
                    Err(err) => models.iter().map(|_| Err(clone_error(&err))).collect(),
                }
            })
            .collect();
        for (k, &model) in models.iter().enumerate() {
            rows.push(summarize(eta, model, outcomes.iter().map(|o| &o[k])));
        }
    }
    Ok(PowerTable { rows })
}

fn clone_error(err: &AcmeError) -> AcmeError {
    AcmeError::InvalidArgument(err.to_string())
}

fn neg_log10(p: f64) -> f64 {
    -p.max(f64::MIN_POSITIVE).log10()
}

fn evaluate(pair: &GenePair, model: Model, opts: &FitOptions) -> Outcome {
    let (n, p) = (pair.n(), pair.p());
    match model {
        Model::Acme => {
            let a = analyze_pair(pair, opts)?;
            let preds = (predict_expression(&a.acme, 1)?, predict_expression(&a.acme, 2)?);
            Ok((neg_log10(a.acme_test.p_value), Some(preds)))
        }
        Model::Ll => {
            let design = PairDesign::new(pair)?;
            let fit = fit_log_linear(pair)?;
            let test = f_test_association(fit.sse, design.null_sse(), n, p)?;
            let (t0, t1) = (fit.coefficients[0], fit.coefficients[1]);
            Ok((neg_log10(test.p_value), Some(((t0 + t1).exp(), (t0 + 2.0 * t1).exp()))))
        }
        Model::Ancova => {
            let a = analyze_pair(pair, opts)?;
            let fit = fit_log_ancova(pair)?;
            let c = &fit.coefficients;
            Ok((neg_log10(a.ancova_test.p_value), Some((c[1].exp(), c[2].exp()))))
        }
        Model::Qn => {
            let design = PairDesign::new(pair)?;
            let (_, sse, null_sse) = design.regress(&quantile_normalize(pair.y()))?;
            let test = f_test_association(sse, null_sse, n, p)?;
            Ok((neg_log10(test.p_value), None))
        }
        Model::Raw => {
            let raw: Vec<f64> = pair.y().iter().map(|y| y.exp()).collect();
            let full = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { pair.s()[i] as f64 });
            let fit = fit_ols(&raw, &full, pair.covariates())?;
            let null = fit_ols(&raw, &DMatrix::from_element(n, 1, 1.0), pair.covariates())?;
            let test = f_test_association(fit.sse, null.sse, n, p)?;
            let (t0, t1) = (fit.coefficients[0], fit.coefficients[1]);
            Ok((neg_log10(test.p_value), Some((t0 + t1, t0 + 2.0 * t1))))
        }
    }
}

fn summarize<'a>(eta: f64, model: Model, outcomes: impl Iterator<Item = &'a Outcome>) -> PowerRow {
    let mut scores = Vec::new();
    let mut pred1 = Vec::new();
    let mut pred2 = Vec::new();
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Ok((score, preds)) => {
                scores.push(*score);
                if let Some((a, b)) = preds {
                    // An absent genotype class leaves the ANCOVA level undefined.
                    if a.is_finite() {
                        pred1.push(*a);
                    }
                    if b.is_finite() {
                        pred2.push(*b);
                    }
                }
            }
            Err(err) => {
                log::debug!("power replicate failed for {model} at eta = {eta}: {err}");
                failures += 1;
            }
        }
    }
    let (mean, sd) = stats::mean_sd(&scores);
    let has_preds = model != Model::Qn;
    PowerRow {
        eta,
        w: effect_axis(eta),
        model,
        mean_neg_log10_p: mean,
        sd_neg_log10_p: sd,
        pred1: has_preds.then(|| stats::mean_sd(&pred1)),
        pred2: has_preds.then(|| stats::mean_sd(&pred2)),
        replicates: scores.len(),
        failures,
    }
}
