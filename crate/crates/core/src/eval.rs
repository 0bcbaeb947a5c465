//! Evaluation: preprocessing, thresholded activation maps, restricted ROC
//! area, paired t-tests and pairwise win tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{FitOutcome, Model};
use crate::responsibilities::Responsibilities;

/// Activation label of a sample; also used for ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Null,
    Positive,
    Negative,
}

impl Activation {
    /// Maps mixture component labels 1 (noise), 2 (positive), 3 (negative).
    pub fn from_component(label: u8) -> Result<Self> {
        match label {
            1 => Ok(Activation::Null),
            2 => Ok(Activation::Positive),
            3 => Ok(Activation::Negative),
            other => Err(Error::InvalidInput(format!("component label {other} not in 1..=3"))),
        }
    }

    pub fn component(self) -> u8 {
        match self {
            Activation::Null => 1,
            Activation::Positive => 2,
            Activation::Negative => 3,
        }
    }

    pub fn is_active(self) -> bool {
        self != Activation::Null
    }
}

/// Drops exact zeros, then shifts and scales to zero mean and unit
/// (population) variance.
pub fn standardize(data: &[f64]) -> Result<Vec<f64>> {
    let kept: Vec<f64> = data.iter().copied().filter(|&x| x != 0.0).collect();
    if kept.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "standardization needs at least 2 non-zero values, got {}",
            kept.len()
        )));
    }
    if kept.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("data contains non-finite values".into()));
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let var = kept.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::InvalidInput("cannot standardize constant data".into()));
    }
    let sd = var.sqrt();
    Ok(kept.into_iter().map(|x| (x - mean) / sd).collect())
}

/// Labels a sample positive (negative) when its positive (negative)
/// responsibility exceeds `threshold`.
pub fn activation_map(gamma: &Responsibilities, threshold: f64) -> Vec<Activation> {
    gamma
        .rows()
        .iter()
        .map(|g| {
            if g[1] > threshold {
                Activation::Positive
            } else if g[2] > threshold {
                Activation::Negative
            } else {
                Activation::Null
            }
        })
        .collect()
}

/// Fractions of positive and negative labels.
pub fn activation_fractions(labels: &[Activation]) -> (f64, f64) {
    if labels.is_empty() {
        return (0.0, 0.0);
    }
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|&&l| l == Activation::Positive).count() as f64;
    let neg = labels.iter().filter(|&&l| l == Activation::Negative).count() as f64;
    (pos / n, neg / n)
}

/// Which detection problem an ROC curve describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AucTask {
    /// Score `γ₂ + γ₃` against any activation.
    Any,
    /// Score `γ₂` against positive activation.
    Positive,
    /// Score `γ₃` against negative activation.
    Negative,
}

impl AucTask {
    fn scores(self, gamma: &Responsibilities) -> Vec<f64> {
        gamma
            .rows()
            .iter()
            .map(|g| match self {
                AucTask::Any => g[1] + g[2],
                AucTask::Positive => g[1],
                AucTask::Negative => g[2],
            })
            .collect()
    }

    fn hit(self, truth: Activation) -> bool {
        match self {
            AucTask::Any => truth.is_active(),
            AucTask::Positive => truth == Activation::Positive,
            AucTask::Negative => truth == Activation::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScores {
    pub scores: Vec<f64>,
    pub truth: Vec<Activation>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, truth: Vec<Activation>) -> Result<Self> {
        if scores.len() != truth.len() {
            return Err(Error::InvalidInput(format!(
                "{} scores for {} labels",
                scores.len(),
                truth.len()
            )));
        }
        Ok(Self { scores, truth })
    }

    pub fn from_responsibilities(gamma: &Responsibilities, truth: &[Activation], task: AucTask) -> Result<Self> {
        Self::new(task.scores(gamma), truth.to_vec())
    }

    pub fn restricted_auc(&self, task: AucTask, fpr_max: f64) -> Result<f64> {
        let hits: Vec<bool> = self.truth.iter().map(|&t| task.hit(t)).collect();
        restricted_auc(&self.scores, &hits, fpr_max)
    }
}

/// Area under the ROC curve over `FPR ∈ [0, fpr_max]`, divided by `fpr_max`.
///
/// Samples with equal scores form a single threshold step, so the curve is
/// piecewise linear through the tie-grouped vertices. The area is exact for
/// that curve, interpolating linearly at `fpr_max`.
pub fn restricted_auc(scores: &[f64], positive: &[bool], fpr_max: f64) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if !(fpr_max > 0.0 && fpr_max <= 1.0) {
        return Err(Error::InvalidInput(format!("fpr_max {fpr_max} not in (0, 1]")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("scores contain NaN".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_fpr, mut prev_tpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let fpr = fp as f64 / n_neg as f64;
        let tpr = tp as f64 / n_pos as f64;
        if fpr >= fpr_max {
            if fpr > prev_fpr {
                let t_at = prev_tpr + (tpr - prev_tpr) * (fpr_max - prev_fpr) / (fpr - prev_fpr);
                area += 0.5 * (prev_tpr + t_at) * (fpr_max - prev_fpr);
            }
            return Ok((area / fpr_max).clamp(0.0, 1.0));
        }
        area += 0.5 * (prev_tpr + tpr) * (fpr - prev_fpr);
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    // FPR reaches 1 at the last group, so the loop always returns.
    unreachable!("ROC curve ended before reaching fpr_max")
}

/// Evaluation of one fit against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: Model,
    pub run_id: u64,
    pub auc_restricted: f64,
    pub pos_fraction: f64,
    pub neg_fraction: f64,
    /// Fit wall time; left out when timings are not recorded so reports stay
    /// reproducible.
    pub runtime_seconds: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Restricted "any activation" AUC and thresholded activation fractions of
/// a fit.
pub fn evaluate(
    outcome: &FitOutcome,
    truth: &[Activation],
    run_id: u64,
    fpr_max: f64,
    record_time: bool,
) -> Result<EvalReport> {
    let gamma = outcome.responsibilities();
    let auc = LabeledScores::from_responsibilities(gamma, truth, AucTask::Any)?
        .restricted_auc(AucTask::Any, fpr_max)?;
    let (pos_fraction, neg_fraction) = activation_fractions(&activation_map(gamma, 0.5));
    Ok(EvalReport {
        model: outcome.model,
        run_id,
        auc_restricted: auc,
        pos_fraction,
        neg_fraction,
        runtime_seconds: record_time.then(|| outcome.wall_time_seconds()),
        iterations: outcome.iterations(),
        converged: outcome.converged(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub df: f64,
    /// Set when the differences have zero variance but a non-zero mean; `t`
    /// is then infinite and `p` is 0.
    pub degenerate: bool,
}

/// Paired two-sided t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "paired t-test needs two equal-length samples of size >= 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let df = n - 1.0;
    if !(var > 0.0) {
        return Ok(if mean == 0.0 {
            TTest { t: 0.0, p: 1.0, df, degenerate: false }
        } else {
            TTest {
                t: mean.signum() * f64::INFINITY,
                p: 0.0,
                df,
                degenerate: true,
            }
        });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numeric(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p, df, degenerate: false })
}

/// Restricted AUCs of every model over the repeats of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAucs {
    pub scenario_id: String,
    pub aucs: BTreeMap<Model, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub scenario_id: String,
    pub model_a: Model,
    pub model_b: Model,
    pub mean_diff: f64,
    pub t: f64,
    pub p: f64,
    /// `a` has a higher mean AUC than `b` at significance `alpha`.
    pub win: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub alpha: f64,
    pub pairs: Vec<PairComparison>,
    /// For each model, the percentage of (scenario, other model) comparisons
    /// it won.
    pub win_percentage: BTreeMap<Model, f64>,
    /// For each ordered pair, the percentage of scenarios `a` won against `b`.
    pub pair_percentage: Vec<(Model, Model, f64)>,
}

impl ComparisonTable {
    /// Number of scenarios in which `a` significantly beat `b`.
    pub fn wins(&self, a: Model, b: Model) -> usize {
        self.pairs
            .iter()
            .filter(|c| c.model_a == a && c.model_b == b && c.win)
            .count()
    }
}

/// Paired t-test of every ordered model pair within every scenario.
pub fn win_matrix(scenarios: &[ScenarioAucs], alpha: f64) -> Result<ComparisonTable> {
    let mut pairs = Vec::new();
    let mut won: BTreeMap<Model, (usize, usize)> = BTreeMap::new();
    let mut pair_counts: BTreeMap<(Model, Model), (usize, usize)> = BTreeMap::new();
    for sc in scenarios {
        for (&a, va) in &sc.aucs {
            for (&b, vb) in &sc.aucs {
                if a == b {
                    continue;
                }
                let test = paired_t_test(va, vb)?;
                let mean_diff =
                    va.iter().zip(vb).map(|(x, y)| x - y).sum::<f64>() / va.len() as f64;
                let win = mean_diff > 0.0 && test.p < alpha;
                let e = won.entry(a).or_default();
                e.0 += win as usize;
                e.1 += 1;
                let e = pair_counts.entry((a, b)).or_default();
                e.0 += win as usize;
                e.1 += 1;
                pairs.push(PairComparison {
                    scenario_id: sc.scenario_id.clone(),
                    model_a: a,
                    model_b: b,
                    mean_diff,
                    t: test.t,
                    p: test.p,
                    win,
                });
            }
        }
    }
    let pct = |(w, n): (usize, usize)| if n == 0 { 0.0 } else { 100.0 * w as f64 / n as f64 };
    Ok(ComparisonTable {
        alpha,
        pairs,
        win_percentage: won.into_iter().map(|(m, c)| (m, pct(c))).collect(),
        pair_percentage: pair_counts
            .into_iter()
            .map(|((a, b), c)| (a, b, pct(c)))
            .collect(),
    })
}
