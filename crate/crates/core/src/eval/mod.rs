//! Metrics, patient-grouped stratified folds and nested cross-validation.

mod cv;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::stats::midranks;
use crate::util::rng_for;
use crate::{Error, Result};

pub use cv::{
    fit_predict, nested_cv, prepare_stays, CvConfig, CvReport, EvalStay, MetricRecord, ModelKind,
    SummaryRow, TuneParams,
};

fn check_binary(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(format!(
            "both classes are required, got {pos} positives and {neg} negatives"
        )));
    }
    Ok((pos, neg))
}

/// Mann-Whitney estimate of P(score of a positive > score of a negative),
/// ties counted as one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_binary(scores, labels)?;
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    /// False when nothing was predicted positive and precision is reported as 0.
    pub precision_defined: bool,
}

/// Precision and recall with `score >= cutoff` counted as a positive call.
pub fn precision_recall(scores: &[f64], labels: &[bool], cutoff: f64) -> Result<PrecisionRecall> {
    let (pos, _) = check_binary(scores, labels)?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        if s >= cutoff {
            if l {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let called = tp + fp;
    Ok(PrecisionRecall {
        precision: if called == 0 {
            0.0
        } else {
            tp as f64 / called as f64
        },
        recall: tp as f64 / pos as f64,
        precision_defined: called > 0,
    })
}

/// Assigns every item to one of `k` folds so that items sharing a group stay
/// together and positives are spread evenly. Returns the fold of each item.
pub fn stratified_group_folds(
    labels: &[bool],
    groups: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if labels.len() != groups.len() {
        return Err(Error::Dimension(format!(
            "{} labels but {} group ids",
            labels.len(),
            groups.len()
        )));
    }
    if k < 2 {
        return Err(Error::Fold(format!("need at least 2 folds, got {k}")));
    }
    let mut by_group: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
    for (i, g) in groups.iter().enumerate() {
        by_group.entry(g.as_str()).or_default().push(i);
    }
    let mut members: Vec<Vec<usize>> = by_group.into_values().collect();
    let total_pos = labels.iter().filter(|&&l| l).count();
    let total_neg = labels.len() - total_pos;
    if members.len() < k || total_pos < k || total_neg < k {
        return Err(Error::Fold(format!(
            "cannot build {k} stratified folds from {} groups with {total_pos} positives and {total_neg} negatives",
            members.len()
        )));
    }

    members.shuffle(&mut rng_for(seed, "folds"));
    let pos_of = |m: &[usize]| m.iter().filter(|&&i| labels[i]).count();
    // Groups with more positives first, then larger groups; stable, so the
    // shuffle breaks the remaining ties.
    members.sort_by_key(|m| (std::cmp::Reverse(pos_of(m)), std::cmp::Reverse(m.len())));

    let mut fold_pos = vec![0usize; k];
    let mut fold_neg = vec![0usize; k];
    let mut fold = vec![usize::MAX; labels.len()];
    for m in &members {
        let p = pos_of(m);
        let n = m.len() - p;
        let f = (0..k)
            .min_by_key(|&f| {
                let primary = if p > 0 { fold_pos[f] } else { fold_neg[f] };
                (primary, fold_pos[f] + fold_neg[f], f)
            })
            .expect("k >= 2");
        fold_pos[f] += p;
        fold_neg[f] += n;
        for &i in m {
            fold[i] = f;
        }
    }
    if let Some(f) = (0..k).find(|&f| fold_pos[f] == 0 || fold_neg[f] == 0) {
        return Err(Error::Fold(format!(
            "fold {f} ends up with a single class; groups are too lopsided for {k} folds"
        )));
    }
    Ok(fold)
}
