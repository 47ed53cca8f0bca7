//! Binary classification metrics with label 1 as the positive class, plus ROC
//! curves and the rank-statistic AUC.

use serde::{Deserialize, Serialize};

use crate::{util, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub acc: f64,
    pub prec: f64,
    pub rec: f64,
    pub f1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// No positive predictions: precision reported as 0.
    pub precision_undefined: bool,
    /// No positive samples: recall reported as 0.
    pub recall_undefined: bool,
}

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::shape(format!("{a} predictions vs {b} labels")));
    }
    if a == 0 {
        return Err(Error::invalid("metrics need at least one sample"));
    }
    Ok(())
}

pub fn classification_metrics(pred: &[u8], truth: &[u8]) -> Result<MetricSet> {
    check_pair(pred.len(), truth.len())?;
    util::check_binary(pred, "pred")?;
    util::check_binary(truth, "truth")?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            _ => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let prec = ratio(tp, tp + fp);
    let rec = ratio(tp, tp + fn_);
    let f1 = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
    Ok(MetricSet {
        acc: ratio(tp + tn, pred.len()),
        prec,
        rec,
        f1,
        auc: None,
        tp,
        fp,
        tn,
        fn_,
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Decreasing; the first entry is `+inf` (nothing predicted positive).
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.fpr
            .windows(2)
            .zip(self.tpr.windows(2))
            .map(|(f, t)| (f[1] - f[0]) * (t[0] + t[1]) / 2.0)
            .sum()
    }

    /// `threshold,fpr,tpr`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for i in 0..self.thresholds.len() {
            out.push_str(&format!("{},{},{}\n", self.thresholds[i], self.fpr[i], self.tpr[i]));
        }
        out
    }
}

/// Mann-Whitney AUC: the chance a random positive outscores a random
/// negative, ties counting one half. Also returns the ROC curve swept over
/// every distinct score.
pub fn roc_auc(scores: &[f64], truth: &[u8]) -> Result<(f64, RocCurve)> {
    check_pair(scores.len(), truth.len())?;
    util::check_binary(truth, "truth")?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    let n_pos = truth.iter().filter(|t| **t == 1).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("ROC/AUC needs both classes present"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Mid-ranks (1-based) over tie groups, ascending.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| truth[k] == 1).count();
        rank_sum_pos += mid_rank * pos_in_group as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    let auc = u / (n_pos as f64 * n_neg as f64);

    // Curve: walk tie groups from the highest score down.
    let mut thresholds = vec![f64::INFINITY];
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = order.len();
    while i > 0 {
        let s = scores[order[i - 1]];
        while i > 0 && scores[order[i - 1]] == s {
            if truth[order[i - 1]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i -= 1;
        }
        thresholds.push(s);
        fpr.push(fp as f64 / n_neg as f64);
        tpr.push(tp as f64 / n_pos as f64);
    }
    Ok((auc, RocCurve { thresholds, fpr, tpr }))
}

/// Classification metrics with AUC filled in from `scores`, when both
/// classes are present in `truth`.
pub fn full_metrics(pred: &[u8], scores: &[f64], truth: &[u8]) -> Result<(MetricSet, Option<RocCurve>)> {
    let mut m = classification_metrics(pred, truth)?;
    let both = truth.contains(&0) && truth.contains(&1);
    if both {
        let (auc, curve) = roc_auc(scores, truth)?;
        m.auc = Some(auc);
        Ok((m, Some(curve)))
    } else {
        Ok((m, None))
    }
}
