//! Confusion counts, accuracy, F1 and ROC AUC.

use crate::error::{Error, Result};

/// Posterior cut-off used to turn probabilities into hard labels.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Score {
    pub value: f64,
    /// Precision or recall had a zero denominator, or both were zero; `value` is 0.
    pub degenerate: bool,
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidParameter("empty label vector".into()));
    }
    let mut cc = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => cc.tp += 1,
            (false, true) => cc.fp += 1,
            (false, false) => cc.tn += 1,
            (true, false) => cc.fn_ += 1,
        }
    }
    Ok(cc)
}

pub fn accuracy(cc: &ConfusionCounts) -> f64 {
    (cc.tp + cc.tn) as f64 / cc.total() as f64
}

pub fn f1(cc: &ConfusionCounts) -> F1Score {
    let degenerate = F1Score {
        value: 0.0,
        degenerate: true,
    };
    if cc.tp + cc.fp == 0 || cc.tp + cc.fn_ == 0 {
        return degenerate;
    }
    let precision = cc.tp as f64 / (cc.tp + cc.fp) as f64;
    let recall = cc.tp as f64 / (cc.tp + cc.fn_) as f64;
    if precision + recall == 0.0 {
        return degenerate;
    }
    F1Score {
        value: 2.0 * precision * recall / (precision + recall),
        degenerate: false,
    }
}

pub fn hard_labels(posterior: &[f64]) -> Vec<u8> {
    posterior
        .iter()
        .map(|&p| u8::from(p >= DECISION_THRESHOLD))
        .collect()
}

/// Area under the ROC curve via the Mann-Whitney rank-sum statistic.
///
/// Tied scores share their average rank, which counts each positive/negative
/// tie as one half.
pub fn auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: scores.len(),
        });
    }
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of (doubled) ranks of the positives; doubling keeps midranks integral.
    let mut pos_rank2 = 0u128;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, doubled midrank = start + end + 1
        let mid2 = (start + end + 1) as u128;
        let pos_in_group = order[start..end].iter().filter(|&&i| y_true[i] == 1).count();
        pos_rank2 += mid2 * pos_in_group as u128;
        start = end;
    }
    let n_pos = n_pos as u128;
    let u2 = pos_rank2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}
