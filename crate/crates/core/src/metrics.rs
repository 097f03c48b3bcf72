//! Test-set metrics: thresholded confusion counts and ROC AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub accuracy: f64,
    pub recall: f64,
    pub fpr: f64,
    /// 0 when nothing is predicted positive.
    pub precision: f64,
    pub auc: f64,
    pub threshold: f64,
    pub counts: ConfusionCounts,
}

/// The five reported metrics, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Recall,
    Fpr,
    Precision,
    Auc,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Accuracy, Metric::Recall, Metric::Fpr, Metric::Precision, Metric::Auc];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Accuracy => "Accuracy",
            Metric::Recall => "Recall",
            Metric::Fpr => "FPR",
            Metric::Precision => "Prec",
            Metric::Auc => "AUC",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Recall => "recall",
            Metric::Fpr => "fpr",
            Metric::Precision => "precision",
            Metric::Auc => "auc",
        }
    }
}

impl MetricsRecord {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Recall => self.recall,
            Metric::Fpr => self.fpr,
            Metric::Precision => self.precision,
            Metric::Auc => self.auc,
        }
    }
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidInput(
            "metrics need at least one positive and one negative label".into(),
        ));
    }
    Ok((pos, neg))
}

/// Counts and ratios with `score >= threshold` predicted positive. The
/// returned record's `auc` is NaN; see [`evaluate`] for a full record.
pub fn confusion_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<MetricsRecord> {
    check_inputs(scores, labels)?;
    let mut c = ConfusionCounts::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(MetricsRecord {
        accuracy: ratio(c.tp + c.tn, scores.len()),
        recall: ratio(c.tp, c.tp + c.fn_),
        fpr: ratio(c.fp, c.fp + c.tn),
        precision: ratio(c.tp, c.tp + c.fp),
        auc: f64::NAN,
        threshold,
        counts: c,
    })
}

/// Area under the ROC curve in Mann-Whitney form: the fraction of
/// (positive, negative) pairs where the positive scores higher, ties
/// counting one half. Computed from mid-ranks in O(n log n).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum of (doubled) mid-ranks of the positives; doubling keeps tie
    // ranks integral
    let mut pos_rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j, mid-rank (i + 1 + j) / 2
        let mid2 = (i + 1 + j) as u64;
        let tied_pos = order[i..j].iter().filter(|&&k| labels[k]).count() as u64;
        pos_rank_sum2 += mid2 * tied_pos;
        i = j;
    }
    let p = pos as u64;
    // U = R_pos - P(P+1)/2, doubled
    let u2 = pos_rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Confusion metrics at `threshold` plus AUC from the raw scores.
pub fn evaluate(scores: &[f64], labels: &[bool], threshold: f64) -> Result<MetricsRecord> {
    let mut record = confusion_metrics(scores, labels, threshold)?;
    record.auc = roc_auc(scores, labels)?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_case() {
        let m = confusion_metrics(&[0.9, 0.1], &[true, false], 0.5).unwrap();
        assert_eq!((m.accuracy, m.recall, m.fpr, m.precision), (1.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn inverted_case() {
        let m = confusion_metrics(&[0.1, 0.9], &[true, false], 0.5).unwrap();
        assert_eq!((m.accuracy, m.recall, m.fpr, m.precision), (0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn nothing_predicted_positive() {
        let m = confusion_metrics(&[0.4, 0.4], &[true, false], 0.5).unwrap();
        assert_eq!((m.recall, m.fpr, m.precision), (0.0, 0.0, 0.0));
        assert_eq!(m.counts.tp + m.counts.fp, 0);
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn threshold_is_inclusive() {
        let m = confusion_metrics(&[0.5, 0.2], &[true, false], 0.5).unwrap();
        assert_eq!(m.counts.tp, 1);
    }

    #[test]
    fn one_class_is_rejected() {
        assert!(confusion_metrics(&[0.1, 0.2], &[true, true], 0.5).is_err());
        assert!(roc_auc(&[0.1, 0.2], &[false, false]).is_err());
        assert!(roc_auc(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        // pairs: (0.8 vs 0.6) win, (0.4 vs 0.6) loss -> 1/2
        assert_eq!(roc_auc(&[0.8, 0.6, 0.4], &[true, false, true]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.9], &[true, false]).unwrap(), 0.0);
    }

    #[test]
    fn counts_invariants() {
        let scores = [0.1, 0.7, 0.55, 0.5, 0.49, 0.9, 0.2];
        let labels = [true, false, true, false, true, true, false];
        let m = evaluate(&scores, &labels, 0.5).unwrap();
        let c = m.counts;
        assert_eq!(c.tp + c.fn_, 4);
        assert_eq!(c.fp + c.tn, 3);
        assert_eq!(m.accuracy, (c.tp + c.tn) as f64 / 7.0);
        assert!((0.0..=1.0).contains(&m.auc));
    }
}
