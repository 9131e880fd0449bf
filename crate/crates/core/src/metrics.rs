//! Classification metrics (percent) and miss-rate aggregation.

use crate::error::{Error, Result};
use crate::optim::MissStats;

/// Smallest and largest value over classes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: &[f64]) -> Self {
        values.iter().fold(
            Range { min: f64::INFINITY, max: f64::NEG_INFINITY },
            |r, &v| Range { min: r.min.min(v), max: r.max.max(v) },
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

impl ClassReport {
    pub fn precision_range(&self) -> Range {
        Range::of(&self.precision)
    }

    pub fn recall_range(&self) -> Range {
        Range::of(&self.recall)
    }

    pub fn f1_range(&self) -> Range {
        Range::of(&self.f1)
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// `confusion[truth][predicted]` counts.
pub fn confusion_matrix(predictions: &[usize], labels: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "need equal, non-empty prediction and label vectors (got {} and {})",
            predictions.len(),
            labels.len()
        )));
    }
    let mut m = vec![vec![0; classes]; classes];
    for (&p, &t) in predictions.iter().zip(labels) {
        if p >= classes || t >= classes {
            return Err(Error::invalid(format!("class index out of range for {classes} classes")));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

/// Per-class precision, recall and F1 plus accuracy. Empty denominators give 0.
pub fn classification_report(predictions: &[usize], labels: &[usize], classes: usize) -> Result<ClassReport> {
    let m = confusion_matrix(predictions, labels, classes)?;
    report_from_confusion(&m)
}

pub fn report_from_confusion(m: &[Vec<usize>]) -> Result<ClassReport> {
    let k = m.len();
    if k == 0 || m.iter().any(|row| row.len() != k) {
        return Err(Error::invalid("confusion matrix must be square and non-empty"));
    }
    let total: usize = m.iter().flatten().sum();
    if total == 0 {
        return Err(Error::invalid("empty confusion matrix"));
    }
    let tp = |c: usize| m[c][c];
    let predicted = |c: usize| (0..k).map(|t| m[t][c]).sum::<usize>();
    let actual = |c: usize| m[c].iter().sum::<usize>();
    let precision: Vec<f64> = (0..k).map(|c| percent(tp(c), predicted(c))).collect();
    let recall: Vec<f64> = (0..k).map(|c| percent(tp(c), actual(c))).collect();
    let f1 = precision
        .iter()
        .zip(&recall)
        .map(|(&p, &r)| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
        .collect();
    Ok(ClassReport {
        accuracy: percent((0..k).map(tp).sum(), total),
        precision,
        recall,
        f1,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissRate {
    pub rate: f64,
    /// Miss frequency after each probed step.
    pub curve: Vec<f64>,
}

pub fn miss_rate(stats: &MissStats) -> MissRate {
    let mut misses = 0usize;
    let curve = stats
        .flags()
        .iter()
        .enumerate()
        .map(|(t, &m)| {
            misses += usize::from(m);
            if t == 0 {
                0.0
            } else {
                (misses as f64 / t as f64).min(1.0)
            }
        })
        .collect();
    MissRate { rate: stats.rate(), curve }
}
