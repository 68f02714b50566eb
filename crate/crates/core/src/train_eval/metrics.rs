use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[t][p]`: samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

/// One-vs-rest tallies for a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

pub fn confusion_matrix(truth: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::Argument(format!("{} labels vs {} predictions", truth.len(), predicted.len())));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= k || p >= k {
            return Err(Error::Argument(format!("label pair ({t}, {p}) outside [0, {k})")));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn tally(&self, class: usize) -> Tally {
        let tp = self.counts[class][class];
        let predicted: u64 = self.counts.iter().map(|r| r[class]).sum();
        let fp = predicted - tp;
        let fn_ = self.support(class) - tp;
        let tn = self.total() - tp - fp - fn_;
        Tally { tp, fp, tn, fn_ }
    }

    /// Integer grid with class-name headers; columns are predictions.
    pub fn to_text(&self, names: &[&str]) -> String {
        let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(6) + 1;
        let mut s = format!("{:width$}", "true\\pred");
        for n in names {
            write!(s, "{n:>width$}").unwrap();
        }
        s.push('\n');
        for (row, n) in self.counts.iter().zip(names) {
            write!(s, "{n:width$}").unwrap();
            for v in row {
                write!(s, "{v:>width$}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Inverse of [`ConfusionMatrix::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let counts = text
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .skip(1)
                    .map(|v| v.parse::<u64>().map_err(|_| Error::Data(format!("bad confusion count `{v}`"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if counts.iter().any(|r| r.len() != counts.len()) {
            return Err(Error::Data("confusion matrix is not square".into()));
        }
        Ok(ConfusionMatrix { counts })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub support: u64,
    pub tally: Tally,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    pub zero_division: Vec<String>,
}

/// Accuracy plus support-weighted one-vs-rest metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: u64,
    pub accuracy: f64,
    /// Mean of per-class recalls.
    pub balanced_accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub weighted_specificity: f64,
    pub per_class: Vec<ClassMetrics>,
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64, what: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(what.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix, names: &[&str]) -> Result<Self> {
        let total = cm.total();
        if total == 0 {
            return Err(Error::Argument("cannot score an empty test set".into()));
        }
        if names.len() != cm.classes() {
            return Err(Error::Argument(format!("{} class names for {} classes", names.len(), cm.classes())));
        }
        let per_class: Vec<ClassMetrics> = (0..cm.classes())
            .map(|c| {
                let t = cm.tally(c);
                let mut flags = Vec::new();
                let precision = ratio(t.tp, t.tp + t.fp, "precision", &mut flags);
                let recall = ratio(t.tp, t.tp + t.fn_, "recall", &mut flags);
                let specificity = ratio(t.tn, t.tn + t.fp, "specificity", &mut flags);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    flags.push("f1".into());
                    0.0
                };
                ClassMetrics {
                    class: names[c].to_string(),
                    support: t.tp + t.fn_,
                    tally: t,
                    precision,
                    recall,
                    f1,
                    specificity,
                    zero_division: flags,
                }
            })
            .collect();
        let weighted = |f: fn(&ClassMetrics) -> f64| {
            per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64
        };
        let balanced_accuracy = per_class.iter().map(|m| m.recall).sum::<f64>() / per_class.len() as f64;
        Ok(MetricsReport {
            samples: total,
            accuracy: cm.trace() as f64 / total as f64,
            balanced_accuracy,
            weighted_precision: weighted(|m| m.precision),
            weighted_recall: weighted(|m| m.recall),
            weighted_f1: weighted(|m| m.f1),
            weighted_specificity: weighted(|m| m.specificity),
            zero_division: per_class.iter().any(|m| !m.zero_division.is_empty()),
            per_class,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_class_hand_example() {
        let cm = ConfusionMatrix { counts: vec![vec![8, 2], vec![3, 7]] };
        let r = MetricsReport::from_confusion(&cm, &["a", "b"]).unwrap();
        let c0 = &r.per_class[0];
        assert!((c0.precision - 8.0 / 11.0).abs() < 1e-15);
        assert!((c0.recall - 0.8).abs() < 1e-15);
        assert!((c0.f1 - 2.0 * (8.0 / 11.0) * 0.8 / (8.0 / 11.0 + 0.8)).abs() < 1e-15);
        assert!((c0.f1 - 0.7619).abs() < 1e-4);
        assert!((c0.specificity - 0.7).abs() < 1e-15);
        assert_eq!(r.accuracy, 0.75);
        assert!((r.balanced_accuracy - 0.75).abs() < 1e-15);
    }

    #[test]
    fn perfect_diagonal_scores_one() {
        let cm = confusion_matrix(&[0, 1, 2, 3, 4, 4], &[0, 1, 2, 3, 4, 4], 5).unwrap();
        let r = MetricsReport::from_confusion(&cm, &["a", "b", "c", "d", "e"]).unwrap();
        for v in [r.accuracy, r.weighted_precision, r.weighted_recall, r.weighted_f1, r.weighted_specificity] {
            assert_eq!(v, 1.0);
        }
        assert!(!r.zero_division);
    }

    #[test]
    fn shifted_predictions_have_empty_diagonal() {
        let truth: Vec<usize> = (0..20).map(|i| i % 5).collect();
        let pred: Vec<usize> = truth.iter().map(|t| (t + 1) % 5).collect();
        let cm = confusion_matrix(&truth, &pred, 5).unwrap();
        assert_eq!(cm.trace(), 0);
        assert_eq!(cm.total(), 20);
        assert!(confusion_matrix(&[5], &[0], 5).is_err());
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let cm = confusion_matrix(&[0, 0, 1], &[0, 0, 0], 3).unwrap();
        let r = MetricsReport::from_confusion(&cm, &["a", "b", "c"]).unwrap();
        assert!(r.zero_division);
        assert_eq!(r.per_class[1].precision, 0.0);
        assert!(r.per_class[1].zero_division.contains(&"precision".to_string()));
        assert!(r.per_class[2].zero_division.contains(&"recall".to_string()));
        let empty = ConfusionMatrix { counts: vec![vec![0; 2]; 2] };
        assert!(matches!(MetricsReport::from_confusion(&empty, &["a", "b"]), Err(Error::Argument(_))));
    }

    #[test]
    fn random_tallies_and_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = rng.random_range(1..500);
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..5)).collect();
            let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..5)).collect();
            let cm = confusion_matrix(&truth, &pred, 5).unwrap();
            for t in 0..5 {
                for p in 0..5 {
                    let count = truth.iter().zip(&pred).filter(|&(&a, &b)| a == t && b == p).count() as u64;
                    assert_eq!(cm.counts[t][p], count);
                }
            }
            let r = MetricsReport::from_confusion(&cm, &["a", "b", "c", "d", "e"]).unwrap();
            assert!((r.weighted_recall - r.accuracy).abs() < 1e-12);
            for m in &r.per_class {
                if m.precision > 0.0 && m.recall > 0.0 {
                    let h = 2.0 / (1.0 / m.precision + 1.0 / m.recall);
                    assert!((m.f1 - h).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let cm = confusion_matrix(&[0, 1, 1, 2], &[0, 1, 2, 2], 3).unwrap();
        let text = cm.to_text(&["Sanaani", "Hadhrami", "Lahji"]);
        assert_eq!(ConfusionMatrix::from_text(&text).unwrap(), cm);
    }
}
