use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frame-level confusion counts. `optout` frames are excluded from scoring.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub optout: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_ + self.optout
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
        self.optout += o.optout;
    }
}

/// Matthews correlation coefficient. Zero when any denominator factor is zero.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / denom.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Score threshold reached at each point after the first (`score >= t`).
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// ROC curve of `(score, is_positive)` pairs. Higher scores mean "more
/// positive". AUC is the Mann-Whitney statistic with midranks for ties.
pub fn roc_auc(scores: &[(f64, bool)]) -> Result<RocCurve> {
    if let Some(&(s, _)) = scores.iter().find(|(s, _)| s.is_nan()) {
        return Err(Error::NonFiniteScore(s));
    }
    let positives = scores.iter().filter(|(_, p)| *p).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            positives,
            negatives,
        });
    }

    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // rank sum of positives, counted in halves so it stays an exact integer
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let twice_midrank = (i + 1 + j) as u64;
        let pos_here = sorted[i..j].iter().filter(|(_, p)| *p).count() as u64;
        twice_rank_sum += twice_midrank * pos_here;
        i = j;
    }
    let p = positives as u64;
    let twice_u = twice_rank_sum - p * (p + 1);
    let auc = twice_u as f64 / (2 * p * negatives as u64) as f64;

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = sorted.len();
    while k > 0 {
        let t = sorted[k - 1].0;
        while k > 0 && sorted[k - 1].0 == t {
            if sorted[k - 1].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k -= 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        thresholds.push(t);
    }
    Ok(RocCurve {
        points,
        thresholds,
        auc,
    })
}

/// Trapezoidal area under a curve's points.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(tp: u64, fp: u64, tn: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts {
            tp,
            fp,
            tn,
            fn_,
            optout: 0,
        }
    }

    #[test]
    fn mcc_examples() {
        assert_eq!(mcc(&cc(10, 0, 10, 0)), 1.0);
        assert_eq!(mcc(&cc(5, 5, 5, 5)), 0.0);
        let expected = 40.0 / (7.0f64 * 8.0 * 8.0 * 9.0).sqrt();
        assert!((mcc(&cc(6, 1, 7, 2)) - expected).abs() < 1e-12);
        assert!((mcc(&cc(6, 1, 7, 2)) - 0.629_941).abs() < 1e-6);
        assert_eq!(mcc(&cc(0, 0, 10, 3)), 0.0);
    }

    #[test]
    fn auc_examples() {
        let perfect = [(0.9, true), (0.8, true), (0.1, false), (0.2, false)];
        let r = roc_auc(&perfect).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(trapezoid_area(&r.points), 1.0);
        assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));

        let tied = [(0.5, true), (0.5, false)];
        assert_eq!(roc_auc(&tied).unwrap().auc, 0.5);
        assert!(matches!(roc_auc(&[(1.0, true)]), Err(Error::SingleClass { .. })));
        assert!(matches!(
            roc_auc(&[(f64::NAN, true), (0.0, false)]),
            Err(Error::NonFiniteScore(_))
        ));
    }

    #[test]
    fn infinite_scores_rank_normally() {
        let r = roc_auc(&[(f64::NEG_INFINITY, false), (f64::NEG_INFINITY, true), (1.0, true)]).unwrap();
        assert_eq!(r.auc, 0.75);
    }
}
