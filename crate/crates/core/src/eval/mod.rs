//! Detection and localization scoring against ground truth.

mod bar;
mod metrics;

pub use bar::{confusion_bar, Cell, ConfusionBar};
pub use metrics::{mcc, roc_auc, trapezoid_area, ConfusionCounts, RocCurve};

use serde::{Deserialize, Serialize};

use crate::detect::{detect, DetectConfig, DetectionReport};
use crate::error::Result;
use crate::forgery::{CorpusEntry, FrameLabel, TruthMask};
use crate::localize::{
    inconsistency_series, localize, score_boundaries, LocalizationResult, ScorerSpec,
    DEFAULT_LAMBDA, DEFAULT_WIND,
};
use crate::media::{VideoClip, MIN_PIPELINE_FRAMES};
use crate::par;

/// Clips faster than this are not scored.
pub const MAX_SCORED_FPS: f64 = 220.0;

/// Whether a clip is excluded from video-level scoring.
pub fn video_opt_out(clip: &VideoClip) -> bool {
    clip.len() < MIN_PIPELINE_FRAMES || clip.fps() > MAX_SCORED_FPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub detect: DetectConfig,
    pub scorer: ScorerSpec,
    pub lambda: f64,
    pub wind: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            detect: DetectConfig::default(),
            scorer: ScorerSpec::default(),
            lambda: DEFAULT_LAMBDA,
            wind: DEFAULT_WIND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalizationClass {
    Correct,
    Incorrect,
    /// The copy abuts its source, so no boundary separates them.
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary {
    pub id: String,
    pub manipulated: bool,
    pub optout: bool,
    /// Best `f_video`; null when nothing was found.
    pub video_score: Option<f64>,
    pub min_distance: Option<f64>,
    /// Both runs of the best match equal the two truth ranges.
    pub ranges_exact: Option<bool>,
    pub localization: Option<LocalizationClass>,
    pub located: Option<LocalizationResult>,
    pub mcc: Option<f64>,
    pub counts: Option<ConfusionCounts>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalizationTally {
    pub correct: usize,
    pub incorrect: usize,
    pub ambiguous: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Null when the scored clips hold only one class.
    pub video_auc: Option<f64>,
    pub frame_auc: Option<f64>,
    /// Mean localization MCC over manipulated, scored clips.
    pub mean_mcc: Option<f64>,
    pub localization: LocalizationTally,
    pub items: Vec<ItemSummary>,
}

struct ItemOutcome {
    summary: ItemSummary,
    frame_pairs: Vec<(f64, bool)>,
}

fn overlap(a: (usize, usize), b: (usize, usize)) -> usize {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if lo > hi {
        0
    } else {
        hi - lo + 1
    }
}

/// Correct when the chosen run covers more of the true copy than of its
/// source.
pub fn classify_localization(truth: &TruthMask, located: Option<&LocalizationResult>) -> Option<LocalizationClass> {
    let (dup, sel) = (truth.duplicated_range?, truth.selected_range?);
    if truth.gap() == Some(0) {
        return Some(LocalizationClass::Ambiguous);
    }
    let Some(loc) = located else {
        return Some(LocalizationClass::Incorrect);
    };
    if overlap(loc.duplicated_range, dup) > overlap(loc.duplicated_range, sel) {
        Some(LocalizationClass::Correct)
    } else {
        Some(LocalizationClass::Incorrect)
    }
}

fn ranges_exact(truth: &TruthMask, report: &DetectionReport) -> Option<bool> {
    let (dup, sel) = (truth.duplicated_range?, truth.selected_range?);
    let Some(m) = report.matches.first() else {
        return Some(false);
    };
    let mut want = [dup, sel];
    want.sort();
    Some([m.first_range(), m.second_range()] == want)
}

fn evaluate_item(entry: &CorpusEntry, cfg: &EvalConfig) -> Result<ItemOutcome> {
    let manipulated = entry.truth.is_manipulated();
    let mut summary = ItemSummary {
        id: entry.item.id.clone(),
        manipulated,
        optout: video_opt_out(&entry.clip),
        video_score: None,
        min_distance: None,
        ranges_exact: None,
        localization: None,
        located: None,
        mcc: None,
        counts: None,
    };
    if summary.optout {
        return Ok(ItemOutcome {
            summary,
            frame_pairs: Vec::new(),
        });
    }

    let report = detect(&entry.clip, &cfg.detect)?;
    summary.video_score = report.video_score.is_finite().then_some(report.video_score);
    summary.min_distance = report.min_distance();
    let frame_pairs = report
        .frame_scores
        .iter()
        .zip(&entry.truth.labels)
        .map(|(&d, &l)| (-d, l != FrameLabel::Pristine))
        .collect();

    if manipulated {
        summary.ranges_exact = ranges_exact(&entry.truth, &report);
        let located = match report.matches.first() {
            Some(m) => {
                let scores = score_boundaries(&entry.clip, &cfg.scorer)?;
                Some(localize(m, &inconsistency_series(&scores, cfg.lambda), cfg.wind))
            }
            None => None,
        };
        let predicted: Vec<(usize, usize)> = located.iter().map(|l| l.duplicated_range).collect();
        let bar = confusion_bar(&entry.truth, &predicted, None)?;
        summary.mcc = Some(mcc(&bar.counts));
        summary.counts = Some(bar.counts);
        summary.localization = classify_localization(&entry.truth, located.as_ref());
        summary.located = located;
    }
    Ok(ItemOutcome {
        summary,
        frame_pairs,
    })
}

/// Runs detection and localization over every entry. Items are evaluated
/// in parallel and reported in id order.
pub fn evaluate_corpus(entries: &[CorpusEntry], cfg: &EvalConfig) -> Result<Summary> {
    cfg.detect.validate()?;
    let mut outcomes = par::map_slice(entries, |e| evaluate_item(e, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by(|a, b| a.summary.id.cmp(&b.summary.id));

    let video_pairs: Vec<(f64, bool)> = outcomes
        .iter()
        .filter(|o| !o.summary.optout)
        .map(|o| (o.summary.video_score.unwrap_or(f64::NEG_INFINITY), o.summary.manipulated))
        .collect();
    let frame_pairs: Vec<(f64, bool)> = outcomes.iter().flat_map(|o| o.frame_pairs.iter().copied()).collect();
    let auc = |pairs: &[(f64, bool)]| roc_auc(pairs).ok().map(|r| r.auc);

    let mccs: Vec<f64> = outcomes.iter().filter_map(|o| o.summary.mcc).collect();
    let mean_mcc = (!mccs.is_empty()).then(|| mccs.iter().sum::<f64>() / mccs.len() as f64);

    let mut localization = LocalizationTally::default();
    for o in &outcomes {
        match o.summary.localization {
            Some(LocalizationClass::Correct) => localization.correct += 1,
            Some(LocalizationClass::Incorrect) => localization.incorrect += 1,
            Some(LocalizationClass::Ambiguous) => localization.ambiguous += 1,
            None => {}
        }
    }
    Ok(Summary {
        video_auc: auc(&video_pairs),
        frame_auc: auc(&frame_pairs),
        mean_mcc,
        localization,
        items: outcomes.into_iter().map(|o| o.summary).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fine::make_match;
    use crate::localize::Decision;

    fn truth(dup: (usize, usize), sel: (usize, usize)) -> TruthMask {
        let mut t = TruthMask::pristine(200);
        t.labels[dup.0..=dup.1].fill(FrameLabel::Duplicated);
        t.labels[sel.0..=sel.1].fill(FrameLabel::SelectedOriginal);
        t.duplicated_range = Some(dup);
        t.selected_range = Some(sel);
        t
    }

    fn located(dup: (usize, usize), sel: (usize, usize)) -> LocalizationResult {
        LocalizationResult {
            duplicated_range: dup,
            selected_range: sel,
            s1: 0.0,
            s2: 0.0,
            decided_by: Decision::S2GeS1,
        }
    }

    #[test]
    fn localization_taxonomy() {
        let t = truth((100, 119), (20, 39));
        let right = located((100, 119), (20, 39));
        let wrong = located((20, 39), (100, 119));
        assert_eq!(classify_localization(&t, Some(&right)), Some(LocalizationClass::Correct));
        assert_eq!(classify_localization(&t, Some(&wrong)), Some(LocalizationClass::Incorrect));
        assert_eq!(classify_localization(&t, None), Some(LocalizationClass::Incorrect));
        let adjacent = truth((40, 59), (20, 39));
        assert_eq!(classify_localization(&adjacent, Some(&right)), Some(LocalizationClass::Ambiguous));
        assert_eq!(classify_localization(&TruthMask::pristine(10), None), None);
    }

    #[test]
    fn exact_ranges_ignore_order() {
        let t = truth((100, 119), (20, 39));
        let report = DetectionReport {
            source_id: "x".into(),
            n_frames: 200,
            matches: vec![make_match(20, 100, 0.0, 0, 19, 1e-6).unwrap()],
            frame_scores: vec![1.0; 200],
            video_score: 1.0,
            t1: 0.1,
            candidates: vec![],
        };
        assert_eq!(ranges_exact(&t, &report), Some(true));
    }

    #[test]
    fn opt_out_rules() {
        use crate::media::FrameBuffer;
        let f = FrameBuffer::filled(2, 2, 1, 0).unwrap();
        assert!(video_opt_out(&VideoClip::new(vec![f.clone(); 16], 30.0, "a").unwrap()));
        assert!(video_opt_out(&VideoClip::new(vec![f.clone(); 40], 240.0, "b").unwrap()));
        assert!(!video_opt_out(&VideoClip::new(vec![f; 17], 220.0, "c").unwrap()));
    }
}
