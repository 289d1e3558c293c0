//! The coarse-to-fine detection pipeline.

use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::coarse::{
    candidate_pairs, plan_windows, sequence_distance_matrix, CandidatePair, T1Mode,
    WindowingPlan, DEFAULT_OVERLAP, DEFAULT_WINDOW_LENGTH,
};
use crate::embed::{embed_frames, embed_windows, EmbedderSpec, EmbeddingSeries};
use crate::error::{Error, Result};
use crate::fine::{
    argmin_cells, cosine_distance, extend_run, frame_distance_matrix, make_match, DistanceLookup,
    DuplicationMatch, FrameDistanceMatrix, DEFAULT_D_FLOOR, DEFAULT_EPS, DEFAULT_MAX_EVENTS,
    DEFAULT_NEAR_BAND, DEFAULT_T2,
};
use crate::media::VideoClip;
use crate::par;

/// Detection parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    /// Per-frame embedder for the fine stage.
    pub embedder: EmbedderSpec,
    /// Window embedder for the coarse stage; defaults to pooling `embedder`.
    pub coarse_embedder: Option<EmbedderSpec>,
    pub window_length: usize,
    pub overlap: usize,
    pub t1: T1Mode,
    pub min_window_gap: usize,
    pub t2: f64,
    pub eps: f64,
    pub near_band: usize,
    pub max_events: usize,
    pub d_floor: f64,
    /// Skip the coarse stage and search the whole frame matrix.
    pub exhaustive: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            embedder: EmbedderSpec::default(),
            coarse_embedder: None,
            window_length: DEFAULT_WINDOW_LENGTH,
            overlap: DEFAULT_OVERLAP,
            t1: T1Mode::default(),
            min_window_gap: 1,
            t2: DEFAULT_T2,
            eps: DEFAULT_EPS,
            near_band: DEFAULT_NEAR_BAND,
            max_events: DEFAULT_MAX_EVENTS,
            d_floor: DEFAULT_D_FLOOR,
            exhaustive: false,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        self.embedder.validate()?;
        if let Some(c) = &self.coarse_embedder {
            c.validate()?;
        }
        self.t1.validate()?;
        if self.window_length < 2 || self.overlap >= self.window_length {
            return bad("need window_length >= 2 and overlap < window_length");
        }
        if !(self.t2 > 0.0 && self.t2 <= 1.0) {
            return bad("t2 must be in (0, 1]");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps must be in (0, 1)");
        }
        if self.max_events == 0 {
            return bad("max_events must be >= 1");
        }
        if self.d_floor.is_nan() || self.d_floor <= 0.0 {
            return bad("d_floor must be positive");
        }
        if self.min_window_gap == 0 {
            return bad("min_window_gap must be >= 1");
        }
        Ok(())
    }

    fn coarse_spec(&self) -> &EmbedderSpec {
        self.coarse_embedder.as_ref().unwrap_or(&self.embedder)
    }
}

/// Everything the detector found in one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub source_id: String,
    pub n_frames: usize,
    /// Best first: descending `f_video`, then `(i_min, j_min)`.
    pub matches: Vec<DuplicationMatch>,
    /// Per frame, the smallest fine distance to any frame outside its near band.
    pub frame_scores: Vec<f64>,
    /// Best `f_video`; negative infinity when nothing passed `t2`.
    #[serde(with = "neg_inf_as_null")]
    pub video_score: f64,
    pub t1: f64,
    pub candidates: Vec<CandidatePair>,
}

impl DetectionReport {
    pub fn is_manipulated(&self, threshold: f64) -> bool {
        self.video_score > threshold
    }

    /// Smallest `d_min` over all matches.
    pub fn min_distance(&self) -> Option<f64> {
        self.matches.iter().map(|m| m.d_min).min_by(f64::total_cmp)
    }
}

mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

/// Whole-video distances computed on demand, with cells of earlier events
/// blocked out.
struct VideoLookup<'a> {
    frames: &'a EmbeddingSeries,
    blocked: &'a [Block],
}

/// Rectangle of `(row, col)` cells excluded from further search.
#[derive(Debug, Clone, Copy)]
struct Block {
    rows: (usize, usize),
    cols: (usize, usize),
}

impl Block {
    fn around(m: &DuplicationMatch, n: usize) -> Self {
        let (a0, a1) = m.first_range();
        let (b0, b1) = m.second_range();
        let pad = m.l;
        Block {
            rows: (a0.saturating_sub(pad), (a1 + pad).min(n - 1)),
            cols: (b0.saturating_sub(pad), (b1 + pad).min(n - 1)),
        }
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        (self.rows.0..=self.rows.1).contains(&i) && (self.cols.0..=self.cols.1).contains(&j)
    }
}

impl DistanceLookup for VideoLookup<'_> {
    fn distance(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.frames.len();
        if i >= n || j >= n || self.blocked.iter().any(|b| b.contains(i, j)) {
            return None;
        }
        Some(cosine_distance(self.frames.row(i), self.frames.row(j)))
    }
}

/// Extracts up to `max_events` runs from one candidate matrix. Runs are
/// grown across the whole video, not just the candidate windows.
fn search_candidate(
    m: &FrameDistanceMatrix,
    frames: &EmbeddingSeries,
    cfg: &DetectConfig,
) -> Result<Vec<DuplicationMatch>> {
    let mut blocked: Vec<Block> = Vec::new();
    let mut found = Vec::new();
    while found.len() < cfg.max_events {
        let Some((i, j, d)) =
            argmin_cells(m, cfg.near_band, |i, j| !blocked.iter().any(|b| b.contains(i, j)))
        else {
            break;
        };
        if d >= cfg.t2 {
            break;
        }
        let lookup = VideoLookup {
            frames,
            blocked: &blocked,
        };
        let (k1, k2) = extend_run(&lookup, i, j, d, cfg.eps);
        let hit = make_match(i, j, d, k1, k2, cfg.d_floor)?;
        blocked.push(Block::around(&hit, frames.len()));
        found.push(hit);
    }
    Ok(found)
}

fn ranges_intersect(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Orders matches best first and drops those describing an event already
/// kept (both runs overlapping a better match's runs).
fn merge_matches(mut all: Vec<DuplicationMatch>, max_events: usize) -> Vec<DuplicationMatch> {
    all.sort_by(|x, y| {
        y.f_video
            .total_cmp(&x.f_video)
            .then(x.i_min.cmp(&y.i_min))
            .then(x.j_min.cmp(&y.j_min))
    });
    let mut kept: Vec<DuplicationMatch> = Vec::new();
    for m in all {
        let same_event = kept.iter().any(|k| {
            ranges_intersect(k.first_range(), m.first_range())
                && ranges_intersect(k.second_range(), m.second_range())
        });
        if !same_event {
            kept.push(m);
        }
        if kept.len() == max_events {
            break;
        }
    }
    kept
}

/// Intermediate products of a detection run, for reports and plots.
#[derive(Debug, Clone)]
pub struct DetectionTrace {
    pub plan: WindowingPlan,
    pub frame_embeddings: EmbeddingSeries,
    pub sequence_matrix: crate::coarse::SequenceDistanceMatrix,
    pub fine_matrices: Vec<FrameDistanceMatrix>,
}

/// Runs the coarse and fine stages over `clip`.
pub fn detect(clip: &VideoClip, cfg: &DetectConfig) -> Result<DetectionReport> {
    detect_traced(clip, cfg).map(|(r, _)| r)
}

pub fn detect_traced(clip: &VideoClip, cfg: &DetectConfig) -> Result<(DetectionReport, DetectionTrace)> {
    cfg.validate()?;
    clip.require_pipeline_length()?;
    let n = clip.len();
    let frames = embed_frames(clip, &cfg.embedder)?;

    let plan = plan_windows(n, cfg.window_length, cfg.overlap)?;
    let windows = embed_windows(clip, &plan.windows, cfg.coarse_spec(), Some(plan.shape()))?;
    let seq = sequence_distance_matrix(&windows)?;

    // a lone window has no partner, so it is searched against itself
    let (t1, candidates, regions) = if cfg.exhaustive || plan.len() == 1 {
        (f64::INFINITY, Vec::new(), vec![(0..n, 0..n)])
    } else {
        let t1 = cfg.t1.resolve(&seq, cfg.min_window_gap);
        let candidates = candidate_pairs(&seq, t1, cfg.min_window_gap)?;
        let regions = candidates
            .iter()
            .map(|c| {
                let (a0, a1) = plan.range(c.window_a);
                let (b0, b1) = plan.range(c.window_b);
                (a0..a1, b0..b1)
            })
            .collect();
        (t1, candidates, regions)
    };

    debug!(
        source = clip.source_id(),
        frames = n,
        windows = plan.len(),
        t1,
        candidates = candidates.len(),
        "coarse stage done"
    );

    let matrices = par::map_slice(&regions, |(rows, cols)| {
        frame_distance_matrix(&frames, rows.clone(), cols.clone())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let per_region = par::map_slice(&matrices, |m| search_candidate(m, &frames, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let matches = merge_matches(per_region.into_iter().flatten().collect(), cfg.max_events);

    let mut frame_scores = vec![1.0f64; n];
    for m in &matrices {
        for i in m.rows.clone() {
            for j in m.cols.clone() {
                if i.abs_diff(j) <= cfg.near_band {
                    continue;
                }
                let d = m.get(i, j).expect("inside matrix");
                frame_scores[i] = frame_scores[i].min(d);
                frame_scores[j] = frame_scores[j].min(d);
            }
        }
    }

    let video_score = matches.first().map_or(f64::NEG_INFINITY, |m| m.f_video);
    debug!(source = clip.source_id(), matches = matches.len(), video_score, "fine stage done");
    let report = DetectionReport {
        source_id: clip.source_id().to_string(),
        n_frames: n,
        matches,
        frame_scores,
        video_score,
        t1,
        candidates,
    };
    let trace = DetectionTrace {
        plan,
        frame_embeddings: frames,
        sequence_matrix: seq,
        fine_matrices: matrices,
    };
    Ok((report, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(i: usize, j: usize, k2: usize, d: f64) -> DuplicationMatch {
        make_match(i, j, d, 0, k2, 1e-6).unwrap()
    }

    #[test]
    fn merge_drops_shifted_duplicates_of_one_event() {
        let best = m(10, 110, 29, 0.0);
        let shifted = m(11, 110, 20, 0.02);
        let other = m(200, 300, 9, 0.01);
        let out = merge_matches(vec![other, shifted, best], 4);
        assert_eq!(out, vec![best, other]);
        assert_eq!(merge_matches(vec![other, best], 1), vec![best]);
    }

    #[test]
    fn report_json_uses_null_for_no_match() {
        let r = DetectionReport {
            source_id: "x".into(),
            n_frames: 20,
            matches: vec![],
            frame_scores: vec![1.0; 20],
            video_score: f64::NEG_INFINITY,
            t1: 0.5,
            candidates: vec![],
        };
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"video_score\":null"));
        let back: DetectionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.video_score, f64::NEG_INFINITY);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<DetectConfig>(r#"{"t2":0.1,"bogus":1}"#).is_err());
        let c: DetectConfig = serde_json::from_str(r#"{"t2":0.1}"#).unwrap();
        assert_eq!(c.t2, 0.1);
        assert_eq!(c.window_length, 64);
        let bad = DetectConfig { eps: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
