//! Temporal localization: deciding which of two matched runs was inserted.
//!
//! Every boundary `t` (between frames `t` and `t + 1`) gets a triple of class
//! scores `(none, drop, break)`. They are folded into one inconsistency value
//! `s = drop + break - lambda * none`, and the run whose entering and leaving
//! boundaries carry more inconsistency is declared the duplicate.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fine::DuplicationMatch;
use crate::media::{read_embeddings, require_frames, TemporalDiffFrame, VideoClip, MIN_PIPELINE_FRAMES};
use crate::par;

pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_WIND: usize = 3;

/// Boundaries in the robust context around each scored boundary.
const CONTEXT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTriple {
    pub none: f64,
    pub drop: f64,
    #[serde(rename = "break")]
    pub brk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScores {
    pub triples: Vec<BoundaryTriple>,
}

impl BoundaryScores {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Parameters of the builtin discontinuity scorer.
///
/// A boundary's discontinuity `z` is its mean absolute intensity change,
/// centered on the median of the surrounding 16 boundaries and scaled by
/// their MAD. `z` is mapped through two logistic gates at `drop_z` and
/// `break_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinScorer {
    pub drop_z: f64,
    pub break_z: f64,
    pub softness: f64,
    /// Smallest spread used for standardizing, in gray levels.
    pub min_scale: f64,
}

impl Default for BuiltinScorer {
    fn default() -> Self {
        Self {
            drop_z: 3.0,
            break_z: 6.0,
            softness: 0.5,
            min_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScorerSpec {
    Builtin {
        #[serde(default)]
        params: BuiltinScorer,
    },
    /// `FDEB` file with `dim = 3` and one `(none, drop, break)` row per boundary.
    ExternalFile { path: PathBuf },
}

impl Default for ScorerSpec {
    fn default() -> Self {
        ScorerSpec::Builtin {
            params: BuiltinScorer::default(),
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

impl BuiltinScorer {
    /// Maps a discontinuity value to `(none, drop, break)`, summing to one.
    pub fn triple(&self, z: f64) -> BoundaryTriple {
        let past_drop = logistic((z - self.drop_z) / self.softness);
        let past_break = logistic((z - self.break_z) / self.softness);
        BoundaryTriple {
            none: 1.0 - past_drop,
            drop: past_drop * (1.0 - past_break),
            brk: past_drop * past_break,
        }
    }

    /// Standardized discontinuity of every boundary.
    pub fn discontinuities(&self, changes: &[f64]) -> Vec<f64> {
        let n = changes.len();
        let width = CONTEXT.min(n);
        par::map_range(n, |t| {
            let start = t.saturating_sub(CONTEXT / 2).min(n - width);
            let mut ctx = changes[start..start + width].to_vec();
            ctx.sort_by(f64::total_cmp);
            let med = median(&ctx);
            let mut dev: Vec<f64> = ctx.iter().map(|v| (v - med).abs()).collect();
            dev.sort_by(f64::total_cmp);
            let scale = (1.4826 * median(&dev)).max(0.1 * med).max(self.min_scale);
            (changes[t] - med) / scale
        })
    }
}

/// Mean absolute intensity change (gray levels) across every boundary.
pub fn boundary_changes(clip: &VideoClip) -> Vec<f64> {
    let frames = clip.frames();
    par::map_range(frames.len().saturating_sub(1), |t| {
        TemporalDiffFrame::between(&frames[t], &frames[t + 1]).energy() * 255.0
    })
}

/// Scores every boundary of `clip`.
pub fn score_boundaries(clip: &VideoClip, scorer: &ScorerSpec) -> Result<BoundaryScores> {
    require_frames(clip.len(), MIN_PIPELINE_FRAMES)?;
    match scorer {
        ScorerSpec::Builtin { params } => {
            let z = params.discontinuities(&boundary_changes(clip));
            Ok(BoundaryScores {
                triples: z.into_iter().map(|z| params.triple(z)).collect(),
            })
        }
        ScorerSpec::ExternalFile { path } => read_boundary_scores(path, clip.len() - 1),
    }
}

/// Reads externally produced class scores, one row per boundary.
pub fn read_boundary_scores(path: &Path, boundaries: usize) -> Result<BoundaryScores> {
    let series = read_embeddings(path)?;
    if series.dim() != 3 {
        return Err(Error::DimMismatch(3, series.dim()));
    }
    if series.len() != boundaries {
        return Err(Error::CountMismatch {
            expected: boundaries,
            got: series.len(),
        });
    }
    let triples = series
        .rows()
        .map(|r| {
            if r.iter().all(|v| v.is_finite()) {
                Ok(BoundaryTriple {
                    none: r[0],
                    drop: r[1],
                    brk: r[2],
                })
            } else {
                Err(Error::InvalidParameter("non-finite boundary score".into()))
            }
        })
        .collect::<Result<_>>()?;
    Ok(BoundaryScores { triples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencySeries {
    pub s: Vec<f64>,
    pub lambda: f64,
}

/// `s[t] = drop[t] + break[t] - lambda * none[t]`.
pub fn inconsistency_series(b: &BoundaryScores, lambda: f64) -> InconsistencySeries {
    InconsistencySeries {
        s: b
            .triples
            .iter()
            .map(|t| t.drop + t.brk - lambda * t.none)
            .collect(),
        lambda,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    S1GtS2,
    S2GeS1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    /// Inclusive frame range judged to be the inserted copy.
    pub duplicated_range: (usize, usize),
    pub selected_range: (usize, usize),
    pub s1: f64,
    pub s2: f64,
    pub decided_by: Decision,
}

/// Sum and count of `s` over `±wind` around the boundary entering the run
/// and the boundary leaving it. Out-of-range boundaries are skipped.
fn run_evidence(s: &[f64], start: usize, len: usize, wind: usize) -> (f64, usize) {
    let enter = start as i64 - 1;
    let leave = (start + len) as i64 - 1;
    let w = wind as i64;
    let mut total = 0.0;
    let mut count = 0;
    for k in -w..=w {
        for b in [enter + k, leave + k] {
            if b >= 0 && (b as usize) < s.len() {
                total += s[b as usize];
                count += 1;
            }
        }
    }
    (total, count)
}

/// Picks the inserted run of `m`. Ties go to the later run. When clipping at
/// the clip edges leaves the two runs with different term counts, their
/// means are compared instead of their sums.
pub fn localize(m: &DuplicationMatch, s: &InconsistencySeries, wind: usize) -> LocalizationResult {
    let first = m.first_range();
    let second = m.second_range();
    let (sum1, n1) = run_evidence(&s.s, first.0, m.l, wind);
    let (sum2, n2) = run_evidence(&s.s, second.0, m.l, wind);
    let (s1, s2) = if n1 == n2 {
        (sum1, sum2)
    } else {
        let mean = |sum: f64, n: usize| if n == 0 { 0.0 } else { sum / n as f64 };
        (mean(sum1, n1), mean(sum2, n2))
    };
    if s1 > s2 {
        LocalizationResult {
            duplicated_range: first,
            selected_range: second,
            s1,
            s2,
            decided_by: Decision::S1GtS2,
        }
    } else {
        LocalizationResult {
            duplicated_range: second,
            selected_range: first,
            s1,
            s2,
            decided_by: Decision::S2GeS1,
        }
    }
}
