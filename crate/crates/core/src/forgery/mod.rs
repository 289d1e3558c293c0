//! Synthetic frame-duplication forgeries with frame-level ground truth.

mod corpus;
mod synth;

pub use corpus::{
    build_corpus, generate_corpus, load_corpus, read_manifest, read_truth, CorpusEntry, CorpusItem,
    CorpusParams, GapPlacement, Manifest,
};
pub use synth::{synth_clip, SynthParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{FrameBuffer, VideoClip};

/// One duplication: copy `length` frames starting at `source_start` and
/// insert the copy before input frame `insert_at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManipulationSpec {
    pub source_start: usize,
    pub length: usize,
    pub insert_at: usize,
    /// Standard deviation of Gaussian noise added to every copied sample.
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameLabel {
    Pristine,
    SelectedOriginal,
    Duplicated,
}

/// Per-frame labels plus the two inclusive intervals of a duplication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthMask {
    pub labels: Vec<FrameLabel>,
    pub selected_range: Option<(usize, usize)>,
    pub duplicated_range: Option<(usize, usize)>,
}

impl TruthMask {
    pub fn pristine(n: usize) -> Self {
        Self {
            labels: vec![FrameLabel::Pristine; n],
            selected_range: None,
            duplicated_range: None,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_manipulated(&self) -> bool {
        self.duplicated_range.is_some()
    }

    /// Frames strictly between the two runs, if both exist.
    pub fn gap(&self) -> Option<usize> {
        let (s, d) = (self.selected_range?, self.duplicated_range?);
        let (first, second) = if s.0 < d.0 { (s, d) } else { (d, s) };
        Some(second.0 - first.1 - 1)
    }
}

/// Builds the manipulated clip and its ground truth.
pub fn apply_duplication(clip: &VideoClip, spec: &ManipulationSpec) -> Result<(VideoClip, TruthMask)> {
    let n = clip.len();
    let (s, len, p) = (spec.source_start, spec.length, spec.insert_at);
    if len == 0 {
        return Err(Error::InvalidParameter("duplication length must be >= 1".into()));
    }
    if s + len > n || p > n {
        return Err(Error::RangeOutOfBounds {
            start: s.min(p),
            end: (s + len).max(p),
            frames: n,
        });
    }
    if p > s && p < s + len {
        return Err(Error::OverlapViolation {
            insert_at: p,
            start: s,
            end: s + len,
        });
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let copies: Vec<FrameBuffer> = clip.frames()[s..s + len]
        .iter()
        .map(|f| {
            let mut f = f.clone();
            if spec.noise_sigma > 0.0 {
                for v in f.data_mut() {
                    *v = (f64::from(*v) + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
                }
            }
            f
        })
        .collect();

    let mut frames = Vec::with_capacity(n + len);
    frames.extend_from_slice(&clip.frames()[..p]);
    frames.extend(copies);
    frames.extend_from_slice(&clip.frames()[p..]);

    let duplicated = (p, p + len - 1);
    let selected = if p <= s {
        (s + len, s + 2 * len - 1)
    } else {
        (s, s + len - 1)
    };
    let mut labels = vec![FrameLabel::Pristine; n + len];
    labels[duplicated.0..=duplicated.1].fill(FrameLabel::Duplicated);
    labels[selected.0..=selected.1].fill(FrameLabel::SelectedOriginal);

    let out = VideoClip::new(frames, clip.fps(), clip.source_id())?;
    Ok((
        out,
        TruthMask {
            labels,
            selected_range: Some(selected),
            duplicated_range: Some(duplicated),
        },
    ))
}

/// Hard cut from `a` to `b`. Returns the joined clip and the boundary index
/// of the cut (`a.len() - 1`).
pub fn synthesize_shot_break(a: &VideoClip, b: &VideoClip) -> Result<(VideoClip, usize)> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            index: a.len(),
            expected: a.shape(),
            got: b.shape(),
        });
    }
    let mut frames = a.frames().to_vec();
    frames.extend_from_slice(b.frames());
    let joined = VideoClip::new(frames, a.fps(), format!("{}+{}", a.source_id(), b.source_id()))?;
    Ok((joined, a.len() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(n: usize) -> VideoClip {
        let frames = (0..n)
            .map(|i| FrameBuffer::new(2, 1, 1, vec![(i % 256) as u8, (i / 256) as u8]).unwrap())
            .collect();
        VideoClip::new(frames, 30.0, "n").unwrap()
    }

    fn spec(s: usize, l: usize, p: usize) -> ManipulationSpec {
        ManipulationSpec {
            source_start: s,
            length: l,
            insert_at: p,
            noise_sigma: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn insertion_after_source() {
        let src = numbered(300);
        let (out, truth) = apply_duplication(&src, &spec(60, 30, 200)).unwrap();
        assert_eq!(out.len(), 330);
        for k in 0..30 {
            assert_eq!(out.frame(200 + k), src.frame(60 + k));
        }
        assert_eq!(out.frame(230), src.frame(200));
        assert_eq!(truth.duplicated_range, Some((200, 229)));
        assert_eq!(truth.selected_range, Some((60, 89)));
        assert_eq!(truth.gap(), Some(110));
        let dups = truth.labels.iter().filter(|&&l| l == FrameLabel::Duplicated).count();
        let sel = truth.labels.iter().filter(|&&l| l == FrameLabel::SelectedOriginal).count();
        assert_eq!((dups, sel), (30, 30));
    }

    #[test]
    fn insertion_before_source_shifts_it() {
        let src = numbered(100);
        let (out, truth) = apply_duplication(&src, &spec(50, 10, 20)).unwrap();
        assert_eq!(truth.duplicated_range, Some((20, 29)));
        assert_eq!(truth.selected_range, Some((60, 69)));
        assert_eq!(out.frame(20), out.frame(60));
        assert_eq!(truth.gap(), Some(30));
    }

    #[test]
    fn adjacent_insertions_have_zero_gap() {
        let src = numbered(100);
        let (_, after) = apply_duplication(&src, &spec(50, 10, 60)).unwrap();
        let (_, before) = apply_duplication(&src, &spec(50, 10, 50)).unwrap();
        assert_eq!(after.gap(), Some(0));
        assert_eq!(before.gap(), Some(0));
    }

    #[test]
    fn overlap_and_bounds() {
        let src = numbered(100);
        assert!(matches!(
            apply_duplication(&src, &spec(50, 10, 55)),
            Err(Error::OverlapViolation { insert_at: 55, .. })
        ));
        assert!(matches!(
            apply_duplication(&src, &spec(95, 10, 0)),
            Err(Error::RangeOutOfBounds { .. })
        ));
        assert!(apply_duplication(&src, &spec(10, 10, 101)).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let src = numbered(50);
        let noisy = ManipulationSpec { noise_sigma: 4.0, ..spec(0, 10, 30) };
        let (a, _) = apply_duplication(&src, &noisy).unwrap();
        let (b, _) = apply_duplication(&src, &noisy).unwrap();
        assert_eq!(a, b);
        assert!((30..40).any(|k| a.frame(k) != src.frame(k - 30)));
    }

    #[test]
    fn shot_break_index() {
        let (joined, cut) = synthesize_shot_break(&numbered(50), &numbered(70)).unwrap();
        assert_eq!((joined.len(), cut), (120, 49));
        let other = VideoClip::new(vec![FrameBuffer::filled(3, 1, 1, 0).unwrap()], 30.0, "o").unwrap();
        assert!(matches!(
            synthesize_shot_break(&numbered(5), &other),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
