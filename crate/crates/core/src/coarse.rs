//! Window-level search: overlapping windows, the window-to-window L2
//! distance matrix, and candidate window pairs.

use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingSeries, Granularity, WindowShape};
use crate::error::{Error, Result};
use crate::media::{require_frames, MIN_PIPELINE_FRAMES};
use crate::par;

pub const DEFAULT_WINDOW_LENGTH: usize = 64;
pub const DEFAULT_OVERLAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowingPlan {
    pub length: usize,
    pub overlap: usize,
    pub hop: usize,
    /// `(start, length)` of every window, in increasing start order.
    pub windows: Vec<(usize, usize)>,
}

impl WindowingPlan {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn shape(&self) -> WindowShape {
        WindowShape {
            length: self.length,
            hop: self.hop,
        }
    }

    /// Frame range `[start, end)` of window `w`.
    pub fn range(&self, w: usize) -> (usize, usize) {
        let (s, l) = self.windows[w];
        (s, s + l)
    }
}

/// Splits `n_frames` into windows of `length` frames sharing `overlap`
/// frames. A window that would overrun the clip is pulled back to end on the
/// last frame; clips shorter than `length` get one window spanning them.
pub fn plan_windows(n_frames: usize, length: usize, overlap: usize) -> Result<WindowingPlan> {
    require_frames(n_frames, MIN_PIPELINE_FRAMES)?;
    if length < 2 || overlap >= length {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= overlap < length and length >= 2, got length {length}, overlap {overlap}"
        )));
    }
    let hop = length - overlap;
    if n_frames < length {
        return Ok(WindowingPlan {
            length,
            overlap,
            hop,
            windows: vec![(0, n_frames)],
        });
    }
    let mut windows: Vec<(usize, usize)> = (0..)
        .map(|k| k * hop)
        .take_while(|s| s + length <= n_frames)
        .map(|s| (s, length))
        .collect();
    let last_end = windows.last().map_or(0, |&(s, l)| s + l);
    if last_end < n_frames {
        windows.push((n_frames - length, length));
    }
    Ok(WindowingPlan {
        length,
        overlap,
        hop,
        windows,
    })
}

/// Dense symmetric matrix of L2 distances between window embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDistanceMatrix {
    pub size: usize,
    /// Row-major `size x size`.
    pub values: Vec<f64>,
    pub metric: String,
}

impl SequenceDistanceMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.size + b]
    }

    /// Off-band entries `(a, b)` with `b - a >= min_gap`, in row-major order.
    pub fn off_band(&self, min_gap: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let gap = min_gap.max(1);
        (0..self.size).flat_map(move |a| {
            (a + gap..self.size).map(move |b| (a, b, self.get(a, b)))
        })
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise L2 distances. Each unordered pair is computed once and mirrored,
/// so the result is exactly symmetric with a zero diagonal.
pub fn sequence_distance_matrix(series: &EmbeddingSeries) -> Result<SequenceDistanceMatrix> {
    if series.granularity() != Granularity::PerWindow {
        return Err(Error::InvalidParameter(
            "sequence distances need per-window embeddings".into(),
        ));
    }
    let n = series.len();
    let upper = par::map_range(n, |a| {
        (a + 1..n)
            .map(|b| l2(series.row(a), series.row(b)))
            .collect::<Vec<_>>()
    });
    let mut values = vec![0.0; n * n];
    for (a, row) in upper.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let b = a + 1 + off;
            values[a * n + b] = d;
            values[b * n + a] = d;
        }
    }
    Ok(SequenceDistanceMatrix {
        size: n,
        values,
        metric: "L2".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub window_a: usize,
    pub window_b: usize,
    pub distance: f64,
}

/// How the window-distance threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum T1Mode {
    /// Percentile (0..=100) of the off-band matrix values, raised if needed
    /// so that at least `min_candidates` pairs pass.
    Percentile {
        percentile: f64,
        #[serde(default = "default_min_candidates")]
        min_candidates: usize,
    },
    Fixed { value: f64 },
}

impl Default for T1Mode {
    fn default() -> Self {
        T1Mode::Percentile {
            percentile: 5.0,
            min_candidates: DEFAULT_MIN_CANDIDATES,
        }
    }
}

/// Pairs kept regardless of the percentile. Pooled window statistics barely
/// move for short copies, so clips with few windows are searched almost
/// exhaustively; at 64-frame windows this costs about 65k frame distances.
pub const DEFAULT_MIN_CANDIDATES: usize = 16;

fn default_min_candidates() -> usize {
    DEFAULT_MIN_CANDIDATES
}

pub const T1_FLOOR: f64 = 1e-9;

impl T1Mode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            T1Mode::Percentile { percentile, .. } if (0.0..=100.0).contains(&percentile) => Ok(()),
            T1Mode::Fixed { value } if value > 0.0 => Ok(()),
            other => Err(Error::InvalidParameter(format!("invalid T1 setting {other:?}"))),
        }
    }

    /// Concrete threshold for `m`. Percentiles use linear interpolation
    /// between order statistics, floored at [`T1_FLOOR`]. When fewer than
    /// `min_candidates` values fall below it, the threshold moves just past
    /// the `min_candidates`-th smallest value.
    pub fn resolve(&self, m: &SequenceDistanceMatrix, min_gap: usize) -> f64 {
        match *self {
            T1Mode::Fixed { value } => value,
            T1Mode::Percentile {
                percentile,
                min_candidates,
            } => {
                let mut vals: Vec<f64> = m.off_band(min_gap).map(|(_, _, d)| d).collect();
                if vals.is_empty() {
                    return T1_FLOOR;
                }
                vals.sort_by(f64::total_cmp);
                let t = percentile_sorted(&vals, percentile).max(T1_FLOOR);
                let k = min_candidates.min(vals.len());
                if k > 0 && vals.partition_point(|&d| d < t) < k {
                    vals[k - 1].next_up().max(T1_FLOOR)
                } else {
                    t
                }
            }
        }
    }
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Window pairs closer than `t1`, sorted by distance then `(a, b)`.
pub fn candidate_pairs(
    m: &SequenceDistanceMatrix,
    t1: f64,
    min_window_gap: usize,
) -> Result<Vec<CandidatePair>> {
    if t1.is_nan() || t1 <= 0.0 {
        return Err(Error::InvalidParameter(format!("t1 must be positive, got {t1}")));
    }
    let mut out: Vec<CandidatePair> = m
        .off_band(min_window_gap)
        .filter(|&(_, _, d)| d < t1)
        .map(|(a, b, d)| CandidatePair {
            window_a: a,
            window_b: b,
            distance: d,
        })
        .collect();
    out.sort_by(|x, y| {
        x.distance
            .total_cmp(&y.distance)
            .then(x.window_a.cmp(&y.window_a))
            .then(x.window_b.cmp(&y.window_b))
    });
    Ok(out)
}
