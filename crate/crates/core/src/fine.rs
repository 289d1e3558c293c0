//! Frame-level search: normalized frame distances, diagonal run extraction
//! and the video-level confidence score.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingSeries;
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_EPS: f64 = 0.01;
/// Match gate. Exact and noisy copies of synthetic footage sit below 2e-4;
/// unrelated frames of the same clip stay above 0.04.
pub const DEFAULT_T2: f64 = 0.02;
pub const DEFAULT_D_FLOOR: f64 = 1e-6;
pub const DEFAULT_NEAR_BAND: usize = 8;
pub const DEFAULT_MAX_EVENTS: usize = 4;

/// `(1 - cos(a, b)) / 2`, in `[0, 1]`.
///
/// Identical vectors give exactly 0. Two zero vectors are treated as
/// identical; a zero vector against a non-zero one as orthogonal.
pub fn frame_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(a.len(), b.len()));
    }
    Ok(cosine_distance(a, b))
}

#[inline]
pub(crate) fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 && nb == 0.0 {
        return 0.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.5;
    }
    let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
    ((1.0 - cos) / 2.0).clamp(0.0, 1.0)
}

/// Dense distances between the frames in `rows` and the frames in `cols`,
/// both given as absolute frame ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDistanceMatrix {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    /// Row-major `rows.len() x cols.len()`.
    pub values: Vec<f64>,
}

impl FrameDistanceMatrix {
    pub fn from_values(rows: Range<usize>, cols: Range<usize>, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows.len() * cols.len() {
            return Err(Error::LengthMismatch {
                declared: rows.len() * cols.len(),
                available: values.len(),
            });
        }
        Ok(Self { rows, cols, values })
    }

    /// Distance at absolute frame indices, if inside the matrix.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if self.rows.contains(&i) && self.cols.contains(&j) {
            Some(self.values[(i - self.rows.start) * self.cols.len() + (j - self.cols.start)])
        } else {
            None
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }
}

/// Builds the distance matrix between two slices of a per-frame series.
pub fn frame_distance_matrix(
    series: &EmbeddingSeries,
    rows: Range<usize>,
    cols: Range<usize>,
) -> Result<FrameDistanceMatrix> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::InvalidParameter("empty frame slice".into()));
    }
    if rows.end > series.len() || cols.end > series.len() {
        return Err(Error::RangeOutOfBounds {
            start: rows.start.min(cols.start),
            end: rows.end.max(cols.end),
            frames: series.len(),
        });
    }
    let values = par::map_range(rows.len(), |r| {
        let a = series.row(rows.start + r);
        cols.clone()
            .map(|j| cosine_distance(a, series.row(j)))
            .collect::<Vec<_>>()
    })
    .concat();
    FrameDistanceMatrix::from_values(rows, cols, values)
}

/// Distance matrix between two independent series slices (row `r` of `a`
/// against row `c` of `b`), indexed from zero.
pub fn cross_distance_matrix(a: &EmbeddingSeries, b: &EmbeddingSeries) -> Result<FrameDistanceMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("empty frame slice".into()));
    }
    let values = par::map_range(a.len(), |r| {
        b.rows().map(|y| cosine_distance(a.row(r), y)).collect::<Vec<_>>()
    })
    .concat();
    FrameDistanceMatrix::from_values(0..a.len(), 0..b.len(), values)
}

/// Read access to a (possibly virtual, possibly masked) frame distance
/// matrix. `None` means the cell is outside the matrix or masked.
pub trait DistanceLookup {
    fn distance(&self, i: usize, j: usize) -> Option<f64>;
}

impl DistanceLookup for FrameDistanceMatrix {
    fn distance(&self, i: usize, j: usize) -> Option<f64> {
        self.get(i, j)
    }
}

/// One duplicated run: frames `[i_min - k1, i_min + k2]` reappear at
/// `[j_min - k1, j_min + k2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuplicationMatch {
    pub i_min: usize,
    pub j_min: usize,
    pub d_min: f64,
    pub k1: usize,
    pub k2: usize,
    pub l: usize,
    pub f_video: f64,
}

impl DuplicationMatch {
    /// Inclusive frame range of the earlier run.
    pub fn first_range(&self) -> (usize, usize) {
        (self.i_min - self.k1, self.i_min + self.k2)
    }

    /// Inclusive frame range of the later run.
    pub fn second_range(&self) -> (usize, usize) {
        (self.j_min - self.k1, self.j_min + self.k2)
    }

    pub fn gap(&self) -> usize {
        self.j_min - self.i_min
    }
}

/// Lexicographically first minimum over cells with `j - i > near_band`
/// accepted by `keep`.
pub(crate) fn argmin_cells(
    m: &FrameDistanceMatrix,
    near_band: usize,
    keep: impl Fn(usize, usize) -> bool,
) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in m.rows.clone() {
        let row = &m.values[(i - m.rows.start) * m.n_cols()..][..m.n_cols()];
        let first_j = m.cols.start.max(i + near_band + 1);
        for j in first_j..m.cols.end {
            let d = row[j - m.cols.start];
            if best.is_some_and(|(_, _, b)| d >= b) || !keep(i, j) {
                continue;
            }
            best = Some((i, j, d));
        }
    }
    best
}

/// Grows a run through `(i, j)` along the diagonal, backwards then forwards,
/// while every step stays within `eps` of `d_min`. The two runs are kept
/// disjoint: `k1 + k2 < j - i`.
pub fn extend_run(
    lookup: &impl DistanceLookup,
    i: usize,
    j: usize,
    d_min: f64,
    eps: f64,
) -> (usize, usize) {
    let gap = j - i;
    let within = |a: usize, b: usize| {
        lookup
            .distance(a, b)
            .is_some_and(|d| (d - d_min).abs() <= eps)
    };
    let mut k1 = 0;
    while k1 + 1 < gap && k1 < i && within(i - k1 - 1, j - k1 - 1) {
        k1 += 1;
    }
    let mut k2 = 0;
    while k1 + k2 + 1 < gap && within(i + k2 + 1, j + k2 + 1) {
        k2 += 1;
    }
    (k1, k2)
}

/// `F = -d_min / (l * (j_min - i_min))`, with `d_min = 0` replaced by
/// `d_floor` so perfect duplicates still rank by length and gap.
pub fn video_score(d_min: f64, l: usize, gap: usize, d_floor: f64) -> Result<f64> {
    if gap == 0 {
        return Err(Error::DegenerateGap);
    }
    if l == 0 {
        return Err(Error::InvalidParameter("run length must be >= 1".into()));
    }
    let d = if d_min == 0.0 { d_floor } else { d_min };
    Ok(-d / (l as f64 * gap as f64))
}

/// Finds the minimum off-band cell and the duplicated run through it.
pub fn extract_run(
    m: &FrameDistanceMatrix,
    eps: f64,
    near_band: usize,
    d_floor: f64,
) -> Result<Option<DuplicationMatch>> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let Some((i, j, d)) = argmin_cells(m, near_band, |_, _| true) else {
        return Ok(None);
    };
    let (k1, k2) = extend_run(m, i, j, d, eps);
    Ok(Some(make_match(i, j, d, k1, k2, d_floor)?))
}

pub(crate) fn make_match(
    i: usize,
    j: usize,
    d: f64,
    k1: usize,
    k2: usize,
    d_floor: f64,
) -> Result<DuplicationMatch> {
    let l = k1 + k2 + 1;
    Ok(DuplicationMatch {
        i_min: i,
        j_min: j,
        d_min: d,
        k1,
        k2,
        l,
        f_video: video_score(d, l, j - i, d_floor)?,
    })
}
