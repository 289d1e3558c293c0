//! Frame and window embedders.
//!
//! Frame embedders map one decoded frame to a fixed-length vector. Window
//! embeddings pool frame features over a run of frames (mean and population
//! standard deviation per feature) and append the mean and standard deviation
//! of the temporal-difference energy inside the window, giving
//! `2 * frame_dim + 2` values.
//!
//! Pooled features are snapped to a `2^-16` grid before accumulation. With
//! values in `[0, 1]` and windows of at most [`MAX_WINDOW_LENGTH`] frames the
//! running sums and sums of squares are then exact in `f64`, so sliding,
//! prefix-sum and direct evaluation agree bit for bit.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{read_embeddings, FrameBuffer, TemporalDiffFrame, VideoClip};
use crate::par;

pub const MAX_WINDOW_LENGTH: usize = 1024;
const POOL_SCALE: f64 = 65536.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    PerWindow,
    PerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowShape {
    pub length: usize,
    pub hop: usize,
}

/// A sequence of equal-length real vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSeries {
    values: Vec<f64>,
    dim: usize,
    granularity: Granularity,
    window: Option<WindowShape>,
}

impl EmbeddingSeries {
    pub fn from_flat(
        values: Vec<f64>,
        dim: usize,
        granularity: Granularity,
        window: Option<WindowShape>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("embedding dim must be >= 1".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::LengthMismatch {
                declared: values.len().div_ceil(dim) * dim,
                available: values.len(),
            });
        }
        Ok(Self {
            values,
            dim,
            granularity,
            window,
        })
    }

    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        dim: usize,
        granularity: Granularity,
        window: Option<WindowShape>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimMismatch(dim, row.len()));
            }
            values.extend(row);
        }
        Self::from_flat(values, dim, granularity, window)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn window(&self) -> Option<WindowShape> {
        self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn relabel(mut self, granularity: Granularity, window: Option<WindowShape>) -> Self {
        self.granularity = granularity;
        self.window = window;
        self
    }
}

/// Which embedder to run, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EmbedderSpec {
    /// Bilinear resize of channel-mean intensity to a `grid x grid` map in `[0, 1]`.
    DownsampleIntensity { grid: u32 },
    /// Per-channel normalized histogram with `bins` bins.
    ColorHistogram { bins: u32 },
    /// Window-only: pooled `grid x grid` maps of absolute temporal differences.
    TemporalDiffStats { grid: u32 },
    /// Precomputed vectors in an `FDEB` file.
    ExternalFile { path: PathBuf },
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::DownsampleIntensity { grid: 16 }
    }
}

impl EmbedderSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EmbedderSpec::DownsampleIntensity { .. } => "downsample-intensity",
            EmbedderSpec::ColorHistogram { .. } => "color-histogram",
            EmbedderSpec::TemporalDiffStats { .. } => "temporal-diff-stats",
            EmbedderSpec::ExternalFile { .. } => "external-file",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            EmbedderSpec::DownsampleIntensity { grid } | EmbedderSpec::TemporalDiffStats { grid } => {
                if !(1..=256).contains(&grid) {
                    return bad(format!("grid must be in 1..=256, got {grid}"));
                }
            }
            EmbedderSpec::ColorHistogram { bins } => {
                if !(1..=256).contains(&bins) {
                    return bad(format!("bins must be in 1..=256, got {bins}"));
                }
            }
            EmbedderSpec::ExternalFile { ref path } => {
                if path.as_os_str().is_empty() {
                    return bad("external embedding path is empty".into());
                }
            }
        }
        Ok(())
    }

    pub fn is_frame_capable(&self) -> bool {
        matches!(
            self,
            EmbedderSpec::DownsampleIntensity { .. } | EmbedderSpec::ColorHistogram { .. }
        )
    }

    /// Length of a frame vector for frames with `channels` channels.
    pub fn frame_dim(&self, channels: u8) -> Option<usize> {
        match *self {
            EmbedderSpec::DownsampleIntensity { grid } => Some((grid * grid) as usize),
            EmbedderSpec::ColorHistogram { bins } => Some(bins as usize * channels as usize),
            _ => None,
        }
    }

    /// Length of a window vector, when computed by a builtin embedder.
    pub fn sequence_dim(&self, channels: u8) -> Option<usize> {
        let per_item = match *self {
            EmbedderSpec::TemporalDiffStats { grid } => (grid * grid) as usize,
            _ => self.frame_dim(channels)?,
        };
        Some(2 * per_item + 2)
    }
}

fn bilinear_grid(width: u32, height: u32, grid: u32, sample: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let (w, h, g) = (width as usize, height as usize, grid as usize);
    let axis = |n: usize, i: usize| -> (usize, usize, f64) {
        let pos = ((i as f64 + 0.5) * n as f64 / g as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = pos.floor() as usize;
        (lo, (lo + 1).min(n - 1), pos - lo as f64)
    };
    let xs: Vec<_> = (0..g).map(|i| axis(w, i)).collect();
    let mut out = Vec::with_capacity(g * g);
    for gy in 0..g {
        let (y0, y1, fy) = axis(h, gy);
        for &(x0, x1, fx) in &xs {
            let top = sample(x0, y0) * (1.0 - fx) + sample(x1, y0) * fx;
            let bottom = sample(x0, y1) * (1.0 - fx) + sample(x1, y1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

fn downsample_intensity(frame: &FrameBuffer, grid: u32) -> Vec<f64> {
    let c = frame.channels() as usize;
    let w = frame.width() as usize;
    let data = frame.data();
    bilinear_grid(frame.width(), frame.height(), grid, |x, y| {
        let base = (y * w + x) * c;
        let sum: u32 = data[base..base + c].iter().map(|&v| u32::from(v)).sum();
        f64::from(sum) / (c as f64 * 255.0)
    })
}

fn color_histogram(frame: &FrameBuffer, bins: u32) -> Vec<f64> {
    let c = frame.channels() as usize;
    let b = bins as usize;
    let mut counts = vec![0u64; b * c];
    for px in frame.data().chunks_exact(c) {
        for (ch, &v) in px.iter().enumerate() {
            counts[ch * b + usize::from(v) * b / 256] += 1;
        }
    }
    let n = frame.pixel_count() as f64;
    counts.into_iter().map(|k| k as f64 / n).collect()
}

fn abs_diff_grid(diff: &TemporalDiffFrame, grid: u32) -> Vec<f64> {
    let w = diff.width as usize;
    bilinear_grid(diff.width, diff.height, grid, |x, y| {
        f64::from(diff.data[y * w + x].unsigned_abs()) / 255.0
    })
}

/// Embeds a single frame with a frame-capable embedder.
pub fn embed_frame(frame: &FrameBuffer, spec: &EmbedderSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    match *spec {
        EmbedderSpec::DownsampleIntensity { grid } => Ok(downsample_intensity(frame, grid)),
        EmbedderSpec::ColorHistogram { bins } => Ok(color_histogram(frame, bins)),
        _ => Err(Error::IncompatibleKind(spec.kind_name())),
    }
}

/// Per-frame embeddings of a whole clip.
pub fn embed_frames(clip: &VideoClip, spec: &EmbedderSpec) -> Result<EmbeddingSeries> {
    if let EmbedderSpec::ExternalFile { path } = spec {
        return import_external(path, Granularity::PerFrame, clip.len());
    }
    if !spec.is_frame_capable() {
        return Err(Error::IncompatibleKind(spec.kind_name()));
    }
    spec.validate()?;
    let dim = spec.frame_dim(clip.shape().2).expect("frame-capable");
    let rows = par::map_slice(clip.frames(), |f| embed_frame(f, spec))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    EmbeddingSeries::from_rows(rows, dim, Granularity::PerFrame, None)
}

#[inline]
fn snap(v: f64) -> f64 {
    (v * POOL_SCALE).round() / POOL_SCALE
}

/// Features pooled for the frame at `index`, and the energy of the boundary
/// `index -> index + 1` when it exists.
struct PoolSource<'a> {
    clip: &'a VideoClip,
    spec: &'a EmbedderSpec,
}

impl PoolSource<'_> {
    /// Per-item features: frame `t` for appearance embedders, boundary `t` for
    /// the temporal-diff embedder.
    fn item(&self, t: usize) -> Vec<f64> {
        let raw = match *self.spec {
            EmbedderSpec::TemporalDiffStats { grid } => {
                let d = TemporalDiffFrame::between(self.clip.frame(t), self.clip.frame(t + 1));
                abs_diff_grid(&d, grid)
            }
            EmbedderSpec::DownsampleIntensity { grid } => downsample_intensity(self.clip.frame(t), grid),
            EmbedderSpec::ColorHistogram { bins } => color_histogram(self.clip.frame(t), bins),
            EmbedderSpec::ExternalFile { .. } => unreachable!("checked by caller"),
        };
        raw.into_iter().map(snap).collect()
    }

    fn energy(&self, t: usize) -> f64 {
        snap(TemporalDiffFrame::between(self.clip.frame(t), self.clip.frame(t + 1)).energy())
    }

    fn items_on_boundaries(&self) -> bool {
        matches!(self.spec, EmbedderSpec::TemporalDiffStats { .. })
    }

    /// Item index range covered by the window `[start, start + length)`.
    fn item_range(&self, start: usize, length: usize) -> (usize, usize) {
        if self.items_on_boundaries() {
            (start, start + length - 1)
        } else {
            (start, start + length)
        }
    }
}

/// Running sums of a multiset of snapped vectors.
#[derive(Debug, Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: usize,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
            count: 0,
        }
    }

    fn add(&mut self, v: &[f64]) {
        for ((s, q), &x) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(v) {
            *s += x;
            *q += x * x;
        }
        self.count += 1;
    }

    fn remove(&mut self, v: &[f64]) {
        for ((s, q), &x) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(v) {
            *s -= x;
            *q -= x * x;
        }
        self.count -= 1;
    }

    fn write_mean_std(&self, out: &mut Vec<f64>) {
        let start = out.len();
        out.resize(start + 2 * self.sum.len(), 0.0);
        write_pooled(&self.sum, &self.sum_sq, self.count, &mut out[start..]);
    }
}

/// Writes `[mean..., std...]` from exact sums into `out`.
fn write_pooled(sum: &[f64], sum_sq: &[f64], count: usize, out: &mut [f64]) {
    let d = sum.len();
    if count == 0 {
        out.fill(0.0);
        return;
    }
    let n = count as f64;
    for k in 0..d {
        out[k] = sum[k] / n;
        let var = (n * sum_sq[k] - sum[k] * sum[k]).max(0.0) / (n * n);
        out[d + k] = var.sqrt();
    }
}

fn check_window(clip: &VideoClip, start: usize, length: usize) -> Result<()> {
    if !(2..=MAX_WINDOW_LENGTH).contains(&length) {
        return Err(Error::InvalidParameter(format!(
            "window length must be in 2..={MAX_WINDOW_LENGTH}, got {length}"
        )));
    }
    if start + length > clip.len() {
        return Err(Error::WindowOutOfBounds {
            start,
            length,
            frames: clip.len(),
        });
    }
    Ok(())
}

fn builtin_sequence_spec(spec: &EmbedderSpec) -> Result<()> {
    spec.validate()?;
    if matches!(spec, EmbedderSpec::ExternalFile { .. }) {
        return Err(Error::IncompatibleKind(spec.kind_name()));
    }
    Ok(())
}

/// Embeds the window `[start, start + length)` by direct summation.
pub fn embed_sequence(
    clip: &VideoClip,
    start: usize,
    length: usize,
    spec: &EmbedderSpec,
) -> Result<Vec<f64>> {
    builtin_sequence_spec(spec)?;
    check_window(clip, start, length)?;
    let src = PoolSource { clip, spec };
    let (lo, hi) = src.item_range(start, length);
    let mut items = Moments::new(spec.sequence_dim(clip.shape().2).expect("builtin") / 2 - 1);
    for t in lo..hi {
        items.add(&src.item(t));
    }
    let mut energy = Moments::new(1);
    for t in start..start + length - 1 {
        energy.add(&[src.energy(t)]);
    }
    let mut out = Vec::with_capacity(2 * items.sum.len() + 2);
    items.write_mean_std(&mut out);
    energy.write_mean_std(&mut out);
    Ok(out)
}

/// Slides a fixed-length window one frame at a time, touching only the
/// frame that enters and the frame that leaves on each step.
pub struct RollingSequenceEmbedder<'a> {
    src: PoolSource<'a>,
    length: usize,
    next_start: usize,
    items: Moments,
    item_buf: VecDeque<Vec<f64>>,
    energy: Moments,
    energy_buf: VecDeque<f64>,
}

impl<'a> RollingSequenceEmbedder<'a> {
    pub fn new(clip: &'a VideoClip, spec: &'a EmbedderSpec, length: usize) -> Result<Self> {
        builtin_sequence_spec(spec)?;
        check_window(clip, 0, length)?;
        let src = PoolSource { clip, spec };
        let dim = spec.sequence_dim(clip.shape().2).expect("builtin") / 2 - 1;
        let mut this = Self {
            src,
            length,
            next_start: 0,
            items: Moments::new(dim),
            item_buf: VecDeque::with_capacity(length),
            energy: Moments::new(1),
            energy_buf: VecDeque::with_capacity(length),
        };
        let (lo, hi) = this.src.item_range(0, length);
        for t in lo..hi {
            let v = this.src.item(t);
            this.items.add(&v);
            this.item_buf.push_back(v);
        }
        for t in 0..length - 1 {
            let e = this.src.energy(t);
            this.energy.add(&[e]);
            this.energy_buf.push_back(e);
        }
        Ok(this)
    }

    /// Number of window positions left.
    pub fn remaining(&self) -> usize {
        (self.src.clip.len() + 1).saturating_sub(self.next_start + self.length)
    }

    fn slide(&mut self) {
        let start = self.next_start;
        let (_, hi) = self.src.item_range(start, self.length);
        let old = self.item_buf.pop_front().expect("window is non-empty");
        self.items.remove(&old);
        let v = self.src.item(hi - 1);
        self.items.add(&v);
        self.item_buf.push_back(v);

        let old = self.energy_buf.pop_front().expect("window is non-empty");
        self.energy.remove(&[old]);
        let e = self.src.energy(start + self.length - 2);
        self.energy.add(&[e]);
        self.energy_buf.push_back(e);
    }
}

impl Iterator for RollingSequenceEmbedder<'_> {
    type Item = (usize, Vec<f64>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining() == 0 {
            return None;
        }
        if self.next_start > 0 {
            self.slide();
        }
        let mut out = Vec::with_capacity(2 * self.items.sum.len() + 2);
        self.items.write_mean_std(&mut out);
        self.energy.write_mean_std(&mut out);
        let start = self.next_start;
        self.next_start += 1;
        Some((start, out))
    }
}

/// Running sums and sums of squares of `n` rows of `width` values.
fn prefix_sums<'a>(width: usize, n: usize, get: impl Fn(usize) -> &'a [f64]) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; (n + 1) * width];
    let mut q = vec![0.0; (n + 1) * width];
    for t in 0..n {
        let v = get(t);
        for k in 0..width {
            s[(t + 1) * width + k] = s[t * width + k] + v[k];
            q[(t + 1) * width + k] = q[t * width + k] + v[k] * v[k];
        }
    }
    (s, q)
}

/// Embeds arbitrary windows, evaluating each frame once and pooling through
/// exact prefix sums.
pub fn embed_windows(
    clip: &VideoClip,
    windows: &[(usize, usize)],
    spec: &EmbedderSpec,
    shape: Option<WindowShape>,
) -> Result<EmbeddingSeries> {
    if let EmbedderSpec::ExternalFile { path } = spec {
        let series = import_external(path, Granularity::PerWindow, windows.len())?;
        return Ok(series.relabel(Granularity::PerWindow, shape));
    }
    builtin_sequence_spec(spec)?;
    for &(start, length) in windows {
        check_window(clip, start, length)?;
    }
    let dim = spec.sequence_dim(clip.shape().2).expect("builtin");
    let item_dim = dim / 2 - 1;
    let src = PoolSource { clip, spec };
    let n_items = if src.items_on_boundaries() {
        clip.len() - 1
    } else {
        clip.len()
    };
    let items = par::map_range(n_items, |t| src.item(t));
    let energies = par::map_range(clip.len() - 1, |t| src.energy(t));

    let (item_s, item_q) = prefix_sums(item_dim, n_items, |t| &items[t]);
    let (en_s, en_q) = prefix_sums(1, energies.len(), |t| std::slice::from_ref(&energies[t]));

    let pooled = |lo: usize, hi: usize, width: usize, s: &[f64], q: &[f64], out: &mut [f64]| {
        let diff = |p: &[f64]| -> Vec<f64> {
            (0..width).map(|k| p[hi * width + k] - p[lo * width + k]).collect()
        };
        write_pooled(&diff(s), &diff(q), hi - lo, out);
    };
    let rows = par::map_slice(windows, |&(start, length)| {
        let mut out = vec![0.0; dim];
        let (lo, hi) = src.item_range(start, length);
        pooled(lo, hi, item_dim, &item_s, &item_q, &mut out[..2 * item_dim]);
        pooled(start, start + length - 1, 1, &en_s, &en_q, &mut out[2 * item_dim..]);
        out
    });
    EmbeddingSeries::from_rows(rows, dim, Granularity::PerWindow, shape)
}

/// Loads externally computed embeddings and checks their count.
pub fn import_external(
    path: &Path,
    granularity: Granularity,
    expected_count: usize,
) -> Result<EmbeddingSeries> {
    let series = read_embeddings(path)?;
    if series.len() != expected_count {
        return Err(Error::CountMismatch {
            expected: expected_count,
            got: series.len(),
        });
    }
    Ok(series.relabel(granularity, None))
}
