use crate::error::{Error, Result};

/// Minimum clip length accepted by the detection pipeline.
pub const MIN_PIPELINE_FRAMES: usize = 17;

/// Default frame rate for sources that carry none.
pub const DEFAULT_FPS: f64 = 30.0;

/// A decoded frame: row-major, interleaved 8-bit samples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrameBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl FrameBuffer {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("frame has zero area".into()));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                declared: expected,
                available: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn shape(&self) -> (u32, u32, u8) {
        (self.width, self.height, self.channels)
    }

    /// Channel-mean intensity of every pixel, in `[0, 255]`.
    pub fn intensities(&self) -> Vec<f64> {
        let c = self.channels as usize;
        if c == 1 {
            return self.data.iter().map(|&v| f64::from(v)).collect();
        }
        self.data
            .chunks_exact(c)
            .map(|px| px.iter().map(|&v| f64::from(v)).sum::<f64>() / c as f64)
            .collect()
    }

    /// Channel-mean intensity rounded to the nearest integer level.
    pub fn intensity_levels(&self) -> Vec<u8> {
        let c = self.channels as usize;
        if c == 1 {
            return self.data.clone();
        }
        self.data
            .chunks_exact(c)
            .map(|px| {
                let sum: u32 = px.iter().map(|&v| u32::from(v)).sum();
                ((sum + c as u32 / 2) / c as u32) as u8
            })
            .collect()
    }
}

/// An ordered collection of equally sized frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: Vec<FrameBuffer>,
    fps: f64,
    source_id: String,
}

impl VideoClip {
    pub fn new(frames: Vec<FrameBuffer>, fps: f64, source_id: impl Into<String>) -> Result<Self> {
        let first = frames.first().ok_or(Error::TooFewFrames {
            required: 1,
            got: 0,
        })?;
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidParameter(format!("fps must be positive, got {fps}")));
        }
        let expected = first.shape();
        if let Some((index, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.shape() != expected)
        {
            return Err(Error::DimensionMismatch {
                index,
                expected,
                got: f.shape(),
            });
        }
        Ok(Self {
            frames,
            fps,
            source_id: source_id.into(),
        })
    }

    pub fn frames(&self) -> &[FrameBuffer] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<FrameBuffer> {
        self.frames
    }

    pub fn frame(&self, index: usize) -> &FrameBuffer {
        &self.frames[index]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    /// Width, height and channel count shared by every frame.
    pub fn shape(&self) -> (u32, u32, u8) {
        self.frames[0].shape()
    }

    /// Fails unless the clip is long enough for the detection pipeline.
    pub fn require_pipeline_length(&self) -> Result<()> {
        require_frames(self.len(), MIN_PIPELINE_FRAMES)
    }
}

pub(crate) fn require_frames(got: usize, required: usize) -> Result<()> {
    if got < required {
        Err(Error::TooFewFrames { required, got })
    } else {
        Ok(())
    }
}

/// Signed intensity change between two consecutive frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalDiffFrame {
    pub width: u32,
    pub height: u32,
    pub data: Vec<i16>,
}

impl TemporalDiffFrame {
    /// `intensity(next) - intensity(prev)` per pixel.
    pub fn between(prev: &FrameBuffer, next: &FrameBuffer) -> Self {
        let a = prev.intensity_levels();
        let b = next.intensity_levels();
        let data = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| i16::from(y) - i16::from(x))
            .collect();
        Self {
            width: prev.width(),
            height: prev.height(),
            data,
        }
    }

    /// Mean absolute change, scaled to `[0, 1]`.
    pub fn energy(&self) -> f64 {
        let total: u64 = self.data.iter().map(|&v| u64::from(v.unsigned_abs())).sum();
        total as f64 / (self.data.len() as f64 * 255.0)
    }
}

/// One diff frame per consecutive pair: `N - 1` frames for an `N`-frame clip.
pub fn temporal_diffs(clip: &VideoClip) -> Result<Vec<TemporalDiffFrame>> {
    require_frames(clip.len(), 2)?;
    Ok(clip
        .frames()
        .windows(2)
        .map(|w| TemporalDiffFrame::between(&w[0], &w[1]))
        .collect())
}
