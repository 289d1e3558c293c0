//! YUV4MPEG2 reader and writer.
//!
//! Supports 4:2:0 (all siting variants), 4:4:4 and mono planes. Color
//! conversion follows BT.601; samples are treated as studio range unless the
//! header carries `XCOLORRANGE=FULL`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frame::{FrameBuffer, VideoClip};
use crate::error::{Error, Result};

const MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME_TAG: &[u8] = b"FRAME";

/// How decoded Y4M frames are presented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMode {
    /// Luma plane only, one channel.
    Gray,
    /// BT.601 RGB, three channels.
    #[default]
    Rgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chroma {
    C420,
    C444,
    Mono,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Y4mHeader {
    pub width: u32,
    pub height: u32,
    pub fps_num: u64,
    pub fps_den: u64,
    pub full_range: bool,
    chroma: Chroma,
}

impl Y4mHeader {
    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }

    fn plane_sizes(&self) -> (usize, usize) {
        let luma = self.width as usize * self.height as usize;
        let chroma = match self.chroma {
            Chroma::C444 => luma,
            Chroma::C420 => {
                (self.width as usize).div_ceil(2) * (self.height as usize).div_ceil(2)
            }
            Chroma::Mono => 0,
        };
        (luma, chroma)
    }
}

fn parse_header(line: &[u8]) -> Result<Y4mHeader> {
    let text = std::str::from_utf8(line)
        .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;
    let mut tokens = text.split_ascii_whitespace();
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::MalformedHeader("missing YUV4MPEG2 magic".into()));
    }
    let (mut width, mut height) = (None, None);
    let (mut fps_num, mut fps_den) = (30u64, 1u64);
    let mut chroma = Chroma::C420;
    let mut full_range = false;
    let bad = |tok: &str| Error::MalformedHeader(format!("bad token {tok:?}"));
    for tok in tokens {
        let (tag, value) = tok.split_at(1);
        match tag {
            "W" => width = Some(value.parse::<u32>().map_err(|_| bad(tok))?),
            "H" => height = Some(value.parse::<u32>().map_err(|_| bad(tok))?),
            "F" => {
                let (n, d) = value.split_once(':').ok_or_else(|| bad(tok))?;
                fps_num = n.parse().map_err(|_| bad(tok))?;
                fps_den = d.parse().map_err(|_| bad(tok))?;
                if fps_num == 0 || fps_den == 0 {
                    return Err(bad(tok));
                }
            }
            "C" => {
                chroma = match value {
                    "420" | "420jpeg" | "420paldv" | "420mpeg2" => Chroma::C420,
                    "444" => Chroma::C444,
                    "mono" => Chroma::Mono,
                    other => return Err(Error::UnsupportedChroma(other.to_string())),
                }
            }
            "X" => {
                if let Some(range) = value.strip_prefix("COLORRANGE=") {
                    full_range = range.eq_ignore_ascii_case("FULL");
                }
            }
            "I" | "A" => {}
            _ => return Err(bad(tok)),
        }
    }
    let width = width.ok_or_else(|| Error::MalformedHeader("missing W".into()))?;
    let height = height.ok_or_else(|| Error::MalformedHeader("missing H".into()))?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero frame size".into()));
    }
    Ok(Y4mHeader {
        width,
        height,
        fps_num,
        fps_den,
        full_range,
        chroma,
    })
}

#[inline]
fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn to_frame(header: &Y4mHeader, y: &[u8], u: &[u8], v: &[u8], mode: ColorMode) -> Result<FrameBuffer> {
    let (w, h) = (header.width as usize, header.height as usize);
    let expand_luma = |l: u8| -> f64 {
        if header.full_range {
            f64::from(l)
        } else {
            (f64::from(l) - 16.0) * 255.0 / 219.0
        }
    };
    if mode == ColorMode::Gray || header.chroma == Chroma::Mono {
        let data = if header.full_range {
            y.to_vec()
        } else {
            y.iter().map(|&l| clamp_u8(expand_luma(l))).collect()
        };
        return FrameBuffer::new(header.width, header.height, 1, data);
    }
    let cw = match header.chroma {
        Chroma::C444 => w,
        _ => w.div_ceil(2),
    };
    let chroma_scale = if header.full_range { 1.0 } else { 255.0 / 224.0 };
    let mut data = Vec::with_capacity(w * h * 3);
    for row in 0..h {
        for col in 0..w {
            let ci = match header.chroma {
                Chroma::C444 => row * cw + col,
                _ => (row / 2) * cw + col / 2,
            };
            let luma = expand_luma(y[row * w + col]);
            let cb = (f64::from(u[ci]) - 128.0) * chroma_scale;
            let cr = (f64::from(v[ci]) - 128.0) * chroma_scale;
            data.push(clamp_u8(luma + 1.402 * cr));
            data.push(clamp_u8(luma - 0.344_136 * cb - 0.714_136 * cr));
            data.push(clamp_u8(luma + 1.772 * cb));
        }
    }
    FrameBuffer::new(header.width, header.height, 3, data)
}

/// Parses an in-memory Y4M stream.
pub fn parse_y4m(bytes: &[u8], mode: ColorMode, source_id: &str) -> Result<VideoClip> {
    if !bytes.starts_with(MAGIC) {
        return Err(Error::MalformedHeader("missing YUV4MPEG2 magic".into()));
    }
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("unterminated header".into()))?;
    let header = parse_header(&bytes[..header_end])?;
    let (luma, chroma) = header.plane_sizes();
    let frame_len = luma + 2 * chroma;

    let mut pos = header_end + 1;
    let mut frames = Vec::new();
    while pos < bytes.len() {
        let index = frames.len();
        if !bytes[pos..].starts_with(FRAME_TAG) {
            return Err(Error::MalformedHeader(format!("frame {index} lacks FRAME tag")));
        }
        let line_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(Error::TruncatedFrame {
                index,
                expected: frame_len,
                got: 0,
            })?;
        pos += line_end + 1;
        let available = bytes.len() - pos;
        if available < frame_len {
            return Err(Error::TruncatedFrame {
                index,
                expected: frame_len,
                got: available,
            });
        }
        let planes = &bytes[pos..pos + frame_len];
        let (y, rest) = planes.split_at(luma);
        let (u, v) = rest.split_at(chroma);
        frames.push(to_frame(&header, y, u, v, mode)?);
        pos += frame_len;
    }
    VideoClip::new(frames, header.fps(), source_id)
}

pub fn read_y4m(path: &Path, mode: ColorMode) -> Result<VideoClip> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_y4m(&bytes, mode, &path.display().to_string())
}

/// Best small rational for a frame rate, e.g. 29.97 -> 30000:1001.
fn fps_rational(fps: f64) -> (u64, u64) {
    for den in [1u64, 1001, 1000, 100_000] {
        let num = (fps * den as f64).round();
        if num >= 1.0 && (num / den as f64 - fps).abs() <= 1e-9 * fps.max(1.0) {
            return (num as u64, den);
        }
    }
    ((fps * 1_000_000.0).round().max(1.0) as u64, 1_000_000)
}

/// Serializes a clip: one-channel clips as `Cmono`, RGB clips as full-range
/// BT.601 `C444`.
pub fn encode_y4m(clip: &VideoClip) -> Vec<u8> {
    let (w, h, channels) = clip.shape();
    let (num, den) = fps_rational(clip.fps());
    let chroma = if channels == 1 { "mono" } else { "444" };
    let mut out = Vec::new();
    let _ = writeln!(
        out,
        "YUV4MPEG2 W{w} H{h} F{num}:{den} Ip A1:1 C{chroma} XCOLORRANGE=FULL"
    );
    let n = w as usize * h as usize;
    for frame in clip.frames() {
        out.extend_from_slice(b"FRAME\n");
        if channels == 1 {
            out.extend_from_slice(frame.data());
            continue;
        }
        let mut planes = vec![0u8; 3 * n];
        for (i, px) in frame.data().chunks_exact(3).enumerate() {
            let (r, g, b) = (f64::from(px[0]), f64::from(px[1]), f64::from(px[2]));
            planes[i] = clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
            planes[n + i] = clamp_u8(128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b);
            planes[2 * n + i] = clamp_u8(128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b);
        }
        out.extend_from_slice(&planes);
    }
    out
}

pub fn write_y4m(path: &Path, clip: &VideoClip) -> Result<()> {
    fs::write(path, encode_y4m(clip)).map_err(|e| Error::io(path, e))
}
