//! Binary PGM (P5) / PPM (P6) codecs and image-sequence loading.

use std::fs;
use std::path::{Path, PathBuf};

use super::frame::{FrameBuffer, VideoClip};
use crate::error::{Error, Result};

/// Decodes a binary P5 or P6 image with maxval up to 255.
pub fn decode_pnm(bytes: &[u8], path: &Path) -> Result<FrameBuffer> {
    let bad = |reason: &str| Error::MalformedImage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1u8,
        Some(b"P6") => 3u8,
        _ => return Err(bad("missing P5/P6 magic")),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        *field = next_header_number(bytes, &mut pos).ok_or_else(|| bad("bad header field"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit maxval is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("missing raster separator")),
    }
    let len = width as usize * height as usize * channels as usize;
    let raster = bytes
        .get(pos..pos + len)
        .ok_or_else(|| bad("raster shorter than header declares"))?;
    let data = if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|&v| ((u32::from(v.min(maxval as u8)) * 255 + maxval / 2) / maxval) as u8)
            .collect()
    };
    FrameBuffer::new(width, height, channels, data).map_err(|e| bad(&e.to_string()))
}

fn next_header_number(bytes: &[u8], pos: &mut usize) -> Option<u32> {
    loop {
        match bytes.get(*pos)? {
            b'#' => {
                while *bytes.get(*pos)? != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

/// Encodes a frame as P5 (one channel) or P6 (three channels).
pub fn encode_pnm(frame: &FrameBuffer) -> Vec<u8> {
    let magic = if frame.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.data());
    out
}

pub fn write_pnm(path: &Path, frame: &FrameBuffer) -> Result<()> {
    fs::write(path, encode_pnm(frame)).map_err(|e| Error::io(path, e))
}

fn decode_png(path: &Path) -> Result<FrameBuffer> {
    let bad = |reason: String| Error::MalformedImage {
        path: path.to_path_buf(),
        reason,
    };
    let img = image::open(path).map_err(|e| bad(e.to_string()))?;
    let (w, h) = (img.width(), img.height());
    if img.color().has_color() {
        FrameBuffer::new(w, h, 3, img.into_rgb8().into_raw())
    } else {
        FrameBuffer::new(w, h, 1, img.into_luma8().into_raw())
    }
}

pub fn read_image(path: &Path) -> Result<FrameBuffer> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        return decode_png(path);
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes, path)
}

/// Loads every file in `dir` whose name matches `pattern`, in lexicographic
/// order, as one clip.
pub fn read_image_sequence(dir: &Path, pattern: &str, fps: f64) -> Result<VideoClip> {
    let matcher = glob::Pattern::new(pattern)
        .map_err(|e| Error::InvalidParameter(format!("bad pattern {pattern:?}: {e}")))?;
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if entry.path().is_file() && matcher.matches(name) {
            paths.push(entry.path());
        }
    }
    if paths.is_empty() {
        return Err(Error::EmptySequence {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    paths.sort();
    let frames = paths
        .iter()
        .map(|p| read_image(p))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, fps, dir.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pnm_round_trip_with_comments() {
        let f = FrameBuffer::new(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let enc = encode_pnm(&f);
        assert_eq!(decode_pnm(&enc, Path::new("x")).unwrap(), f);

        let mut commented = b"P5\n# made by hand\n2 2\n# maxval\n255\n".to_vec();
        commented.extend_from_slice(&[9, 8, 7, 6]);
        let g = decode_pnm(&commented, Path::new("x")).unwrap();
        assert_eq!(g.data(), &[9, 8, 7, 6]);
    }

    #[test]
    fn rejects_truncated_and_wrong_magic() {
        assert!(decode_pnm(b"P5\n2 2\n255\n\x00\x01", Path::new("x")).is_err());
        assert!(decode_pnm(b"P2\n1 1\n255\n0", Path::new("x")).is_err());
        assert!(decode_pnm(b"P5\n1 1\n65535\n\x00\x00", Path::new("x")).is_err());
    }

    #[test]
    fn low_maxval_is_rescaled() {
        let g = decode_pnm(b"P5 1 1 15 \x0f", Path::new("x")).unwrap();
        assert_eq!(g.data(), &[255]);
    }
}
