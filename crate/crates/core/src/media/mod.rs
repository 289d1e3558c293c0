//! Frame sources, the embedding container and image exports.

mod fdeb;
mod frame;
mod heatmap;
mod pnm;
mod y4m;

pub use fdeb::{decode_embeddings, encode_embeddings, read_embeddings, write_embeddings};
pub use frame::{
    temporal_diffs, FrameBuffer, TemporalDiffFrame, VideoClip, DEFAULT_FPS, MIN_PIPELINE_FRAMES,
};
pub(crate) use frame::require_frames;
pub use heatmap::{heatmap_pgm, heatmap_svg};
pub use pnm::{decode_pnm, encode_pnm, read_image, read_image_sequence, write_pnm};
pub use y4m::{encode_y4m, parse_y4m, read_y4m, write_y4m, ColorMode, Y4mHeader};

use std::path::Path;

use crate::error::Result;

/// Opens a clip from a `.y4m` file or a directory of images.
pub fn open_clip(path: &Path, pattern: &str, fps: f64, mode: ColorMode) -> Result<VideoClip> {
    if path.is_dir() {
        read_image_sequence(path, pattern, fps)
    } else {
        read_y4m(path, mode)
    }
}
