//! Detection and localization of frame-duplication forgeries in video.
//!
//! The pipeline embeds overlapping windows of frames, keeps window pairs
//! that look alike, then searches the frame-level distance matrix of each
//! pair for runs of near-identical frames. Each run is scored, and the copy
//! is told apart from its source by the discontinuities at its boundaries.

pub mod coarse;
pub mod config;
pub mod detect;
pub mod embed;
pub mod error;
pub mod eval;
pub mod fine;
pub mod forgery;
pub mod localize;
pub mod media;
pub mod par;

pub use config::RunConfig;
pub use detect::{detect, detect_traced, DetectConfig, DetectionReport};
pub use error::{Error, Result};
pub use fine::DuplicationMatch;
pub use localize::{localize, LocalizationResult};
pub use media::{FrameBuffer, VideoClip};
