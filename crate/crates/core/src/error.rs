use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no files matched {pattern:?} in {dir}")]
    EmptySequence { dir: PathBuf, pattern: String },

    #[error("frame {index} is {got:?}, expected {expected:?} (width, height, channels)")]
    DimensionMismatch {
        index: usize,
        expected: (u32, u32, u8),
        got: (u32, u32, u8),
    },

    #[error("malformed image {path}: {reason}")]
    MalformedImage { path: PathBuf, reason: String },

    #[error("malformed Y4M header: {0}")]
    MalformedHeader(String),

    #[error("unsupported Y4M chroma {0:?}")]
    UnsupportedChroma(String),

    #[error("truncated frame {index}: expected {expected} bytes, got {got}")]
    TruncatedFrame {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("need at least {required} frames, got {got}")]
    TooFewFrames { required: usize, got: usize },

    #[error("bad embedding-file magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported embedding-file version {0}")]
    BadVersion(u32),

    #[error("declared {declared} values but payload holds {available}")]
    LengthMismatch { declared: usize, available: usize },

    #[error("expected {expected} vectors, got {got}")]
    CountMismatch { expected: usize, got: usize },

    #[error("vector dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("embedder kind {0} cannot embed single frames")]
    IncompatibleKind(&'static str),

    #[error("window [{start}, {start}+{length}) out of bounds for {frames} frames")]
    WindowOutOfBounds {
        start: usize,
        length: usize,
        frames: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplication range overlaps its own source (insert_at {insert_at}, source [{start}, {end}))")]
    OverlapViolation {
        insert_at: usize,
        start: usize,
        end: usize,
    },

    #[error("range [{start}, {end}) out of bounds for {frames} frames")]
    RangeOutOfBounds {
        start: usize,
        end: usize,
        frames: usize,
    },

    #[error("seed clip of {available} frames too short for {required} frames")]
    InsufficientFrames { required: usize, available: usize },

    #[error("duplicated and selected runs coincide (gap 0)")]
    DegenerateGap,

    #[error("ROC needs both classes, got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },

    #[error("score {0} is not a number")]
    NonFiniteScore(f64),

    #[error("schema error in {path}: {source}")]
    Schema {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
