//! The `FDEB` embedding container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! b"FDEB" | version: u32 (=1) | count: u32 | dim: u32 | count*dim f32, row-major
//! ```

use std::fs;
use std::path::Path;

use crate::embed::{EmbeddingSeries, Granularity};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"FDEB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_embeddings(series: &EmbeddingSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + series.values().len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(series.len() as u32).to_le_bytes());
    out.extend_from_slice(&(series.dim() as u32).to_le_bytes());
    for &v in series.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Decodes an `FDEB` payload. The result is tagged per-frame; callers that
/// know better relabel it.
pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingSeries> {
    if bytes.len() < 4 {
        return Err(Error::LengthMismatch {
            declared: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::LengthMismatch {
            declared: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != VERSION {
        return Err(Error::BadVersion(version));
    }
    let count = word(8) as usize;
    let dim = word(12) as usize;
    if dim == 0 {
        return Err(Error::InvalidParameter("embedding dim must be >= 1".into()));
    }
    let payload = &bytes[HEADER_LEN..];
    let declared = count * dim;
    if payload.len() != declared * 4 {
        return Err(Error::LengthMismatch {
            declared,
            available: payload.len() / 4,
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    EmbeddingSeries::from_flat(values, dim, Granularity::PerFrame, None)
}

pub fn write_embeddings(path: &Path, series: &EmbeddingSeries) -> Result<()> {
    fs::write(path, encode_embeddings(series)).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSeries> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(count: usize, dim: usize) -> EmbeddingSeries {
        let values = (0..count * dim).map(|i| i as f64 * 0.25 - 3.0).collect();
        EmbeddingSeries::from_flat(values, dim, Granularity::PerFrame, None).unwrap()
    }

    #[test]
    fn two_by_three_round_trip() {
        let s = series(2, 3);
        let back = decode_embeddings(&encode_embeddings(&s)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.dim(), 3);
        for (a, b) in s.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_layout_is_little_endian() {
        let bytes = encode_embeddings(&series(2, 3));
        assert_eq!(&bytes[..4], b"FDEB");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[3, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 6 * 4);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_embeddings(&series(1, 1));
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_embeddings(&bytes), Err(Error::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn declared_length_exceeds_payload() {
        let mut bytes = encode_embeddings(&series(2, 3));
        bytes[8..12].copy_from_slice(&5u32.to_le_bytes());
        assert!(matches!(
            decode_embeddings(&bytes),
            Err(Error::LengthMismatch { declared: 15, available: 6 })
        ));
    }

    #[test]
    fn zero_dim_and_version_rejected() {
        let mut bytes = encode_embeddings(&series(0, 1));
        bytes[12..16].copy_from_slice(&0u32.to_le_bytes());
        assert!(decode_embeddings(&bytes).is_err());
        let mut bytes = encode_embeddings(&series(0, 1));
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode_embeddings(&bytes), Err(Error::BadVersion(2))));
    }
}
