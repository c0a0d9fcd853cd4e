//! Binary per-utterance feature cache. Little-endian layout:
//!
//! ```text
//! magic "VSFC" | version u16 | reserved u16 | content_hash u64
//! dim u32 | n_frames u32 | n_spans u16
//! per span: name_len u16, name utf8, start u32, len u32
//! data: n_frames * dim f64
//! payload_hash u64   (FNV-1a over the data bytes)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, LayoutSpan, Stream};
use crate::util::fnv1a64;

const MAGIC: &[u8; 4] = b"VSFC";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub content_hash: u64,
    pub layout: Vec<LayoutSpan>,
    pub vectors: Vec<FeatureVector>,
}

pub fn write_cache(
    path: &Path,
    content_hash: u64,
    layout: &[LayoutSpan],
    vectors: &[FeatureVector],
) -> Result<()> {
    let dim = vectors.first().map_or(0, |v| v.values.len());
    let mut data_bytes = Vec::with_capacity(vectors.len() * dim * 8);
    for v in vectors {
        debug_assert_eq!(v.values.len(), dim);
        for &x in &v.values {
            data_bytes.extend_from_slice(&x.to_le_bytes());
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&content_hash.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(layout.len() as u16).to_le_bytes());
    for span in layout {
        let name = span.stream.name().as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(span.start as u32).to_le_bytes());
        out.extend_from_slice(&(span.len as u32).to_le_bytes());
    }
    out.extend_from_slice(&data_bytes);
    out.extend_from_slice(&fnv1a64(&data_bytes).to_le_bytes());
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: &Path) -> Result<FeatureCache> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::BadCache {
        path: path.into(),
        reason: reason.into(),
    };
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(bad("truncated"));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };

    if take(&mut pos, 4)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap());
    if version != VERSION {
        return Err(bad("unsupported version"));
    }
    take(&mut pos, 2)?;
    let content_hash = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let dim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let n_frames = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let n_spans = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;

    let mut layout = Vec::with_capacity(n_spans);
    for _ in 0..n_spans {
        let name_len = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(&mut pos, name_len)?)
            .map_err(|_| bad("non-utf8 span name"))?
            .to_string();
        let start = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let stream = stream_by_name(&name).ok_or_else(|| bad("unknown span stream"))?;
        layout.push(LayoutSpan { stream, start, len });
    }

    let data_len = n_frames * dim * 8;
    let data = take(&mut pos, data_len)?;
    let stored_hash = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    if fnv1a64(data) != stored_hash {
        return Err(bad("payload checksum mismatch"));
    }

    let mut vectors = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let mut values = Vec::with_capacity(dim);
        for d in 0..dim {
            let off = (f * dim + d) * 8;
            values.push(f64::from_le_bytes(data[off..off + 8].try_into().unwrap()));
        }
        vectors.push(FeatureVector { values });
    }
    Ok(FeatureCache {
        content_hash,
        layout,
        vectors,
    })
}

fn stream_by_name(name: &str) -> Option<Stream> {
    Some(match name {
        "dct_spatial" => Stream::DctSpatial,
        "dct_temporal" => Stream::DctTemporal,
        "pca_spatial" => Stream::PcaSpatial,
        "pca_temporal" => Stream::PcaTemporal,
        "sift_spatial" => Stream::SiftSpatial,
        "sift_temporal" => Stream::SiftTemporal,
        _ => return None,
    })
}
