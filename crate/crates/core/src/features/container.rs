//! `YMFT` container: magic, kind byte, `u32` rows, `u32` cols, then
//! little-endian `f32` values row-major. Files may hold several records
//! back to back.

use std::io::{Read, Write};

use crate::corpus::TARGET_RATE;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMap};

pub const MAGIC: &[u8; 4] = b"YMFT";

fn default_frame_seconds(kind: FeatureKind) -> f64 {
    let hop = if kind == FeatureKind::Filterbank { 220.0 } else { 512.0 };
    hop / TARGET_RATE as f64
}

pub fn write_feature_map<W: Write>(mut w: W, map: &FeatureMap) -> Result<()> {
    let mut buf = Vec::with_capacity(13 + 4 * map.values.len());
    buf.extend_from_slice(MAGIC);
    buf.push(map.kind.code());
    buf.extend_from_slice(&(map.rows as u32).to_le_bytes());
    buf.extend_from_slice(&(map.cols as u32).to_le_bytes());
    for v in &map.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_feature_maps<W: Write>(mut w: W, maps: &[FeatureMap]) -> Result<()> {
    for m in maps {
        write_feature_map(&mut w, m)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one record; `Ok(None)` at a clean end of stream.
pub fn read_feature_map<R: Read>(mut r: R) -> Result<Option<FeatureMap>> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let n = r.read(&mut magic[got..])?;
        if n == 0 {
            if got == 0 {
                return Ok(None);
            }
            return Err(Error::Data("truncated YMFT header".into()));
        }
        got += n;
    }
    if &magic != MAGIC {
        return Err(Error::Data(format!("bad YMFT magic {magic:?}")));
    }
    let mut header = [0u8; 9];
    r.read_exact(&mut header).map_err(|_| Error::Data("truncated YMFT header".into()))?;
    let kind = FeatureKind::from_code(header[0]).ok_or_else(|| Error::Data(format!("unknown feature kind byte {}", header[0])))?;
    let rows = u32::from_le_bytes(header[1..5].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
    if rows != kind.rows() {
        return Err(Error::Data(format!("{kind} record declares {rows} rows")));
    }
    let mut payload = vec![0u8; rows * cols * 4];
    r.read_exact(&mut payload).map_err(|_| Error::Data("truncated YMFT payload".into()))?;
    let values = payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    FeatureMap::new(kind, cols, values, default_frame_seconds(kind)).map(Some)
}

pub fn read_feature_maps<R: Read>(mut r: R) -> Result<Vec<FeatureMap>> {
    let mut maps = Vec::new();
    while let Some(m) = read_feature_map(&mut r)? {
        maps.push(m);
    }
    Ok(maps)
}
