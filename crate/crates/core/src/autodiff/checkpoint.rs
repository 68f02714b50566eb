//! `YMCK` parameter container: magic, `u32` record count, then per record
//! `u32` name length, UTF-8 name, `u32` rank, `u32` dims, little-endian `f32`
//! payload.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"YMCK";

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub records: Vec<CheckpointRecord>,
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Data("truncated YMCK checkpoint".into()))?;
    Ok(u32::from_le_bytes(b))
}

impl Checkpoint {
    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], data: Vec<f32>) {
        self.records.push(CheckpointRecord { name: name.into(), shape: shape.to_vec(), data });
    }

    pub fn get(&self, name: &str) -> Option<&CheckpointRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for r in &self.records {
            buf.extend_from_slice(&(r.name.len() as u32).to_le_bytes());
            buf.extend_from_slice(r.name.as_bytes());
            buf.extend_from_slice(&(r.shape.len() as u32).to_le_bytes());
            for &d in &r.shape {
                buf.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &r.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| Error::Data("truncated YMCK checkpoint".into()))?;
        if &magic != MAGIC {
            return Err(Error::Data(format!("bad checkpoint magic {magic:?}")));
        }
        let count = read_u32(&mut r)?;
        let mut records = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name).map_err(|_| Error::Data("truncated YMCK name".into()))?;
            let name = String::from_utf8(name).map_err(|_| Error::Data("checkpoint name is not UTF-8".into()))?;
            let rank = read_u32(&mut r)? as usize;
            let shape = (0..rank).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let mut raw = vec![0u8; n * 4];
            r.read_exact(&mut raw).map_err(|_| Error::Data(format!("truncated payload for `{name}`")))?;
            let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            records.push(CheckpointRecord { name, shape, data });
        }
        Ok(Checkpoint { records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::read_from(fs::File::open(path)?)
    }
}
