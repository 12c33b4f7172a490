//! Binary checkpoint container.
//!
//! Layout (little-endian): magic, `u32` version, `u64`-prefixed config text, `u32`
//! tensor count, then per tensor a `u32`-prefixed name, `u32` rank, `u64` dims, a width
//! tag and the raw values; finally an optional optimizer block.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::model::{Model, ModelConfig};
use super::params::{ParamEntry, ParamStore};
use crate::meta::{Meta, MetaError};
use crate::Scalar;

pub const MAGIC: &[u8; 8] = b"LTLFCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("stored values are {found}-byte, expected {expected}-byte")]
    Width { found: u8, expected: u8 },
    #[error("config: {0}")]
    Config(#[from] MetaError),
    #[error("tensor layout does not match the configured model: {0}")]
    Layout(String),
    #[error("truncated or corrupt checkpoint")]
    Corrupt,
}

/// Second-moment estimates and step count of the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSnapshot<S> {
    pub square_avg: Vec<S>,
    pub updates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S> {
    /// Model and training configuration.
    pub meta: Meta,
    pub store: ParamStore<S>,
    pub optimizer: Option<OptimizerSnapshot<S>>,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(CheckpointError::Corrupt)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn values<S: Scalar>(&mut self, n: usize) -> Result<Vec<S>, CheckpointError> {
        let w = S::BYTES as usize;
        let raw = self.take(n.checked_mul(w).ok_or(CheckpointError::Corrupt)?)?;
        Ok(raw.chunks_exact(w).map(S::read_le).collect())
    }
}

impl<S: Scalar> Checkpoint<S> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.store.len() * S::BYTES as usize);
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        let text = self.meta.to_text();
        put_u64(&mut out, text.len() as u64);
        out.extend_from_slice(text.as_bytes());
        put_u32(&mut out, self.store.entries().len() as u32);
        for e in self.store.entries() {
            put_u32(&mut out, e.name.len() as u32);
            out.extend_from_slice(e.name.as_bytes());
            put_u32(&mut out, e.shape.len() as u32);
            for &d in &e.shape {
                put_u64(&mut out, d as u64);
            }
            out.push(S::BYTES);
            for &v in &self.store.data[e.range()] {
                v.write_le(&mut out);
            }
        }
        match &self.optimizer {
            None => out.push(0),
            Some(o) => {
                out.push(1);
                put_u64(&mut out, o.updates);
                put_u64(&mut out, o.square_avg.len() as u64);
                out.push(S::BYTES);
                for &v in &o.square_avg {
                    v.write_le(&mut out);
                }
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, CheckpointError> {
        let mut c = Cursor { buf, pos: 0 };
        if c.take(8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = c.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let text_len = c.u64()? as usize;
        let text = std::str::from_utf8(c.take(text_len)?).map_err(|_| CheckpointError::Corrupt)?;
        let meta = Meta::parse(text)?;
        let count = c.u32()? as usize;
        let mut entries = Vec::with_capacity(count);
        let mut data = Vec::new();
        for _ in 0..count {
            let nlen = c.u32()? as usize;
            let name = String::from_utf8(c.take(nlen)?.to_vec()).map_err(|_| CheckpointError::Corrupt)?;
            let rank = c.u32()? as usize;
            let shape = (0..rank).map(|_| c.u64().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let width = c.u8()?;
            if width != S::BYTES {
                return Err(CheckpointError::Width { found: width, expected: S::BYTES });
            }
            let entry = ParamEntry { name, offset: data.len(), shape };
            data.extend(c.values::<S>(entry.len())?);
            entries.push(entry);
        }
        let optimizer = match c.u8()? {
            0 => None,
            1 => {
                let updates = c.u64()?;
                let n = c.u64()? as usize;
                let width = c.u8()?;
                if width != S::BYTES {
                    return Err(CheckpointError::Width { found: width, expected: S::BYTES });
                }
                Some(OptimizerSnapshot { square_avg: c.values(n)?, updates })
            }
            _ => return Err(CheckpointError::Corrupt),
        };
        if c.pos != buf.len() {
            return Err(CheckpointError::Corrupt);
        }
        Ok(Self { meta, store: ParamStore::from_parts(entries, data), optimizer })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("tmp");
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    /// Rebuilds the model described by the stored config and checks the tensor layout.
    pub fn model(&self) -> Result<Model<S>, CheckpointError> {
        let config = ModelConfig::from_meta(&self.meta)?;
        let fresh = Model::<S>::new(config.clone());
        if fresh.store.entries() != self.store.entries() {
            return Err(CheckpointError::Layout(format!(
                "expected {} tensors, found {}",
                fresh.store.entries().len(),
                self.store.entries().len()
            )));
        }
        Model::with_values(config, self.store.data.clone()).ok_or_else(|| CheckpointError::Layout("size".into()))
    }
}
