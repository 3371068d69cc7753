//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "RAOSCKPT" | version u32 | config hash (64 hex bytes)
//! metadata length u32 | metadata (UTF-8 JSON)
//! tensor count u32 | per tensor: name length u16, name, rows u32, cols u32, offset u64
//! payload: f32 values, offsets counted in values from the payload start
//! ```

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::model::{EncoderConfig, GamaModel};
use super::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"RAOSCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint: {0}")]
    Format(String),
    #[error("unsupported checkpoint version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint was written for config {found}, expected {expected}")]
    ConfigMismatch { expected: String, found: String },
    #[error("tensor `{name}`: checkpoint shape {found:?}, model shape {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: [usize; 2],
        found: [usize; 2],
    },
    #[error("tensor `{0}` missing from checkpoint")]
    MissingTensor(String),
}

struct Entry {
    name: String,
    shape: [usize; 2],
    offset: u64,
}

/// Decoded checkpoint contents.
pub struct Checkpoint {
    pub config_hash: String,
    pub metadata: String,
    entries: Vec<Entry>,
    payload: Vec<f32>,
}

pub fn write_checkpoint(model: &GamaModel<f32>, metadata: &str, out: &mut impl Write) -> Result<(), CheckpointError> {
    let params = model.params();
    let hash = model.config().hash();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(hash.as_bytes());
    buf.extend_from_slice(&(metadata.len() as u32).to_le_bytes());
    buf.extend_from_slice(metadata.as_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    let mut offset = 0u64;
    for id in params.ids() {
        let name = params.name(id).as_bytes();
        let t = params.get(id);
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name);
        buf.extend_from_slice(&(t.rows() as u32).to_le_bytes());
        buf.extend_from_slice(&(t.cols() as u32).to_le_bytes());
        buf.extend_from_slice(&offset.to_le_bytes());
        offset += t.len() as u64;
    }
    for id in params.ids() {
        for v in params.get(id).data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn save_checkpoint(model: &GamaModel<f32>, metadata: &str, path: &Path) -> Result<(), CheckpointError> {
    let mut file = std::fs::File::create(path)?;
    write_checkpoint(model, metadata, &mut file)?;
    file.sync_all()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CheckpointError::Format("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, n: usize) -> Result<String, CheckpointError> {
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CheckpointError::Format("invalid UTF-8".into()))
    }
}

impl Checkpoint {
    pub fn read(input: &mut impl Read) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let mut c = Cursor { bytes: &bytes, pos: 0 };
        if c.take(8)? != MAGIC {
            return Err(CheckpointError::Format("bad magic".into()));
        }
        let version = c.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version { found: version });
        }
        let config_hash = c.string(64)?;
        let meta_len = c.u32()? as usize;
        let metadata = c.string(meta_len)?;
        let count = c.u32()? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let len = c.u16()? as usize;
            let name = c.string(len)?;
            let shape = [c.u32()? as usize, c.u32()? as usize];
            let offset = c.u64()?;
            entries.push(Entry { name, shape, offset });
        }
        let rest = &bytes[c.pos..];
        if rest.len() % 4 != 0 {
            return Err(CheckpointError::Format("payload is not a whole number of f32 values".into()));
        }
        let payload: Vec<f32> = rest
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        for e in &entries {
            let end = e.offset as usize + e.shape[0] * e.shape[1];
            if end > payload.len() {
                return Err(CheckpointError::Format(format!("tensor `{}` runs past the payload", e.name)));
            }
        }
        Ok(Checkpoint {
            config_hash,
            metadata,
            entries,
            payload,
        })
    }

    pub fn open(path: &Path) -> Result<Self, CheckpointError> {
        Self::read(&mut std::fs::File::open(path)?)
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// Builds a model for `config` and fills it from the checkpoint after
    /// checking the config hash and every tensor shape.
    pub fn into_model(self, config: EncoderConfig) -> Result<GamaModel<f32>, CheckpointError> {
        let expected = config.hash();
        if expected != self.config_hash {
            return Err(CheckpointError::ConfigMismatch {
                expected,
                found: self.config_hash,
            });
        }
        let mut rng = crate::rng::rng_from_seed(0);
        let mut model = GamaModel::<f32>::new(config, &mut rng).map_err(|e| CheckpointError::Format(e.to_string()))?;
        let ids: Vec<_> = model.params().ids().collect();
        for id in ids {
            let name = model.params().name(id).to_string();
            let want = model.params().get(id).shape();
            let entry = self
                .entries
                .iter()
                .find(|e| e.name == name)
                .ok_or_else(|| CheckpointError::MissingTensor(name.clone()))?;
            if entry.shape != want {
                return Err(CheckpointError::ShapeMismatch {
                    name,
                    expected: want,
                    found: entry.shape,
                });
            }
            let start = entry.offset as usize;
            let data = self.payload[start..start + want[0] * want[1]].to_vec();
            *model.params_mut().get_mut(id) = Tensor::from_vec(want[0], want[1], data).expect("shape checked");
        }
        Ok(model)
    }
}
