//! Binary checkpoint layout, all integers and floats little-endian:
//!
//! ```text
//! magic     4 bytes  "RCNN"
//! version   u32
//! vocab, embedding_dim, inputs, n_hidden   u64 each
//! hidden    n_hidden × u64
//! head      u8 (0 categorical, 1 gaussian)
//! head_a    u64   slots | dims
//! head_b    u64   classes | 0
//! lambda_z  f64   0 for categorical
//! n_params  u64
//! params    n_params × f64
//! ```
//!
//! Parameter blocks follow the in-memory order: embeddings (`vocab × emb`),
//! then each dense layer's weights (`fan_in × fan_out`, row-major) and biases,
//! then the output layer, then the Gaussian log-stds.

use std::io::{Read, Write};

use super::{Head, Model, NetSpec};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"RCNN";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

pub fn save_checkpoint(model: &Model, mut w: impl Write) -> Result<()> {
    let spec = model.spec();
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for v in [spec.vocab, spec.embedding_dim, spec.inputs, spec.hidden.len()] {
        put_u64(&mut w, v as u64)?;
    }
    for &h in &spec.hidden {
        put_u64(&mut w, h as u64)?;
    }
    let (kind, a, b, lz) = match spec.head {
        Head::Categorical { slots, classes } => (0u8, slots, classes, 0.0),
        Head::Gaussian { dims, lambda_z } => (1u8, dims, 0, lambda_z),
    };
    w.write_all(&[kind])?;
    put_u64(&mut w, a as u64)?;
    put_u64(&mut w, b as u64)?;
    w.write_all(&lz.to_le_bytes())?;
    put_u64(&mut w, model.params().len() as u64)?;
    for p in model.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
    offset: usize,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| Error::Format {
            line: 0,
            message: format!("checkpoint truncated at byte {}: {e}", self.offset),
        })?;
        self.offset += N;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn size(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).ok().filter(|&v| v < 1 << 40).ok_or_else(|| Error::Format {
            line: 0,
            message: format!("implausible size {v} at byte {}", self.offset - 8),
        })
    }
}

pub fn load_checkpoint(r: impl Read) -> Result<Model> {
    let bad = |message: String| Error::Format { line: 0, message };
    let mut r = Reader { inner: r, offset: 0 };
    if r.bytes::<4>()? != CHECKPOINT_MAGIC {
        return Err(bad("not a network checkpoint".into()));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let vocab = r.size()?;
    let embedding_dim = r.size()?;
    let inputs = r.size()?;
    let n_hidden = r.size()?;
    if n_hidden > 1024 {
        return Err(bad(format!("implausible layer count {n_hidden}")));
    }
    let hidden = (0..n_hidden).map(|_| r.size()).collect::<Result<Vec<_>>>()?;
    let [kind] = r.bytes::<1>()?;
    let a = r.size()?;
    let b = r.size()?;
    let lambda_z = f64::from_le_bytes(r.bytes()?);
    let head = match kind {
        0 => Head::Categorical { slots: a, classes: b },
        1 => Head::Gaussian { dims: a, lambda_z },
        k => return Err(bad(format!("unknown head kind {k}"))),
    };
    let spec = NetSpec { vocab, embedding_dim, inputs, hidden, head };
    spec.validate().map_err(|e| bad(e.to_string()))?;
    let n = r.size()?;
    if n != super::parameter_count(&spec) {
        return Err(bad(format!("parameter count {n} does not match the architecture")));
    }
    let params = (0..n).map(|_| Ok(f64::from_le_bytes(r.bytes()?))).collect::<Result<Vec<_>>>()?;
    Model::from_params(&spec, params)
}
