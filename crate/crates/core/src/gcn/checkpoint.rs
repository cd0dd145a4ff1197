//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "HWNASCP1"
//! kind    u16 length + utf-8       predictor kind tag
//! meta    u32 length + utf-8 JSON  flat string map (transform, device, ...)
//! count   u32                      number of tensors
//! tensor  u16 name length + name, u64 rows, u64 cols, rows*cols f64 values
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::GcnError;

const MAGIC: &[u8; 8] = b"HWNASCP1";

/// Named float64 tensors plus a kind tag and flat metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<(String, Array2<f64>)>,
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Result<&Array2<f64>, GcnError> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| GcnError::Checkpoint(format!("missing tensor {name:?}")))
    }

    pub fn meta_value(&self, key: &str) -> Result<&str, GcnError> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| GcnError::Checkpoint(format!("missing metadata {key:?}")))
    }
}

pub fn write_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), GcnError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    write_str16(&mut w, &ckpt.kind)?;
    let meta = serde_json::to_string(&ckpt.meta)
        .map_err(|e| GcnError::Checkpoint(format!("meta serialization: {e}")))?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    w.write_all(&(ckpt.tensors.len() as u32).to_le_bytes())?;
    for (name, tensor) in &ckpt.tensors {
        write_str16(&mut w, name)?;
        let (rows, cols) = tensor.dim();
        w.write_all(&(rows as u64).to_le_bytes())?;
        w.write_all(&(cols as u64).to_le_bytes())?;
        for &v in tensor.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, GcnError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(GcnError::Checkpoint("bad magic; not a checkpoint".into()));
    }
    let kind = read_str16(&mut r)?;
    let meta_len = read_u32(&mut r)? as usize;
    let mut meta_raw = vec![0u8; meta_len];
    r.read_exact(&mut meta_raw)?;
    let meta: BTreeMap<String, String> = serde_json::from_slice(&meta_raw)
        .map_err(|e| GcnError::Checkpoint(format!("meta parse: {e}")))?;
    let count = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name = read_str16(&mut r)?;
        let rows = read_u64(&mut r)? as usize;
        let cols = read_u64(&mut r)? as usize;
        let mut data = vec![0.0f64; rows * cols];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        let tensor = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| GcnError::Checkpoint(format!("tensor shape: {e}")))?;
        tensors.push((name, tensor));
    }
    Ok(Checkpoint {
        kind,
        meta,
        tensors,
    })
}

fn write_str16(w: &mut impl Write, s: &str) -> Result<(), GcnError> {
    w.write_all(&(s.len() as u16).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str16(r: &mut impl Read) -> Result<String, GcnError> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len)?;
    let mut raw = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut raw)?;
    String::from_utf8(raw).map_err(|_| GcnError::Checkpoint("non-utf8 string".into()))
}

fn read_u32(r: &mut impl Read) -> Result<u32, GcnError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, GcnError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
