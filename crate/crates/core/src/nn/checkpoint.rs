//! Binary checkpoints.
//!
//! Layout: magic `TGCK`, format version (u32), header length (u32) and a
//! UTF-8 header of `key=value` lines, tensor count (u32), then per tensor
//! its name (u16 length + bytes), kind (u8: 0 param, 1 buffer), rows and
//! cols (u32) and element offset (u64) into the payload, and finally the
//! payload as little-endian f64. All integers are little-endian.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::module::{Module, TensorKind};
use super::{Matrix, Real};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TGCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    pub name: String,
    pub kind: TensorKind,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub header: BTreeMap<String, String>,
    pub tensors: Vec<TensorRecord>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Mismatch(msg.into())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

impl Checkpoint {
    /// Snapshot of every parameter and buffer of `module`.
    pub fn from_module<T: Real, M: Module<T> + ?Sized>(module: &M, header: BTreeMap<String, String>) -> Self {
        let mut tensors = Vec::new();
        module.visit("", &mut |name, kind, m| {
            tensors.push(TensorRecord {
                name: name.to_string(),
                kind,
                rows: m.rows(),
                cols: m.cols(),
                data: m.as_slice().iter().map(|v| v.to_f64_lossy()).collect(),
            });
        });
        Self { header, tensors }
    }

    /// Copies the stored tensors into `module`. Names, order and shapes must
    /// match exactly.
    pub fn apply_to<T: Real, M: Module<T> + ?Sized>(&self, module: &mut M) -> Result<()> {
        let mut expected = Vec::new();
        module.visit("", &mut |name, kind, m| expected.push((name.to_string(), kind, m.shape())));
        if expected.len() != self.tensors.len() {
            return Err(bad(format!(
                "checkpoint has {} tensors, model expects {}",
                self.tensors.len(),
                expected.len()
            )));
        }
        for ((name, kind, shape), t) in expected.iter().zip(&self.tensors) {
            if *name != t.name || *kind != t.kind || *shape != (t.rows, t.cols) {
                return Err(bad(format!(
                    "tensor '{}' {:?} does not match model tensor '{}' {:?}",
                    t.name,
                    (t.rows, t.cols),
                    name,
                    shape
                )));
            }
        }
        let mut it = self.tensors.iter().filter(|t| t.kind == TensorKind::Param);
        module.visit_params_mut("", &mut |_, p| {
            let t = it.next().expect("checked above");
            for (dst, &src) in p.value.as_mut_slice().iter_mut().zip(&t.data) {
                *dst = T::from_f64_lossy(src);
            }
        });
        let mut it = self.tensors.iter().filter(|t| t.kind == TensorKind::Buffer);
        module.visit_buffers_mut("", &mut |_, m: &mut Matrix<T>| {
            let t = it.next().expect("checked above");
            for (dst, &src) in m.as_mut_slice().iter_mut().zip(&t.data) {
                *dst = T::from_f64_lossy(src);
            }
        });
        Ok(())
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let mut header = String::new();
        for (k, v) in &self.header {
            if k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::Domain(format!("header entry '{k}' cannot be stored")));
            }
            header.push_str(&format!("{k}={v}\n"));
        }
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        let mut offset = 0u64;
        for t in &self.tensors {
            w.write_all(&(t.name.len() as u16).to_le_bytes())?;
            w.write_all(t.name.as_bytes())?;
            w.write_all(&[match t.kind {
                TensorKind::Param => 0u8,
                TensorKind::Buffer => 1u8,
            }])?;
            w.write_all(&(t.rows as u32).to_le_bytes())?;
            w.write_all(&(t.cols as u32).to_le_bytes())?;
            w.write_all(&offset.to_le_bytes())?;
            offset += t.data.len() as u64;
        }
        for t in &self.tensors {
            for v in &t.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let hlen = read_u32(&mut r)? as usize;
        let mut hbytes = vec![0u8; hlen];
        r.read_exact(&mut hbytes)?;
        let text = String::from_utf8(hbytes).map_err(|_| bad("checkpoint header is not UTF-8"))?;
        let header = text
            .lines()
            .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        let count = read_u32(&mut r)? as usize;
        let mut index = Vec::with_capacity(count);
        for _ in 0..count {
            let mut b2 = [0u8; 2];
            r.read_exact(&mut b2)?;
            let mut name = vec![0u8; u16::from_le_bytes(b2) as usize];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| bad("tensor name is not UTF-8"))?;
            let mut kind = [0u8; 1];
            r.read_exact(&mut kind)?;
            let kind = match kind[0] {
                0 => TensorKind::Param,
                1 => TensorKind::Buffer,
                k => return Err(bad(format!("unknown tensor kind {k}"))),
            };
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8)?;
            index.push((name, kind, rows, cols, u64::from_le_bytes(b8)));
        }
        let mut tensors = Vec::with_capacity(count);
        let mut expected_offset = 0u64;
        for (name, kind, rows, cols, offset) in index {
            if offset != expected_offset {
                return Err(bad(format!("tensor '{name}' has offset {offset}, expected {expected_offset}")));
            }
            let mut data = vec![0f64; rows * cols];
            let mut b8 = [0u8; 8];
            for v in data.iter_mut() {
                r.read_exact(&mut b8)?;
                *v = f64::from_le_bytes(b8);
            }
            expected_offset += data.len() as u64;
            tensors.push(TensorRecord { name, kind, rows, cols, data });
        }
        Ok(Self { header, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }
}
