//! Binary embedding matrix exchanged with the text-encoding adapter.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"SLLM"`                         |
//! | 4      | 2    | format version (`1`)                    |
//! | 6      | 2    | element type (`1` = f32 little-endian)  |
//! | 8      | 8    | row count                               |
//! | 16     | 8    | dimension                               |
//! | 24     | ...  | `rows * dim` f32 values, row-major      |
//!
//! A sidecar file at `<path>.idx` lists one external id per line; line `i`
//! names row `i`. Ids must be unique.

use crate::features::FeatureBlock;
use crate::{Error, Result};
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"SLLM";
pub const VERSION: u16 = 1;
pub const DTYPE_F32_LE: u16 = 1;
pub const HEADER_LEN: usize = 24;

/// An id-indexed f32 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::Format(format!(
                "{} values for {} rows x {dim} dims",
                data.len(),
                ids.len()
            )));
        }
        let unique: HashSet<&str> = ids.iter().map(String::as_str).collect();
        if unique.len() != ids.len() {
            return Err(Error::Format("row ids are not unique".into()));
        }
        Ok(EmbeddingMatrix { ids, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Widens to an f64 feature block named `name`.
    pub fn to_block(&self, name: &str) -> Result<FeatureBlock> {
        FeatureBlock::new(name, self.dim, self.data.iter().map(|&v| v as f64).collect())
    }
}

/// Path of the id sidecar for a matrix file.
pub fn index_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".idx");
    PathBuf::from(s)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&DTYPE_F32_LE.to_le_bytes()).map_err(io)?;
    w.write_all(&(m.rows() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(m.dim as u64).to_le_bytes()).map_err(io)?;
    for v in &m.data {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let idx = index_path(path);
    let mut w = BufWriter::new(File::create(&idx).map_err(|e| Error::io(&idx, e))?);
    for id in &m.ids {
        if id.contains('\n') {
            return Err(Error::Format(format!("id {id:?} contains a newline")));
        }
        writeln!(w, "{id}").map_err(|e| Error::io(&idx, e))?;
    }
    w.flush().map_err(|e| Error::io(&idx, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN || &bytes[0..4] != MAGIC {
        return Err(Error::Format(format!("{}: missing SLLM header", path.display())));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported SLLM version {version}")));
    }
    let dtype = u16_at(6);
    if dtype != DTYPE_F32_LE {
        return Err(Error::Format(format!("unsupported element type {dtype}")));
    }
    let rows = u64_at(8) as usize;
    let dim = u64_at(16) as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != rows * dim * 4 {
        return Err(Error::Format(format!(
            "{}: payload is {} bytes, header implies {}",
            path.display(),
            payload.len(),
            rows * dim * 4
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let idx = index_path(path);
    let ids: Vec<String> = std::fs::read_to_string(&idx)
        .map_err(|e| Error::io(&idx, e))?
        .lines()
        .map(str::to_string)
        .collect();
    if ids.len() != rows {
        return Err(Error::Format(format!(
            "{}: {} ids for {rows} rows",
            idx.display(),
            ids.len()
        )));
    }
    EmbeddingMatrix::new(ids, dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout_is_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.sllm");
        let m = EmbeddingMatrix::new(vec!["a".into()], 2, vec![1.0, -2.5]).unwrap();
        write_matrix(&p, &m).unwrap();
        let b = std::fs::read(&p).unwrap();
        assert_eq!(&b[..4], b"SLLM");
        assert_eq!(&b[4..8], &[1, 0, 1, 0]);
        assert_eq!(&b[8..16], &1u64.to_le_bytes());
        assert_eq!(&b[16..24], &2u64.to_le_bytes());
        assert_eq!(&b[24..28], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 24 + 8);
        assert_eq!(std::fs::read_to_string(index_path(&p)).unwrap(), "a\n");
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.sllm");
        let m = EmbeddingMatrix::new(vec!["a".into(), "b".into()], 3, vec![0.0; 6]).unwrap();
        write_matrix(&p, &m).unwrap();
        let mut b = std::fs::read(&p).unwrap();
        b.truncate(b.len() - 4);
        std::fs::write(&p, b).unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::Format(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(EmbeddingMatrix::new(vec!["a".into(), "a".into()], 1, vec![0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_bit_identical(rows in 0usize..6, dim in 1usize..5,
                                    bits in proptest::collection::vec(any::<u32>(), 30)) {
            let data: Vec<f32> = (0..rows * dim).map(|i| f32::from_bits(bits[i % bits.len()])).collect();
            let ids = (0..rows).map(|i| format!("id{i}")).collect();
            let m = EmbeddingMatrix::new(ids, dim, data).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("m.sllm");
            write_matrix(&p, &m).unwrap();
            let back = read_matrix(&p).unwrap();
            prop_assert_eq!(&back.ids, &m.ids);
            let a: Vec<u32> = back.data.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = m.data.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
