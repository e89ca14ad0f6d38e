//! Indexed container of named row-major `f64` matrices.
//!
//! Layout: magic `RSVARK01`, `u64` record count, then an index of
//! `(u32 id length, id bytes, u64 rows, u64 cols, u64 data offset)`, then the data.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RSVARK01";

/// Ordered collection of `(id, matrix)` records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatrixArchive {
    pub records: Vec<(String, DMatrix<f64>)>,
}

impl MatrixArchive {
    pub fn get(&self, id: &str) -> Option<&DMatrix<f64>> {
        self.records.iter().find(|(k, _)| k == id).map(|(_, m)| m)
    }

    pub fn to_map(&self) -> std::collections::HashMap<&str, &DMatrix<f64>> {
        self.records.iter().map(|(k, m)| (k.as_str(), m)).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut header = Vec::new();
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        let index_len: usize = self.records.iter().map(|(id, _)| 4 + id.len() + 24).sum();
        let mut offset = (header.len() + index_len) as u64;
        for (id, m) in &self.records {
            header.extend_from_slice(&(id.len() as u32).to_le_bytes());
            header.extend_from_slice(id.as_bytes());
            header.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
            header.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
            header.extend_from_slice(&offset.to_le_bytes());
            offset += (m.len() * 8) as u64;
        }
        for (_, m) in &self.records {
            for r in 0..m.nrows() {
                for v in m.row(r).iter() {
                    header.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        header
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("archive: {m}"));
        let rd = |pos: usize, n: usize| buf.get(pos..pos + n).ok_or_else(|| bad("truncated"));
        if rd(0, 8)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let count = u64::from_le_bytes(rd(8, 8)?.try_into().unwrap()) as usize;
        let mut pos = 16;
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let len = u32::from_le_bytes(rd(pos, 4)?.try_into().unwrap()) as usize;
            pos += 4;
            let id = String::from_utf8(rd(pos, len)?.to_vec()).map_err(|_| bad("non-utf8 id"))?;
            pos += len;
            let rows = u64::from_le_bytes(rd(pos, 8)?.try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(rd(pos + 8, 8)?.try_into().unwrap()) as usize;
            let off = u64::from_le_bytes(rd(pos + 16, 8)?.try_into().unwrap()) as usize;
            pos += 24;
            let data: Vec<f64> = rd(off, rows * cols * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            records.push((id, DMatrix::from_row_slice(rows, cols, &data)));
        }
        Ok(Self { records })
    }
}

pub fn write_archive(path: &Path, archive: &MatrixArchive) -> Result<()> {
    std::fs::write(path, archive.encode()).map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: &Path) -> Result<MatrixArchive> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    MatrixArchive::decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_lookup() {
        let a = MatrixArchive {
            records: vec![
                ("utt-a".into(), DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])),
                ("utt-b".into(), DMatrix::zeros(0, 60)),
                ("utt-c".into(), DMatrix::from_element(1, 1, f64::MIN_POSITIVE)),
            ],
        };
        let bytes = a.encode();
        let back = MatrixArchive::decode(&bytes).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.get("utt-a").unwrap()[(1, 0)], 4.0);
        assert!(MatrixArchive::decode(&bytes[..bytes.len() - 3]).is_err());
    }
}
