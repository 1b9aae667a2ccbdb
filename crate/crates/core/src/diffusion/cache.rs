//! On-disk cache of per-snapshot diffusion matrices.
//!
//! One little-endian binary file per (dataset hash, snapshot, kind,
//! parameter). Layout: magic, snapshot index, kind tag, parameter bits,
//! universe size, active count, active ids (u32), values (f64, row-major).

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{DiffusionKind, DiffusionMatrix};
use crate::error::{Error, Result};
use crate::graphstream::GraphStream;

const MAGIC: &[u8; 8] = b"DGADDIF1";

#[derive(Debug, Clone)]
pub struct DiffusionCache {
    dir: PathBuf,
}

impl DiffusionCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(DiffusionCache { dir })
    }

    fn path(&self, dataset: &str, snapshot: usize, kind: DiffusionKind) -> PathBuf {
        let (tag, param) = split_kind(kind);
        let tag = if tag == 0 { "ppr" } else { "heat" };
        self.dir.join(format!(
            "{dataset}-{snapshot}-{tag}-{:016x}.bin",
            param.to_bits()
        ))
    }

    /// Loads every snapshot's matrix, computing and storing the missing ones.
    pub fn load_or_compute(
        &self,
        gs: &GraphStream,
        dataset: &str,
        kind: DiffusionKind,
    ) -> Result<Vec<DiffusionMatrix>> {
        kind.validate()?;
        gs.snapshots()
            .par_iter()
            .map(|snap| {
                let path = self.path(dataset, snap.index(), kind);
                if path.exists() {
                    if let Ok(m) = read(&path) {
                        if m.kind == kind && m.node_count() == gs.node_count() {
                            return Ok(m);
                        }
                    }
                }
                let m = kind.compute(snap)?;
                write(&path, &m)?;
                Ok(m)
            })
            .collect()
    }
}

fn split_kind(kind: DiffusionKind) -> (u8, f64) {
    match kind {
        DiffusionKind::Ppr { alpha } => (0, alpha),
        DiffusionKind::Heat { beta } => (1, beta),
    }
}

pub(crate) fn write(path: &Path, m: &DiffusionMatrix) -> Result<()> {
    let (tag, param) = split_kind(m.kind);
    let na = m.active.len();
    let mut buf = Vec::with_capacity(48 + na * 4 + na * na * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(m.snapshot as u64).to_le_bytes());
    buf.push(tag);
    buf.extend_from_slice(&param.to_le_bytes());
    buf.extend_from_slice(&(m.node_count() as u64).to_le_bytes());
    buf.extend_from_slice(&(na as u64).to_le_bytes());
    for &v in &m.active {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for i in 0..na {
        for j in 0..na {
            buf.extend_from_slice(&m.values[(i, j)].to_le_bytes());
        }
    }
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read(path: &Path) -> Result<DiffusionMatrix> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let corrupt = || Error::Data(format!("corrupt diffusion cache file {}", path.display()));
    let mut cur = bytes.as_slice();
    let mut take = |n: usize| -> Result<&[u8]> {
        if cur.len() < n {
            return Err(corrupt());
        }
        let (head, tail) = cur.split_at(n);
        cur = tail;
        Ok(head)
    };
    if take(8)? != MAGIC {
        return Err(corrupt());
    }
    let u64_at = |b: &[u8]| u64::from_le_bytes(b.try_into().unwrap());
    let snapshot = u64_at(take(8)?) as usize;
    let tag = take(1)?[0];
    let param = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let node_count = u64_at(take(8)?) as usize;
    let na = u64_at(take(8)?) as usize;
    let kind = match tag {
        0 => DiffusionKind::Ppr { alpha: param },
        1 => DiffusionKind::Heat { beta: param },
        _ => return Err(corrupt()),
    };
    let active: Vec<u32> = take(na * 4)?
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if active.iter().any(|&v| v as usize >= node_count) {
        return Err(corrupt());
    }
    let data: Vec<f64> = take(na * na * 8)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = DMatrix::from_row_slice(na, na, &data);
    Ok(DiffusionMatrix::new(
        snapshot, kind, node_count, active, values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_reuse() {
        let gs = GraphStream::from_snapshot_pairs(
            6,
            vec![vec![(0, 1), (1, 2)], vec![(3, 4), (4, 5), (5, 3)]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cache = DiffusionCache::new(dir.path()).unwrap();
        let kind = DiffusionKind::Heat { beta: 2.0 };
        let first = cache.load_or_compute(&gs, "abc", kind).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
        let second = cache.load_or_compute(&gs, "abc", kind).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let gs = GraphStream::from_snapshot_pairs(3, vec![vec![(0, 1)]]).unwrap();
        let m = DiffusionKind::default()
            .compute(&gs.snapshots()[0])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        write(&path, &m).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(read(&path).is_err());
    }
}
