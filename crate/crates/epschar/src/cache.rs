//! Binary caches for expensive tables, keyed by the canonical config hash.
//!
//! File layout (all little-endian):
//!   magic "EPSC" | version u8 | n u8 | r u8 | p u64 | kind u8 |
//!   payload_len u64 | payload bytes | sha256(payload) (32 bytes)
//!
//! Payload kinds: 0 = raw u64 index array; 1 = class-function table of
//! (index u64, coeff i64 * deg) records with deg u16 up front.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::charfun::ClassFunction;
use crate::cyc::CycValue;
use crate::Error;

pub const MAGIC: &[u8; 4] = b"EPSC";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Indices = 0,
    CycTable = 1,
}

pub struct CacheDir {
    pub dir: PathBuf,
}

impl CacheDir {
    /// Resolution order: explicit flag, EPSCHAR_CACHE, ./.epschar-cache.
    pub fn resolve(flag: Option<&Path>) -> CacheDir {
        let dir = flag
            .map(|p| p.to_path_buf())
            .or_else(|| std::env::var_os("EPSCHAR_CACHE").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".epschar-cache"));
        CacheDir { dir }
    }

    fn path(&self, key: &str, name: &str) -> PathBuf {
        self.dir.join(format!("{key}-{name}.epsc"))
    }

    fn write_file(
        &self,
        key: &str,
        name: &str,
        params: (u8, u8, u64),
        kind: Kind,
        payload: &[u8],
    ) -> Result<(), Error> {
        std::fs::create_dir_all(&self.dir)?;
        let mut bytes = Vec::with_capacity(payload.len() + 64);
        bytes.extend_from_slice(MAGIC);
        bytes.push(VERSION);
        bytes.push(params.0);
        bytes.push(params.1);
        bytes.extend_from_slice(&params.2.to_le_bytes());
        bytes.push(kind as u8);
        bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        bytes.extend_from_slice(payload);
        bytes.extend_from_slice(&Sha256::digest(payload));
        std::fs::write(self.path(key, name), bytes)?;
        Ok(())
    }

    /// Reads and verifies a cache file; `None` means absent or corrupt (the
    /// caller recomputes, warning on corruption).
    fn read_file(&self, key: &str, name: &str, params: (u8, u8, u64), kind: Kind) -> Option<Vec<u8>> {
        let path = self.path(key, name);
        let bytes = std::fs::read(&path).ok()?;
        let parse = || -> Option<Vec<u8>> {
            if bytes.len() < 4 + 1 + 1 + 1 + 8 + 1 + 8 + 32 || &bytes[0..4] != MAGIC {
                return None;
            }
            if bytes[4] != VERSION || bytes[5] != params.0 || bytes[6] != params.1 {
                return None;
            }
            let p = u64::from_le_bytes(bytes[7..15].try_into().ok()?);
            if p != params.2 || bytes[15] != kind as u8 {
                return None;
            }
            let len = u64::from_le_bytes(bytes[16..24].try_into().ok()?) as usize;
            if bytes.len() != 24 + len + 32 {
                return None;
            }
            let payload = &bytes[24..24 + len];
            let digest = Sha256::digest(payload);
            if digest.as_slice() != &bytes[24 + len..] {
                return None;
            }
            Some(payload.to_vec())
        };
        let out = parse();
        if out.is_none() {
            eprintln!("warning: cache file {} is stale or corrupt; recomputing", path.display());
        }
        out
    }

    pub fn store_indices(
        &self,
        key: &str,
        name: &str,
        params: (u8, u8, u64),
        data: &[u64],
    ) -> Result<(), Error> {
        let mut payload = Vec::with_capacity(8 + data.len() * 8);
        payload.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for &v in data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        self.write_file(key, name, params, Kind::Indices, &payload)
    }

    pub fn load_indices(&self, key: &str, name: &str, params: (u8, u8, u64)) -> Option<Vec<u64>> {
        let payload = self.read_file(key, name, params, Kind::Indices)?;
        if payload.len() < 8 {
            return None;
        }
        let count = u64::from_le_bytes(payload[0..8].try_into().ok()?) as usize;
        if payload.len() != 8 + count * 8 {
            return None;
        }
        Some(
            payload[8..]
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    }

    pub fn store_table(
        &self,
        key: &str,
        name: &str,
        params: (u8, u8, u64),
        table: &ClassFunction,
        deg: usize,
    ) -> Result<(), Error> {
        let mut payload = Vec::new();
        payload.extend_from_slice(&(deg as u16).to_le_bytes());
        payload.push(u8::from(table.full_domain));
        payload.extend_from_slice(&(table.table.len() as u64).to_le_bytes());
        for (idx, v) in &table.table {
            payload.extend_from_slice(&idx.to_le_bytes());
            assert_eq!(v.c.len(), deg);
            for &c in &v.c {
                payload.extend_from_slice(&c.to_le_bytes());
            }
        }
        self.write_file(key, name, params, Kind::CycTable, &payload)
    }

    pub fn load_table(
        &self,
        key: &str,
        name: &str,
        params: (u8, u8, u64),
        deg: usize,
    ) -> Option<ClassFunction> {
        let payload = self.read_file(key, name, params, Kind::CycTable)?;
        if payload.len() < 11 {
            return None;
        }
        let file_deg = u16::from_le_bytes(payload[0..2].try_into().ok()?) as usize;
        if file_deg != deg {
            return None;
        }
        let full_domain = payload[2] == 1;
        let count = u64::from_le_bytes(payload[3..11].try_into().ok()?) as usize;
        let rec = 8 + deg * 8;
        if payload.len() != 11 + count * rec {
            return None;
        }
        let mut table = BTreeMap::new();
        for chunk in payload[11..].chunks_exact(rec) {
            let idx = u64::from_le_bytes(chunk[0..8].try_into().ok()?);
            let c: Vec<i64> = chunk[8..]
                .chunks_exact(8)
                .map(|b| i64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            table.insert(idx, CycValue { c });
        }
        Some(ClassFunction { full_domain, table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_corruption() {
        let tmp = std::env::temp_dir().join(format!("epschar-cache-test-{}", std::process::id()));
        let cache = CacheDir { dir: tmp.clone() };
        let data = vec![1u64, 5, 7, 3888];
        cache.store_indices("k", "reps", (2, 2, 3), &data).unwrap();
        assert_eq!(cache.load_indices("k", "reps", (2, 2, 3)), Some(data.clone()));
        // wrong parameters are treated as a miss
        assert_eq!(cache.load_indices("k", "reps", (2, 3, 3)), None);
        // flip a payload byte: checksum mismatch, treated as a miss
        let path = tmp.join("k-reps.epsc");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[30] ^= 0xff;
        std::fs::write(&path, bytes).unwrap();
        assert_eq!(cache.load_indices("k", "reps", (2, 2, 3)), None);
        std::fs::remove_dir_all(&tmp).ok();
    }

    #[test]
    fn table_roundtrip_bit_exact() {
        let tmp = std::env::temp_dir().join(format!("epschar-cache-tbl-{}", std::process::id()));
        let cache = CacheDir { dir: tmp.clone() };
        let mut table = BTreeMap::new();
        table.insert(4u64, CycValue { c: vec![1, -2] });
        table.insert(9u64, CycValue { c: vec![0, 7] });
        let cf = ClassFunction { full_domain: true, table };
        cache.store_table("h", "tl", (2, 2, 3), &cf, 2).unwrap();
        let loaded = cache.load_table("h", "tl", (2, 2, 3), 2).unwrap();
        assert_eq!(loaded, cf);
        // storing again produces identical bytes (cross-run determinism)
        let path = tmp.join("h-tl.epsc");
        let first = std::fs::read(&path).unwrap();
        cache.store_table("h", "tl", (2, 2, 3), &cf, 2).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        std::fs::remove_dir_all(&tmp).ok();
    }
}
