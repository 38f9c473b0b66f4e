//! Database file (`SPDB`): `"SPDB" | version u16 | n u64 | beta u64 | entries`,
//! little-endian, entries contiguous in 0-based index order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::prg::{Prg, DOMAIN_DATABASE};

pub const DB_MAGIC: &[u8; 4] = b"SPDB";
pub const DB_VERSION: u16 = 1;
pub const DB_HEADER_LEN: u64 = 4 + 2 + 8 + 8;

/// Default ceiling on generated database size.
pub const DEFAULT_DISK_BUDGET: u64 = 4 << 30;

/// Work counters. Only the XOR path ever touches `xor_ops`.
#[derive(Debug, Default)]
pub struct ServerCounters {
    pub xor_ops: AtomicU64,
    pub entry_reads: AtomicU64,
    pub requests: AtomicU64,
}

impl ServerCounters {
    pub fn xor_ops(&self) -> u64 {
        self.xor_ops.load(Ordering::Relaxed)
    }

    pub fn entry_reads(&self) -> u64 {
        self.entry_reads.load(Ordering::Relaxed)
    }

    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }
}

#[derive(Debug)]
pub struct Database {
    n: u64,
    beta: u64,
    data: Vec<u8>,
    counters: ServerCounters,
}

impl Database {
    pub fn from_entries(n: u64, beta: u64, data: Vec<u8>) -> Result<Self> {
        if n == 0 || beta == 0 {
            return Err(Error::param("database needs n >= 1 and beta >= 1"));
        }
        let expected = n
            .checked_mul(beta)
            .ok_or_else(|| Error::param("n * beta overflows"))?;
        if data.len() as u64 != expected {
            return Err(Error::integrity(format!(
                "database body has {} bytes, expected n * beta = {expected}",
                data.len()
            )));
        }
        Ok(Database {
            n,
            beta,
            data,
            counters: ServerCounters::default(),
        })
    }

    /// Deterministic pseudorandom contents.
    pub fn generate(n: u64, beta: u64, seed: u64) -> Result<Self> {
        Database::generate_within(n, beta, seed, DEFAULT_DISK_BUDGET)
    }

    pub fn generate_within(n: u64, beta: u64, seed: u64, budget: u64) -> Result<Self> {
        let size = n
            .checked_mul(beta)
            .and_then(|s| s.checked_add(DB_HEADER_LEN))
            .ok_or_else(|| Error::param("n * beta overflows"))?;
        if size > budget {
            return Err(Error::param(format!(
                "database of {size} bytes exceeds budget of {budget} bytes"
            )));
        }
        let mut data = vec![0u8; (n * beta) as usize];
        Prg::keyed(seed, DOMAIN_DATABASE).fill_bytes(&mut data);
        Database::from_entries(n, beta, data)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < DB_HEADER_LEN as usize || &bytes[..4] != DB_MAGIC {
            return Err(Error::integrity("not a database file (bad magic)"));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != DB_VERSION {
            return Err(Error::integrity(format!("unsupported database version {version}")));
        }
        let n = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
        let beta = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
        let body = &bytes[DB_HEADER_LEN as usize..];
        let expected = n.checked_mul(beta);
        if expected != Some(body.len() as u64) {
            return Err(Error::integrity(format!(
                "header says n = {n}, beta = {beta} but body has {} bytes",
                body.len()
            )));
        }
        Database::from_entries(n, beta, body.to_vec())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Database::from_bytes(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(DB_MAGIC)?;
        w.write_all(&DB_VERSION.to_le_bytes())?;
        w.write_all(&self.n.to_le_bytes())?;
        w.write_all(&self.beta.to_le_bytes())?;
        w.write_all(&self.data)?;
        w.flush()?;
        Ok(())
    }

    pub fn file_len(&self) -> u64 {
        DB_HEADER_LEN + self.n * self.beta
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn beta(&self) -> u64 {
        self.beta
    }

    /// Entry at a 0-based index, without touching the counters.
    pub fn entry(&self, index: u64) -> &[u8] {
        let b = self.beta as usize;
        let start = index as usize * b;
        &self.data[start..start + b]
    }

    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn counters(&self) -> &ServerCounters {
        &self.counters
    }

    pub(crate) fn read_entry(&self, index: u64) -> &[u8] {
        self.counters.entry_reads.fetch_add(1, Ordering::Relaxed);
        self.entry(index)
    }

    /// `(index, entry)` pairs with 1-based indices, as consumed by
    /// preprocessing.
    pub fn entries_one_based(&self) -> impl Iterator<Item = Result<(u64, Vec<u8>)>> + '_ {
        self.data
            .chunks_exact(self.beta as usize)
            .enumerate()
            .map(|(i, e)| Ok((i as u64 + 1, e.to_vec())))
    }
}
