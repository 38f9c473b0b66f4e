//! Hint-pool file (`SPHP`). Layout, all integers little-endian:
//!
//! ```text
//! "SPHP" | version u16
//! n u64 | k u64 | m u64 | C (milli) u64 | delta_slack (milli) u64 | beta u64
//! master_seed u64 | next_seed_counter u64
//! hint count u64, then per hint (2*beta + 19 bytes):
//!     seed u64 | parity [beta] | slot position u16 | slot index u64 | slot value [beta] | consumed u8
//! side-store count u64, then per entry: index u64 | value [beta]
//! cache count u64, then per entry: index u64 | value [beta]
//! queries_this_phase u64 | flags u8 (bit 0 continuous, bit 1 first-found search)
//! client rng key u64 | client rng counter u64
//! partial count u64, then per partial:
//!     seed u64 | parity [beta] | slot position u16 | slot index u64
//!     | has slot value u8 | slot value [beta] if present
//!     | missing count u32 | (position u16 | index u64) * count
//! next-gen uncovered count u64 | index u64 * count
//! next-gen uncovered values count u64 | (index u64 | value [beta]) * count
//! ```
//!
//! Indices in this file are 1-based, like everything on the client side.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::params::CoverageParams;
use super::pool::{Hint, HintPool, NextGeneration, PartialHint, SearchPolicy};
use crate::error::{Error, Result};
use crate::multiset::MultisetSeed;
use crate::prg::Prg;

pub const POOL_MAGIC: &[u8; 4] = b"SPHP";
pub const POOL_VERSION: u16 = 1;

fn to_milli(x: f64) -> u64 {
    (x * 1000.0).round() as u64
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::integrity(format!("pool file truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn count(&mut self, unit: usize) -> Result<usize> {
        let c = self.u64()?;
        let remaining = (self.buf.len() - self.pos) as u64;
        if c.saturating_mul(unit.max(1) as u64) > remaining {
            return Err(Error::integrity("pool file count exceeds file size"));
        }
        Ok(c as usize)
    }
    fn index(&mut self, n: u64) -> Result<u64> {
        let ix = self.u64()?;
        if ix == 0 || ix > n {
            return Err(Error::integrity(format!("pool file index {ix} outside [1, {n}]")));
        }
        Ok(ix)
    }
}

fn write_map(w: &mut Writer, map: &BTreeMap<u64, Vec<u8>>) {
    w.u64(map.len() as u64);
    for (ix, v) in map {
        w.u64(*ix);
        w.bytes(v);
    }
}

fn read_map(r: &mut Reader<'_>, n: u64, beta: usize) -> Result<BTreeMap<u64, Vec<u8>>> {
    let count = r.count(8 + beta)?;
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let ix = r.index(n)?;
        map.insert(ix, r.take(beta)?.to_vec());
    }
    Ok(map)
}

impl HintPool {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut w = Writer { buf: Vec::new() };
        w.bytes(POOL_MAGIC);
        w.u16(POOL_VERSION);
        for v in [p.n, p.k, p.m, to_milli(p.coverage_constant), to_milli(p.delta_slack), p.beta] {
            w.u64(v);
        }
        w.u64(self.master_seed);
        w.u64(self.next_seed_counter);

        w.u64(self.hints.len() as u64);
        for h in &self.hints {
            w.u64(h.seed.0);
            w.bytes(&h.parity);
            w.u16(h.replacement_position);
            w.u64(h.replacement_index);
            w.bytes(&h.replacement_value);
            w.u8(u8::from(h.consumed));
        }
        write_map(&mut w, &self.uncovered);
        write_map(&mut w, &self.entry_cache);

        w.u64(self.queries_this_phase);
        let flags = u8::from(self.continuous) | (u8::from(self.search == SearchPolicy::FirstFound) << 1);
        w.u8(flags);
        let (key, counter) = self.rng.state();
        w.u64(key);
        w.u64(counter);

        let next = &self.next_generation;
        w.u64(next.partials.len() as u64);
        for ph in &next.partials {
            w.u64(ph.seed.0);
            w.bytes(&ph.partial_parity);
            w.u16(ph.replacement_position);
            w.u64(ph.replacement_index);
            match &ph.replacement_value {
                Some(v) => {
                    w.u8(1);
                    w.bytes(v);
                }
                None => w.u8(0),
            }
            w.u32(ph.missing.len() as u32);
            for &(pos, ix) in &ph.missing {
                w.u16(pos);
                w.u64(ix);
            }
        }
        w.u64(next.uncovered.len() as u64);
        for &ix in &next.uncovered {
            w.u64(ix);
        }
        write_map(&mut w, &next.uncovered_values);
        w.buf
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != POOL_MAGIC {
            return Err(Error::integrity("not a hint-pool file (bad magic)"));
        }
        let version = r.u16()?;
        if version != POOL_VERSION {
            return Err(Error::integrity(format!("unsupported pool version {version}")));
        }
        let (n, k, m) = (r.u64()?, r.u64()?, r.u64()?);
        let (c_milli, d_milli, beta) = (r.u64()?, r.u64()?, r.u64()?);
        let params = CoverageParams::explicit(
            n,
            k,
            m,
            beta,
            c_milli as f64 / 1000.0,
            d_milli as f64 / 1000.0,
        )
        .map_err(|e| Error::integrity(format!("pool parameters invalid: {e}")))?;
        let b = params.beta_usize();
        let master_seed = r.u64()?;
        let next_seed_counter = r.u64()?;

        let count = r.count(params.hint_record_len() as usize)?;
        let mut hints = Vec::with_capacity(count);
        for _ in 0..count {
            let seed = MultisetSeed(r.u64()?);
            let parity = r.take(b)?.to_vec();
            let replacement_position = r.u16()?;
            if replacement_position == 0 || u64::from(replacement_position) > k {
                return Err(Error::integrity("replacement position outside [1, k]"));
            }
            let replacement_index = r.index(n)?;
            let replacement_value = r.take(b)?.to_vec();
            let consumed = match r.u8()? {
                0 => false,
                1 => true,
                f => return Err(Error::integrity(format!("bad consumed flag {f}"))),
            };
            hints.push(Hint {
                seed,
                parity,
                replacement_position,
                replacement_index,
                replacement_value,
                consumed,
            });
        }
        let uncovered = read_map(&mut r, n, b)?;
        let entry_cache = read_map(&mut r, n, b)?;
        let queries_this_phase = r.u64()?;
        let flags = r.u8()?;
        let rng = Prg::from_state(r.u64()?, r.u64()?);

        let count = r.count(8 + b + 2 + 8 + 1 + 4)?;
        let mut partials = Vec::with_capacity(count);
        for _ in 0..count {
            let seed = MultisetSeed(r.u64()?);
            let partial_parity = r.take(b)?.to_vec();
            let replacement_position = r.u16()?;
            let replacement_index = r.index(n)?;
            let replacement_value = match r.u8()? {
                0 => None,
                _ => Some(r.take(b)?.to_vec()),
            };
            let missing_count = r.u32()? as usize;
            let mut missing = Vec::with_capacity(missing_count.min(k as usize));
            for _ in 0..missing_count {
                let pos = r.u16()?;
                missing.push((pos, r.index(n)?));
            }
            partials.push(PartialHint {
                seed,
                partial_parity,
                missing,
                replacement_position,
                replacement_index,
                replacement_value,
            });
        }
        let count = r.count(8)?;
        let mut next_uncovered = BTreeSet::new();
        for _ in 0..count {
            next_uncovered.insert(r.index(n)?);
        }
        let next_values = read_map(&mut r, n, b)?;
        if r.pos != buf.len() {
            return Err(Error::integrity("trailing bytes after pool file"));
        }

        let mut pool = HintPool {
            params,
            hints,
            entry_cache,
            uncovered,
            queries_this_phase,
            next_generation: NextGeneration::from_parts(partials, next_uncovered, next_values),
            master_seed,
            next_seed_counter,
            rng,
            continuous: flags & 1 != 0,
            search: SearchPolicy::FullScanUniform,
        };
        if flags & 2 != 0 {
            pool.search = SearchPolicy::FirstFound;
        }
        Ok(pool)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        HintPool::from_bytes(&fs::read(path)?)
    }

    /// Writes to a sibling temporary file, syncs it, then renames it over
    /// `path`, so an interrupted save leaves the previous file intact.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomically(path.as_ref(), &self.to_bytes())?;
        Ok(())
    }
}

pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
