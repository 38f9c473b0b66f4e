//! Client-side hint state.
//!
//! A pool holds the active generation of hints, the per-phase entry cache,
//! the values of indices no hint covers, and (when continuous preprocessing
//! is on) the partially assembled next generation. Indices are 1-based.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use log::{debug, warn};
use num_bigint::BigUint;
use rayon::prelude::*;

use super::params::CoverageParams;
use crate::combinatorics::binomial;
use crate::error::{Error, Result};
use crate::multiset::{expand_into, Multiset, MultisetSeed};
use crate::prg::{derive_seed, mix64, Prg, DOMAIN_CLIENT, DOMAIN_REPLACEMENT};

pub(crate) fn xor_into(acc: &mut [u8], value: &[u8]) {
    for (a, v) in acc.iter_mut().zip(value) {
        *a ^= v;
    }
}

/// 1-based slot that replenishment may rewrite, fixed by the seed.
pub fn replacement_position_for(seed: MultisetSeed, k: u64) -> u16 {
    1 + Prg::keyed(seed.0, DOMAIN_REPLACEMENT).below(k) as u16
}

fn fingerprint(elements: &[u64]) -> u128 {
    let mut a = 0x243F_6A88_85A3_08D3u64;
    let mut b = 0x1319_8A2E_0370_7344u64;
    for &e in elements {
        a = mix64(a ^ e);
        b = mix64(b.wrapping_add(e).rotate_left(17));
    }
    (u128::from(a) << 64) | u128::from(b ^ elements.len() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hint {
    pub seed: MultisetSeed,
    /// XOR of the entries of the effective multiset.
    pub parity: Vec<u8>,
    /// 1-based position in the expanded multiset.
    pub replacement_position: u16,
    pub replacement_index: u64,
    pub replacement_value: Vec<u8>,
    pub consumed: bool,
}

impl Hint {
    /// Expanded multiset with the replacement slot substituted, in slot order.
    pub fn effective_slots_into(&self, n: u64, k: u64, out: &mut Vec<u64>) {
        expand_into(n, k, self.seed, out);
        out[usize::from(self.replacement_position) - 1] = self.replacement_index;
    }

    pub fn effective_multiset(&self, n: u64, k: u64) -> Multiset {
        let mut slots = Vec::with_capacity(k as usize);
        self.effective_slots_into(n, k, &mut slots);
        slots.sort_unstable();
        Multiset::from_sorted_unchecked(slots, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HintHandle(pub(crate) usize);

impl HintHandle {
    pub fn position(&self) -> usize {
        self.0
    }
}

/// Result of looking up a target index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lookup {
    /// Already retrieved this phase.
    CacheHit(Vec<u8>),
    Hint(HintHandle),
    /// No hint covers the index but its value was kept at preprocessing.
    Stored(Vec<u8>),
    /// No hint covers the index and no value is stored locally.
    Uncovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchPolicy {
    /// Scan every unconsumed hint and pick uniformly among the covering ones.
    #[default]
    FullScanUniform,
    /// Stop at the first covering hint any worker finds.
    FirstFound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialHint {
    pub seed: MultisetSeed,
    pub partial_parity: Vec<u8>,
    /// `(position, index)` pairs not yet folded in.
    pub missing: Vec<(u16, u64)>,
    pub replacement_position: u16,
    pub replacement_index: u64,
    pub replacement_value: Option<Vec<u8>>,
}

impl PartialHint {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NextGeneration {
    pub(crate) partials: Vec<PartialHint>,
    /// Indices no partial references; their values are collected for the
    /// next side store.
    pub(crate) uncovered: BTreeSet<u64>,
    pub(crate) uncovered_values: BTreeMap<u64, Vec<u8>>,
    by_index: HashMap<u64, Vec<u32>>,
}

impl NextGeneration {
    pub(crate) fn from_parts(
        partials: Vec<PartialHint>,
        uncovered: BTreeSet<u64>,
        uncovered_values: BTreeMap<u64, Vec<u8>>,
    ) -> Self {
        let mut next = NextGeneration {
            partials,
            uncovered,
            uncovered_values,
            by_index: HashMap::new(),
        };
        next.rebuild_index();
        next
    }

    fn rebuild_index(&mut self) {
        let mut by_index: HashMap<u64, Vec<u32>> = HashMap::new();
        for (id, p) in self.partials.iter().enumerate() {
            let mut seen = HashSet::new();
            for &(_, ix) in &p.missing {
                if seen.insert(ix) {
                    by_index.entry(ix).or_default().push(id as u32);
                }
            }
        }
        self.by_index = by_index;
    }

    pub fn partials(&self) -> &[PartialHint] {
        &self.partials
    }

    pub fn is_empty(&self) -> bool {
        self.partials.is_empty()
    }

    pub fn completed(&self) -> usize {
        self.partials.iter().filter(|p| p.is_complete()).count()
    }

    pub fn completed_fraction(&self) -> f64 {
        if self.partials.is_empty() {
            return 0.0;
        }
        self.completed() as f64 / self.partials.len() as f64
    }

    fn ingest(&mut self, index: u64, value: &[u8]) {
        if self.uncovered.contains(&index) {
            self.uncovered_values
                .entry(index)
                .or_insert_with(|| value.to_vec());
        }
        let Some(ids) = self.by_index.remove(&index) else {
            return;
        };
        for id in ids {
            let p = &mut self.partials[id as usize];
            p.missing.retain(|&(pos, ix)| {
                if ix != index {
                    return true;
                }
                xor_into(&mut p.partial_parity, value);
                if pos == p.replacement_position {
                    p.replacement_value = Some(value.to_vec());
                }
                false
            });
        }
    }

    /// Indices still needed to finish every partial and the side store.
    fn outstanding(&self) -> Vec<u64> {
        let mut need: BTreeSet<u64> = self.by_index.keys().copied().collect();
        need.extend(
            self.uncovered
                .iter()
                .filter(|ix| !self.uncovered_values.contains_key(ix)),
        );
        need.into_iter().collect()
    }
}

/// Entry source used to finish a phase refresh.
pub trait RefreshSource {
    /// Entries at the given 1-based indices, in request order.
    fn fetch(&mut self, indices: &[u64]) -> Result<Vec<Vec<u8>>>;

    /// The whole database as `(index, entry)` pairs in index order.
    fn stream(&mut self) -> Result<Vec<(u64, Vec<u8>)>>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct RefreshReport {
    /// Fell back to streaming the full database.
    pub cold_start: bool,
    pub completion_batches: u64,
    /// Distinct indices that had to be fetched to finish the generation.
    pub completion_indices: u64,
    /// Payload bytes downloaded to finish the generation.
    pub bytes_fetched: u64,
}

#[derive(Debug, Clone)]
pub struct HintPool {
    pub(crate) params: CoverageParams,
    pub(crate) hints: Vec<Hint>,
    pub(crate) entry_cache: BTreeMap<u64, Vec<u8>>,
    pub(crate) uncovered: BTreeMap<u64, Vec<u8>>,
    pub(crate) queries_this_phase: u64,
    pub(crate) next_generation: NextGeneration,
    pub(crate) master_seed: u64,
    pub(crate) next_seed_counter: u64,
    pub(crate) rng: Prg,
    pub(crate) continuous: bool,
    pub(crate) search: SearchPolicy,
}

/// Draws seeds in counter mode and keeps the first `m` whose expansions are
/// distinct.
fn select_distinct_seeds<I>(params: &CoverageParams, seeds: &mut I) -> Result<Vec<MultisetSeed>>
where
    I: Iterator<Item = MultisetSeed>,
{
    let CoverageParams { n, k, m, .. } = *params;
    if BigUint::from(m) > binomial(n + k - 1, k) {
        return Err(Error::param(format!(
            "m = {m} exceeds the number of distinct size-{k} multisets over [{n}]"
        )));
    }
    let mut seen = HashSet::with_capacity(m as usize);
    let mut chosen = Vec::with_capacity(m as usize);
    let mut scratch = Vec::with_capacity(k as usize);
    let mut discarded = 0u64;
    while (chosen.len() as u64) < m {
        let seed = seeds
            .next()
            .ok_or_else(|| Error::param("seed source exhausted"))?;
        expand_into(n, k, seed, &mut scratch);
        if seen.insert(fingerprint(&scratch)) {
            chosen.push(seed);
        } else {
            discarded += 1;
        }
    }
    if discarded > 0 {
        debug!("discarded {discarded} duplicate expansions");
    }
    Ok(chosen)
}

struct CounterSeeds<'a> {
    master: u64,
    counter: &'a mut u64,
}

impl Iterator for CounterSeeds<'_> {
    type Item = MultisetSeed;

    fn next(&mut self) -> Option<MultisetSeed> {
        let s = derive_seed(self.master, *self.counter);
        *self.counter = self.counter.checked_add(1)?;
        Some(MultisetSeed(s))
    }
}

type Generation = (Vec<Hint>, BTreeMap<u64, Vec<u8>>);

/// Parities, replacement values and side store for the given seeds, built in
/// one pass over `entries`.
fn build_generation<I>(
    params: &CoverageParams,
    seeds: &[MultisetSeed],
    entries: I,
) -> Result<Generation>
where
    I: IntoIterator<Item = Result<(u64, Vec<u8>)>>,
{
    let CoverageParams { n, k, beta, .. } = *params;
    let beta = beta as usize;

    // CSR layout: for each index, the hints referencing it (with multiplicity).
    let mut offsets = vec![0u64; n as usize + 2];
    let mut scratch = Vec::with_capacity(k as usize);
    for &seed in seeds {
        expand_into(n, k, seed, &mut scratch);
        for &ix in &scratch {
            offsets[ix as usize + 1] += 1;
        }
    }
    for ix in 1..offsets.len() {
        offsets[ix] += offsets[ix - 1];
    }
    let mut fill = offsets.clone();
    let mut slots = vec![0u32; offsets[n as usize + 1] as usize];
    let mut replacement_of: HashMap<u64, Vec<u32>> = HashMap::new();
    let mut positions = Vec::with_capacity(seeds.len());
    for (h, &seed) in seeds.iter().enumerate() {
        expand_into(n, k, seed, &mut scratch);
        for &ix in &scratch {
            slots[fill[ix as usize] as usize] = h as u32;
            fill[ix as usize] += 1;
        }
        let pos = replacement_position_for(seed, k);
        let rix = scratch[usize::from(pos) - 1];
        replacement_of.entry(rix).or_default().push(h as u32);
        positions.push((pos, rix));
    }

    let mut parities = vec![0u8; seeds.len() * beta];
    let mut replacement_values: Vec<Vec<u8>> = vec![Vec::new(); seeds.len()];
    let mut side_store = BTreeMap::new();
    let mut expected = 1u64;
    for item in entries {
        let (ix, entry) = item?;
        if ix != expected || ix > n {
            return Err(Error::integrity(format!(
                "database stream out of order: expected index {expected}, got {ix}"
            )));
        }
        if entry.len() != beta {
            return Err(Error::integrity(format!(
                "entry {ix} has {} bytes, expected {beta}",
                entry.len()
            )));
        }
        let (lo, hi) = (offsets[ix as usize], offsets[ix as usize + 1]);
        if lo == hi {
            side_store.insert(ix, entry);
        } else {
            for &h in &slots[lo as usize..hi as usize] {
                let h = h as usize;
                xor_into(&mut parities[h * beta..(h + 1) * beta], &entry);
            }
            if let Some(hs) = replacement_of.get(&ix) {
                for &h in hs {
                    replacement_values[h as usize] = entry.clone();
                }
            }
        }
        expected += 1;
    }
    if expected != n + 1 {
        return Err(Error::integrity(format!(
            "database stream ended after {} of {n} entries",
            expected - 1
        )));
    }

    let hints = seeds
        .iter()
        .zip(positions)
        .zip(replacement_values)
        .enumerate()
        .map(|(h, ((&seed, (pos, rix)), rval))| Hint {
            seed,
            parity: parities[h * beta..(h + 1) * beta].to_vec(),
            replacement_position: pos,
            replacement_index: rix,
            replacement_value: rval,
            consumed: false,
        })
        .collect();
    Ok((hints, side_store))
}

/// Builds a pool of `params.m` hints from one pass over the database.
///
/// `entries` must yield every `(index, entry)` exactly once in index order
/// (1-based). Hint seeds come from `master_seed` in counter mode; duplicate
/// expansions are discarded.
pub fn preprocess<I>(entries: I, params: CoverageParams, master_seed: u64) -> Result<HintPool>
where
    I: IntoIterator<Item = Result<(u64, Vec<u8>)>>,
{
    let mut counter = 0u64;
    let seeds = select_distinct_seeds(
        &params,
        &mut CounterSeeds {
            master: master_seed,
            counter: &mut counter,
        },
    )?;
    let (hints, uncovered) = build_generation(&params, &seeds, entries)?;
    Ok(HintPool::assemble(params, hints, uncovered, master_seed, counter))
}

/// [`preprocess`] with an explicit seed sequence instead of counter mode.
pub fn preprocess_with_seeds<I, S>(entries: I, params: CoverageParams, seeds: S) -> Result<HintPool>
where
    I: IntoIterator<Item = Result<(u64, Vec<u8>)>>,
    S: IntoIterator<Item = MultisetSeed>,
{
    let seeds = select_distinct_seeds(&params, &mut seeds.into_iter())?;
    let (hints, uncovered) = build_generation(&params, &seeds, entries)?;
    Ok(HintPool::assemble(params, hints, uncovered, 0, 0))
}

impl HintPool {
    fn assemble(
        params: CoverageParams,
        hints: Vec<Hint>,
        uncovered: BTreeMap<u64, Vec<u8>>,
        master_seed: u64,
        next_seed_counter: u64,
    ) -> Self {
        HintPool {
            params,
            hints,
            entry_cache: BTreeMap::new(),
            uncovered,
            queries_this_phase: 0,
            next_generation: NextGeneration::default(),
            master_seed,
            next_seed_counter,
            rng: Prg::keyed(master_seed, DOMAIN_CLIENT),
            continuous: false,
            search: SearchPolicy::default(),
        }
    }

    pub fn params(&self) -> &CoverageParams {
        &self.params
    }

    pub fn hints(&self) -> &[Hint] {
        &self.hints
    }

    pub fn hint(&self, handle: HintHandle) -> &Hint {
        &self.hints[handle.0]
    }

    pub fn live_hints(&self) -> usize {
        self.hints.iter().filter(|h| !h.consumed).count()
    }

    pub fn entry_cache(&self) -> &BTreeMap<u64, Vec<u8>> {
        &self.entry_cache
    }

    pub fn uncovered_store(&self) -> &BTreeMap<u64, Vec<u8>> {
        &self.uncovered
    }

    pub fn queries_this_phase(&self) -> u64 {
        self.queries_this_phase
    }

    pub fn phase_exhausted(&self) -> bool {
        self.queries_this_phase >= self.params.k
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn next_seed_counter(&self) -> u64 {
        self.next_seed_counter
    }

    pub fn next_generation(&self) -> &NextGeneration {
        &self.next_generation
    }

    pub fn search_policy(&self) -> SearchPolicy {
        self.search
    }

    pub fn set_search_policy(&mut self, policy: SearchPolicy) {
        self.search = policy;
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    /// Reseeds the client-side randomness (hint choice, replenishment
    /// target, padding and dummy targets).
    pub fn reseed_client_rng(&mut self, seed: u64) {
        self.rng = Prg::keyed(seed, DOMAIN_CLIENT);
    }

    pub(crate) fn rng_mut(&mut self) -> &mut Prg {
        &mut self.rng
    }

    /// Turns continuous preprocessing on and samples a next generation if
    /// none is in progress.
    pub fn enable_continuous(&mut self) -> Result<()> {
        self.continuous = true;
        if self.next_generation.is_empty() {
            self.next_generation = self.sample_next_generation()?;
        }
        Ok(())
    }

    fn sample_next_generation(&mut self) -> Result<NextGeneration> {
        let params = self.params;
        let mut counter = self.next_seed_counter;
        let seeds = select_distinct_seeds(
            &params,
            &mut CounterSeeds {
                master: self.master_seed,
                counter: &mut counter,
            },
        )?;
        self.next_seed_counter = counter;
        let (n, k) = (params.n, params.k);
        let mut referenced = vec![false; n as usize + 1];
        let mut scratch = Vec::with_capacity(k as usize);
        let partials = seeds
            .into_iter()
            .map(|seed| {
                expand_into(n, k, seed, &mut scratch);
                let pos = replacement_position_for(seed, k);
                for &ix in &scratch {
                    referenced[ix as usize] = true;
                }
                PartialHint {
                    seed,
                    partial_parity: vec![0; params.beta_usize()],
                    missing: scratch
                        .iter()
                        .enumerate()
                        .map(|(t, &ix)| (t as u16 + 1, ix))
                        .collect(),
                    replacement_position: pos,
                    replacement_index: scratch[usize::from(pos) - 1],
                    replacement_value: None,
                }
            })
            .collect();
        let uncovered = (1..=n).filter(|&ix| !referenced[ix as usize]).collect();
        Ok(NextGeneration::from_parts(partials, uncovered, BTreeMap::new()))
    }

    fn check_index(&self, index: u64) -> Result<()> {
        if index == 0 || index > self.params.n {
            return Err(Error::param(format!(
                "index {index} outside [1, {}]",
                self.params.n
            )));
        }
        Ok(())
    }

    fn covering_hints(&self, index: u64) -> Vec<usize> {
        let (n, k) = (self.params.n, self.params.k);
        self.hints
            .par_iter()
            .enumerate()
            .filter(|(_, h)| !h.consumed)
            .map_init(
                || Vec::with_capacity(k as usize),
                |scratch, (pos, h)| {
                    h.effective_slots_into(n, k, scratch);
                    scratch.contains(&index).then_some(pos)
                },
            )
            .flatten()
            .collect()
    }

    fn first_covering_hint(&self, index: u64) -> Option<usize> {
        let (n, k) = (self.params.n, self.params.k);
        self.hints
            .par_iter()
            .enumerate()
            .filter(|(_, h)| !h.consumed)
            .map_init(
                || Vec::with_capacity(k as usize),
                |scratch, (pos, h)| {
                    h.effective_slots_into(n, k, scratch);
                    scratch.contains(&index).then_some(pos)
                },
            )
            .find_any(|p| p.is_some())
            .flatten()
    }

    /// How the pool would answer `index` right now. Does not mutate hints;
    /// advances the client generator when choosing among covering hints.
    pub fn find_covering_hint(&mut self, index: u64) -> Result<Lookup> {
        self.check_index(index)?;
        if let Some(v) = self.entry_cache.get(&index) {
            return Ok(Lookup::CacheHit(v.clone()));
        }
        let found = match self.search {
            SearchPolicy::FullScanUniform => {
                let all = self.covering_hints(index);
                if all.is_empty() {
                    None
                } else {
                    Some(all[self.rng.below(all.len() as u64) as usize])
                }
            }
            SearchPolicy::FirstFound => self.first_covering_hint(index),
        };
        Ok(match found {
            Some(pos) => Lookup::Hint(HintHandle(pos)),
            None => match self.uncovered.get(&index) {
                Some(v) => Lookup::Stored(v.clone()),
                None => Lookup::Uncovered,
            },
        })
    }

    /// Number of unconsumed hints whose effective multiset contains `index`.
    pub fn cover_count(&self, index: u64) -> usize {
        self.covering_hints(index).len()
    }

    /// Cover count of every index, position 0 holding index 1.
    pub fn cover_counts(&self) -> Vec<u32> {
        let CoverageParams { n, k, .. } = self.params;
        let mut counts = vec![0u32; n as usize];
        let mut slots = Vec::with_capacity(k as usize);
        for h in self.hints.iter().filter(|h| !h.consumed) {
            h.effective_slots_into(n, k, &mut slots);
            slots.sort_unstable();
            slots.dedup();
            for &s in &slots {
                counts[s as usize - 1] += 1;
            }
        }
        counts
    }

    /// The redacted multiset to send for `handle` and target `index`.
    pub fn redacted_query(&self, handle: HintHandle, index: u64) -> Result<Multiset> {
        let hint = self.live_hint(handle)?;
        let full = hint.effective_multiset(self.params.n, self.params.k);
        crate::multiset::redact(&full, index)
    }

    fn live_hint(&self, handle: HintHandle) -> Result<&Hint> {
        let hint = self
            .hints
            .get(handle.0)
            .ok_or_else(|| Error::ContractViolation(format!("no hint at {}", handle.0)))?;
        if hint.consumed {
            return Err(Error::ContractViolation(format!(
                "hint {} was already consumed",
                handle.0
            )));
        }
        Ok(hint)
    }

    /// Retires `handle` after it answered `index`, moves one random
    /// surviving hint's replacement slot onto `index`, and caches the value.
    pub fn consume_and_replenish(&mut self, handle: HintHandle, index: u64, value: &[u8]) -> Result<()> {
        self.check_index(index)?;
        if value.len() != self.params.beta_usize() {
            return Err(Error::ContractViolation(format!(
                "value has {} bytes, expected {}",
                value.len(),
                self.params.beta
            )));
        }
        if self.phase_exhausted() {
            return Err(Error::PhaseExhausted(self.queries_this_phase));
        }
        let hint = self.live_hint(handle)?;
        let mut slots = Vec::new();
        hint.effective_slots_into(self.params.n, self.params.k, &mut slots);
        if !slots.contains(&index) {
            return Err(Error::ContractViolation(format!(
                "hint {} does not cover index {index}",
                handle.0
            )));
        }

        self.hints[handle.0].consumed = true;
        self.queries_this_phase += 1;

        let survivors: Vec<usize> = self
            .hints
            .iter()
            .enumerate()
            .filter(|(_, h)| !h.consumed)
            .map(|(pos, _)| pos)
            .collect();
        if survivors.is_empty() {
            warn!("no surviving hint to replenish after consuming hint {}", handle.0);
        } else {
            let x = survivors[self.rng.below(survivors.len() as u64) as usize];
            let target = &mut self.hints[x];
            xor_into(&mut target.parity, &target.replacement_value);
            xor_into(&mut target.parity, value);
            target.replacement_index = index;
            target.replacement_value = value.to_vec();
        }
        self.entry_cache.insert(index, value.to_vec());
        Ok(())
    }

    /// Records a value learned outside a hint consumption (for example an
    /// entry served from the side store).
    pub fn cache_entry(&mut self, index: u64, value: &[u8]) {
        self.entry_cache.insert(index, value.to_vec());
    }

    /// Folds a downloaded entry into every next-generation partial hint that
    /// still misses it.
    pub fn ingest_for_next_generation(&mut self, index: u64, value: &[u8]) {
        self.next_generation.ingest(index, value);
    }

    /// Starts a new phase: finishes the next generation (or streams a fresh
    /// one when none exists), replaces the active hints with it and clears
    /// the cache. On any source error the pool is left unchanged.
    pub fn refresh_phase(&mut self, source: &mut dyn RefreshSource) -> Result<RefreshReport> {
        let params = self.params;
        let beta = params.beta_usize();
        let mut report = RefreshReport::default();
        let mut rng = self.rng;

        let (hints, uncovered, counter) = if self.next_generation.is_empty() {
            report.cold_start = true;
            let mut counter = self.next_seed_counter;
            let seeds = select_distinct_seeds(
                &params,
                &mut CounterSeeds {
                    master: self.master_seed,
                    counter: &mut counter,
                },
            )?;
            let entries = source.stream()?;
            report.bytes_fetched = entries.len() as u64 * params.beta;
            let (hints, uncovered) = build_generation(&params, &seeds, entries.into_iter().map(Ok))?;
            (hints, uncovered, counter)
        } else {
            let mut next = self.next_generation.clone();
            let need = next.outstanding();
            report.completion_indices = need.len() as u64;
            let batch = params.redacted_len().max(1) as usize;
            for chunk in need.chunks(batch) {
                let mut request = chunk.to_vec();
                while request.len() < batch {
                    request.push(rng.in_range(1, params.n));
                }
                request.sort_unstable();
                let entries = source.fetch(&request)?;
                if entries.len() != request.len() || entries.iter().any(|e| e.len() != beta) {
                    return Err(Error::integrity("completion fetch returned malformed entries"));
                }
                report.completion_batches += 1;
                report.bytes_fetched += (request.len() * beta) as u64;
                for (ix, e) in request.iter().zip(&entries) {
                    next.ingest(*ix, e);
                }
            }
            if let Some(p) = next.partials.iter().find(|p| !p.is_complete()) {
                return Err(Error::integrity(format!(
                    "partial hint with seed {:#x} still incomplete after refresh",
                    p.seed.0
                )));
            }
            let hints = next
                .partials
                .into_iter()
                .map(|p| Hint {
                    seed: p.seed,
                    parity: p.partial_parity,
                    replacement_position: p.replacement_position,
                    replacement_index: p.replacement_index,
                    replacement_value: p.replacement_value.unwrap_or_else(|| vec![0; beta]),
                    consumed: false,
                })
                .collect();
            (hints, next.uncovered_values, self.next_seed_counter)
        };

        self.hints = hints;
        self.uncovered = uncovered;
        self.entry_cache.clear();
        self.queries_this_phase = 0;
        self.next_seed_counter = counter;
        self.rng = rng;
        self.next_generation = NextGeneration::default();
        if self.continuous {
            self.next_generation = self.sample_next_generation()?;
        }
        Ok(report)
    }
}
