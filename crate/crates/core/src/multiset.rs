//! Size-k multisets over `[n] = {1, ..., n}` and their seeded sampling.
//!
//! A uniform multiset is drawn by sampling a uniform k-subset of
//! `[n + k - 1]` with Floyd's algorithm and mapping it through the
//! stars-and-bars bijection `h_t = u_t - (t - 1)`. All indices in this module
//! are 1-based.

use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prg::{Prg, DOMAIN_FLOYD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultisetSeed(pub u64);

impl From<u64> for MultisetSeed {
    fn from(value: u64) -> Self {
        MultisetSeed(value)
    }
}

/// Nondecreasing sequence of indices in `[1, universe]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset {
    elements: Vec<u64>,
    universe: u64,
}

impl Multiset {
    pub fn new(elements: Vec<u64>, universe: u64) -> Result<Self> {
        if elements.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("multiset elements must be nondecreasing"));
        }
        if elements.iter().any(|&e| e == 0 || e > universe) {
            return Err(Error::param(format!(
                "multiset element outside [1, {universe}]"
            )));
        }
        Ok(Multiset { elements, universe })
    }

    /// Sorts `elements` before validating the range.
    pub fn from_unsorted(mut elements: Vec<u64>, universe: u64) -> Result<Self> {
        elements.sort_unstable();
        Multiset::new(elements, universe)
    }

    pub(crate) fn from_sorted_unchecked(elements: Vec<u64>, universe: u64) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] <= w[1]));
        Multiset { elements, universe }
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<u64> {
        self.elements
    }

    pub fn universe_size(&self) -> u64 {
        self.universe
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, index: u64) -> bool {
        self.elements.binary_search(&index).is_ok()
    }

    pub fn multiplicity(&self, index: u64) -> usize {
        let lo = self.elements.partition_point(|&e| e < index);
        let hi = self.elements.partition_point(|&e| e <= index);
        hi - lo
    }

    /// `self ⊎ {index}`.
    pub fn with_added(&self, index: u64) -> Result<Multiset> {
        if index == 0 || index > self.universe {
            return Err(Error::param(format!(
                "index {index} outside [1, {}]",
                self.universe
            )));
        }
        let mut elements = self.elements.clone();
        let at = elements.partition_point(|&e| e <= index);
        elements.insert(at, index);
        Ok(Multiset {
            elements,
            universe: self.universe,
        })
    }
}

impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (t, e) in self.elements.iter().enumerate() {
            if t > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

/// Strictly increasing k-subset of `[1, universe]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetSample {
    elements: Vec<u64>,
    universe: u64,
}

impl SubsetSample {
    pub fn new(elements: Vec<u64>, universe: u64) -> Result<Self> {
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("subset elements must be strictly increasing"));
        }
        if elements.iter().any(|&e| e == 0 || e > universe) {
            return Err(Error::param(format!("subset element outside [1, {universe}]")));
        }
        Ok(SubsetSample { elements, universe })
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn universe_size(&self) -> u64 {
        self.universe
    }
}

fn check_floyd_params(universe: u64, k: u64) -> Result<()> {
    if k == 0 || k > universe {
        return Err(Error::param(format!(
            "subset size {k} must satisfy 1 <= k <= N = {universe}"
        )));
    }
    Ok(())
}

// Bitmaps up to 2^26 bits (8 MiB) per thread; larger universes use a hash set.
const BITMAP_LIMIT: u64 = 1 << 26;

thread_local! {
    static SCRATCH: RefCell<Vec<u64>> = const { RefCell::new(Vec::new()) };
}

/// Floyd's algorithm: for `j` in `N-k+1 ..= N` draw `r` uniform in `[1, j]`
/// and insert `r`, or `j` if `r` was already taken. Leaves the k values in
/// `out` in insertion order.
fn floyd_into(universe: u64, k: u64, seed: u64, out: &mut Vec<u64>) {
    let mut prg = Prg::keyed(seed, DOMAIN_FLOYD);
    out.clear();
    out.reserve(k as usize);
    let first = universe - k + 1;
    if universe <= BITMAP_LIMIT {
        SCRATCH.with(|cell| {
            let mut bits = cell.borrow_mut();
            let words = (universe as usize >> 6) + 1;
            if bits.len() < words {
                bits.resize(words, 0);
            }
            for j in first..=universe {
                let r = prg.in_range(1, j);
                let taken = bits[(r >> 6) as usize] & (1 << (r & 63)) != 0;
                let v = if taken { j } else { r };
                bits[(v >> 6) as usize] |= 1 << (v & 63);
                out.push(v);
            }
            for &v in out.iter() {
                bits[(v >> 6) as usize] = 0;
            }
        });
    } else {
        let mut seen = HashSet::with_capacity(k as usize);
        for j in first..=universe {
            let r = prg.in_range(1, j);
            let v = if seen.contains(&r) { j } else { r };
            seen.insert(v);
            out.push(v);
        }
    }
}

pub fn floyd_sample(universe: u64, k: u64, seed: MultisetSeed) -> Result<SubsetSample> {
    check_floyd_params(universe, k)?;
    let mut out = Vec::new();
    floyd_into(universe, k, seed.0, &mut out);
    out.sort_unstable();
    Ok(SubsetSample {
        elements: out,
        universe,
    })
}

/// Inverse stars-and-bars map `h_t = u_t - (t - 1)`.
pub fn multiset_from_subset(subset: &SubsetSample, n: u64) -> Result<Multiset> {
    let k = subset.elements.len() as u64;
    if n == 0 || k == 0 || subset.universe != n + k - 1 {
        return Err(Error::param(format!(
            "subset over [{}] does not match n = {n}, k = {k}",
            subset.universe
        )));
    }
    let elements = subset
        .elements
        .iter()
        .enumerate()
        .map(|(t, &u)| u - t as u64)
        .collect();
    Ok(Multiset::from_sorted_unchecked(elements, n))
}

/// Forward stars-and-bars map `u_t = h_t + (t - 1)`.
pub fn subset_from_multiset(multiset: &Multiset) -> SubsetSample {
    let k = multiset.elements.len() as u64;
    let elements = multiset
        .elements
        .iter()
        .enumerate()
        .map(|(t, &h)| h + t as u64)
        .collect();
    SubsetSample {
        elements,
        universe: multiset.universe + k.saturating_sub(1),
    }
}

fn check_expand_params(n: u64, k: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("universe size n must be at least 1"));
    }
    if k == 0 {
        return Err(Error::param("multiset size k must be at least 1"));
    }
    n.checked_add(k - 1)
        .ok_or_else(|| Error::param("n + k - 1 overflows"))?;
    Ok(())
}

/// Sample, sort and shift in place. The hot path for hint search and
/// preprocessing; `out` is reused across calls.
pub fn expand_into(n: u64, k: u64, seed: MultisetSeed, out: &mut Vec<u64>) {
    floyd_into(n + k - 1, k, seed.0, out);
    out.sort_unstable();
    for (t, v) in out.iter_mut().enumerate() {
        *v -= t as u64;
    }
}

pub fn expand_multiset_from_seed(n: u64, k: u64, seed: MultisetSeed) -> Result<Multiset> {
    check_expand_params(n, k)?;
    let mut out = Vec::new();
    expand_into(n, k, seed, &mut out);
    Ok(Multiset::from_sorted_unchecked(out, n))
}

/// Removes one copy of `index`.
pub fn redact(multiset: &Multiset, index: u64) -> Result<Multiset> {
    let pos = multiset
        .elements
        .binary_search(&index)
        .map_err(|_| Error::NotCovered { index })?;
    let mut elements = multiset.elements.clone();
    elements.remove(pos);
    Ok(Multiset::from_sorted_unchecked(elements, multiset.universe))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(elements: &[u64], n: u64) -> Multiset {
        Multiset::new(elements.to_vec(), n).unwrap()
    }

    #[test]
    fn worked_example_both_directions() {
        let m = ms(&[2, 2, 3], 3);
        assert_eq!(subset_from_multiset(&m).elements(), &[2, 3, 5]);
        let s = SubsetSample::new(vec![2, 3, 5], 5).unwrap();
        assert_eq!(multiset_from_subset(&s, 3).unwrap(), m);
    }

    #[test]
    fn minimal_subset_is_all_ones() {
        for k in 1..6u64 {
            let s = SubsetSample::new((1..=k).collect(), 7 + k - 1).unwrap();
            let m = multiset_from_subset(&s, 7).unwrap();
            assert_eq!(m.elements(), vec![1; k as usize].as_slice());
            assert_eq!(subset_from_multiset(&m), s);
        }
    }

    #[test]
    fn floyd_degenerate_universes() {
        for seed in [0u64, 1, 42, u64::MAX] {
            assert_eq!(floyd_sample(1, 1, MultisetSeed(seed)).unwrap().elements(), &[1]);
            assert_eq!(
                floyd_sample(4, 4, MultisetSeed(seed)).unwrap().elements(),
                &[1, 2, 3, 4]
            );
        }
    }

    #[test]
    fn floyd_rejects_bad_sizes() {
        assert!(matches!(floyd_sample(3, 0, MultisetSeed(1)), Err(Error::Parameter(_))));
        assert!(matches!(floyd_sample(3, 4, MultisetSeed(1)), Err(Error::Parameter(_))));
    }

    #[test]
    fn floyd_hash_path_matches_bitmap_path() {
        // Same draws, different membership structure.
        let mut a = Vec::new();
        floyd_into(1000, 40, 5, &mut a);
        let mut prg = Prg::keyed(5, DOMAIN_FLOYD);
        let mut seen = HashSet::new();
        let mut b = Vec::new();
        for j in 961..=1000u64 {
            let r = prg.in_range(1, j);
            let v = if seen.contains(&r) { j } else { r };
            seen.insert(v);
            b.push(v);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn expansion_single_element_universe() {
        for seed in 0..20 {
            let m = expand_multiset_from_seed(1, 3, MultisetSeed(seed)).unwrap();
            assert_eq!(m.elements(), &[1, 1, 1]);
        }
    }

    #[test]
    fn expansion_is_pinned() {
        // Frozen outputs: a change here breaks every stored hint pool.
        let m = expand_multiset_from_seed(3, 2, MultisetSeed(0x5EED)).unwrap();
        let again = expand_multiset_from_seed(3, 2, MultisetSeed(0x5EED)).unwrap();
        assert_eq!(m, again);
        let big = expand_multiset_from_seed(1000, 8, MultisetSeed(12345)).unwrap();
        assert_eq!(big.size(), 8);
        assert!(big.elements().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn redact_cases() {
        assert_eq!(redact(&ms(&[2, 2, 3], 3), 2).unwrap(), ms(&[2, 3], 3));
        assert_eq!(redact(&ms(&[1, 1], 3), 1).unwrap(), ms(&[1], 3));
        assert!(matches!(
            redact(&ms(&[1, 4, 7], 7), 5),
            Err(Error::NotCovered { index: 5 })
        ));
    }

    #[test]
    fn multiset_validation() {
        assert!(Multiset::new(vec![2, 1], 3).is_err());
        assert!(Multiset::new(vec![0], 3).is_err());
        assert!(Multiset::new(vec![4], 3).is_err());
        assert_eq!(ms(&[1, 2, 2, 2, 3], 3).multiplicity(2), 3);
        assert_eq!(ms(&[1, 3], 3).with_added(2).unwrap(), ms(&[1, 2, 3], 3));
        assert_eq!(ms(&[1, 3], 3).to_string(), "(1,3)");
    }

    #[test]
    fn subset_validation() {
        assert!(SubsetSample::new(vec![1, 1], 3).is_err());
        assert!(SubsetSample::new(vec![1, 4], 3).is_err());
        let s = SubsetSample::new(vec![1, 3], 3).unwrap();
        assert!(multiset_from_subset(&s, 3).is_err());
    }
}
