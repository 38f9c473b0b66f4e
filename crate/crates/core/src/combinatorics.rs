//! Exact counting and brute-force enumeration oracles.
//!
//! Everything here works on big integers or explicit lists and is meant for
//! small parameters. Production paths never materialise these counts.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::multiset::{redact, Multiset};

/// Default cap on the number of items an oracle may enumerate.
pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for t in 0..k {
        acc *= n - t;
        acc /= t + 1;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinatorialCounts {
    /// `M`: number of size-k multisets over `[n]`.
    pub total_multisets: BigUint,
    /// `S_y`: number of those containing a fixed index.
    pub containing_multisets: BigUint,
    /// `S_y / M`, which always reduces to `k / (n + k - 1)`.
    pub inclusion_probability: BigRational,
}

pub fn combinatorial_counts(n: u64, k: u64) -> Result<CombinatorialCounts> {
    if n == 0 || k == 0 {
        return Err(Error::param("counts need n >= 1 and k >= 1"));
    }
    let total = binomial(n + k - 1, k);
    let containing = binomial(n + k - 2, k - 1);
    let p = BigRational::new(containing.clone().into(), total.clone().into());
    Ok(CombinatorialCounts {
        total_multisets: total,
        containing_multisets: containing,
        inclusion_probability: p,
    })
}

fn check_cap(count: &BigUint, cap: u64) -> Result<u64> {
    match count.to_u64() {
        Some(c) if c <= cap => Ok(c),
        _ => Err(Error::OracleTooLarge {
            count: count.to_string(),
            cap,
        }),
    }
}

/// All size-k multisets over `[n]` in lexicographic order, generated by an
/// odometer over nondecreasing sequences.
pub fn enumerate_multisets(n: u64, k: u64) -> Result<Vec<Multiset>> {
    enumerate_multisets_capped(n, k, DEFAULT_ORACLE_CAP)
}

pub fn enumerate_multisets_capped(n: u64, k: u64, cap: u64) -> Result<Vec<Multiset>> {
    if n == 0 {
        return Err(Error::param("universe size n must be at least 1"));
    }
    let count = check_cap(&binomial(n + k.max(1) - 1, k), cap)?;
    let k = k as usize;
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![1u64; k];
    loop {
        out.push(Multiset::from_sorted_unchecked(current.clone(), n));
        // rightmost position that can still grow
        let Some(t) = (0..k).rev().find(|&t| current[t] < n) else {
            break;
        };
        let v = current[t] + 1;
        for slot in &mut current[t..] {
            *slot = v;
        }
    }
    Ok(out)
}

/// All strictly increasing k-subsets of `[universe]` in lexicographic order.
pub fn enumerate_subsets(universe: u64, k: u64) -> Result<Vec<Vec<u64>>> {
    let count = check_cap(&binomial(universe, k), DEFAULT_ORACLE_CAP)?;
    let k = k as usize;
    let mut out = Vec::with_capacity(count as usize);
    if k as u64 > universe {
        return Ok(out);
    }
    let mut current: Vec<u64> = (1..=k as u64).collect();
    loop {
        out.push(current.clone());
        let Some(t) = (0..k).rev().find(|&t| current[t] < universe - (k - 1 - t) as u64) else {
            break;
        };
        current[t] += 1;
        for s in t + 1..k {
            current[s] = current[s - 1] + 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedactionBijection {
    pub holds: bool,
    /// `|R_i|` as enumerated.
    pub containing_count: u64,
}

/// Checks, by enumeration, that `P ↦ P ⊎ {i}` maps the size-(k-1) multisets
/// onto exactly the size-k multisets containing `i`, that their count is
/// `binomial(n + k - 2, k - 1)`, and that redaction at `i` inverts it.
pub fn verify_redaction_bijection(n: u64, k: u64, index: u64) -> Result<RedactionBijection> {
    if k == 0 {
        return Err(Error::param("multiset size k must be at least 1"));
    }
    if index == 0 || index > n {
        return Err(Error::param(format!("target {index} outside [1, {n}]")));
    }
    let containing: BTreeSet<Multiset> = enumerate_multisets(n, k)?
        .into_iter()
        .filter(|m| m.contains(index))
        .collect();
    let smaller = enumerate_multisets(n, k - 1)?;

    let mut image = BTreeSet::new();
    let mut inverse_ok = true;
    for p in &smaller {
        let lifted = p.with_added(index)?;
        inverse_ok &= redact(&lifted, index)? == *p;
        image.insert(lifted);
    }
    let injective = image.len() == smaller.len();
    let onto = image == containing;
    let expected = binomial(n + k - 2, k - 1);
    let count_ok = BigUint::from(containing.len()) == expected;
    // redaction restricted to R_i lands in M_{k-1}
    let redact_ok = containing
        .iter()
        .all(|r| redact(r, index).map(|p| p.size() as u64 == k - 1).unwrap_or(false));

    Ok(RedactionBijection {
        holds: injective && onto && count_ok && inverse_ok && redact_ok,
        containing_count: containing.len() as u64,
    })
}
