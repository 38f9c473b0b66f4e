//! Oracle suites shared by the `verify` subcommand, the examples and the
//! acceptance tests. Each returns a serialisable report with a verdict.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{
    binomial, combinatorial_counts, enumerate_multisets, enumerate_subsets, verify_redaction_bijection,
};
use crate::error::{Error, Result};
use crate::hints::{compute_params, coverage_bounds, preprocess, CoverageBounds, CoverageParams};
use crate::multiset::{expand_into, multiset_from_subset, subset_from_multiset, MultisetSeed, SubsetSample};
use crate::prg::derive_seed;
use crate::stats::{uniformity, ChiSquare};

#[derive(Debug, Clone, Serialize)]
pub struct BijectionReport {
    /// Every `(n, k)` with `1 <= n <= n_max`, `1 <= k <= k_max`.
    pub pairs_checked: u64,
    pub multisets_checked: u64,
    pub failures: Vec<(u64, u64)>,
    pub passed: bool,
}

/// Exhaustive round trip of the stars-and-bars map in both directions, and
/// the distinct-image count against `binomial(n + k - 1, k)`.
pub fn bijection_suite(n_max: u64, k_max: u64) -> Result<BijectionReport> {
    let mut pairs = 0;
    let mut multisets = 0;
    let mut failures = Vec::new();
    for n in 1..=n_max {
        for k in 1..=k_max {
            pairs += 1;
            let universe = n + k - 1;
            let subsets = enumerate_subsets(universe, k)?;
            let mut image = HashSet::new();
            let mut ok = true;
            for s in &subsets {
                let sample = SubsetSample::new(s.clone(), universe)?;
                let m = multiset_from_subset(&sample, n)?;
                ok &= subset_from_multiset(&m) == sample;
                image.insert(m);
            }
            let all = enumerate_multisets(n, k)?;
            for m in &all {
                let s = subset_from_multiset(m);
                ok &= multiset_from_subset(&s, n)? == *m;
            }
            ok &= binomial(universe, k) == (image.len() as u64).into() && image.len() == all.len();
            multisets += all.len() as u64;
            if !ok {
                failures.push((n, k));
            }
        }
    }
    Ok(BijectionReport {
        pairs_checked: pairs,
        multisets_checked: multisets,
        passed: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CountsReport {
    pub n: u64,
    pub k: u64,
    pub total_multisets: String,
    pub containing_multisets: String,
    pub inclusion_probability: String,
    /// Enumeration cross-check, when `M` is within the oracle cap.
    pub enumerated: Option<(u64, u64)>,
    pub passed: bool,
}

pub fn counts_suite(n: u64, k: u64) -> Result<CountsReport> {
    let c = combinatorial_counts(n, k)?;
    let expected_p = num_rational::BigRational::new((k as i64).into(), ((n + k - 1) as i64).into());
    let mut passed = c.inclusion_probability == expected_p;
    let enumerated = match enumerate_multisets(n, k) {
        Ok(all) => {
            let containing = all.iter().filter(|m| m.contains(1)).count() as u64;
            passed &= c.total_multisets == all.len().into() && c.containing_multisets == containing.into();
            Some((all.len() as u64, containing))
        }
        Err(Error::OracleTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(CountsReport {
        n,
        k,
        total_multisets: c.total_multisets.to_string(),
        containing_multisets: c.containing_multisets.to_string(),
        inclusion_probability: c.inclusion_probability.to_string(),
        enumerated,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RedactionReport {
    pub n: u64,
    pub k: u64,
    /// `|R_i|` for i = 1..=n.
    pub containing_counts: Vec<u64>,
    pub expected_count: String,
    pub passed: bool,
}

/// Redaction bijection for every target `i` in `[n]`.
pub fn redaction_suite(n: u64, k: u64) -> Result<RedactionReport> {
    let expected = binomial(n + k - 2, k - 1);
    let mut passed = true;
    let mut counts = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let r = verify_redaction_bijection(n, k, i)?;
        passed &= r.holds && expected == r.containing_count.into();
        counts.push(r.containing_count);
    }
    Ok(RedactionReport {
        n,
        k,
        containing_counts: counts,
        expected_count: expected.to_string(),
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    pub n: u64,
    pub k: u64,
    pub samples: u64,
    pub categories: usize,
    pub chi_square: ChiSquare,
    pub significance: f64,
    pub passed: bool,
}

/// Expands `samples` counter-mode seeds and tests the multiset histogram
/// against the uniform distribution over all `M` multisets.
pub fn uniformity_suite(n: u64, k: u64, samples: u64, master: u64, significance: f64) -> Result<UniformityReport> {
    let all = enumerate_multisets(n, k)?;
    let rank: HashMap<Vec<u64>, usize> = all
        .iter()
        .enumerate()
        .map(|(i, m)| (m.elements().to_vec(), i))
        .collect();
    let counts = (0..samples)
        .into_par_iter()
        .fold(
            || (vec![0u64; all.len()], Vec::with_capacity(k as usize)),
            |(mut counts, mut scratch), j| {
                expand_into(n, k, MultisetSeed(derive_seed(master, j)), &mut scratch);
                scratch.sort_unstable();
                counts[rank[&scratch]] += 1;
                (counts, scratch)
            },
        )
        .map(|(c, _)| c)
        .reduce(
            || vec![0u64; all.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let chi = uniformity(&counts);
    Ok(UniformityReport {
        n,
        k,
        samples,
        categories: all.len(),
        passed: !chi.rejects_at(significance),
        chi_square: chi,
        significance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub params: CoverageParams,
    pub bounds: CoverageBounds,
    pub runs: u64,
    /// Runs in which every index had at least one covering hint.
    pub fully_covered_runs: u64,
    pub mean_cover_count: f64,
    /// Exact `E[Y_y] = m k / (n + k - 1)`.
    pub expected_cover_count: f64,
    /// `2 C ln n`, the value `m` is sized for.
    pub intended_cover_count: f64,
    /// Distance of the mean from `intended_cover_count`.
    pub relative_error: f64,
    pub relative_error_vs_expected: f64,
    pub min_cover_count: u32,
    pub passed: bool,
}

/// Builds `runs` independent pools and measures per-index cover counts.
/// Passes when at most 1% of runs leave an index uncovered and the mean is
/// within 5% of `2 C ln n`.
pub fn coverage_suite(n: u64, coverage_constant: f64, delta_slack: f64, runs: u64, master: u64) -> Result<CoverageReport> {
    let params = compute_params(n, 1, coverage_constant, delta_slack)?;
    let bounds = coverage_bounds(&params);
    let per_run: Vec<(bool, u64, u32)> = (0..runs)
        .into_par_iter()
        .map(|r| -> Result<(bool, u64, u32)> {
            let entries = (1..=n).map(|i| Ok((i, vec![0u8])));
            let pool = preprocess(entries, params, derive_seed(master, r))?;
            let counts = pool.cover_counts();
            let min = counts.iter().copied().min().unwrap_or(0);
            let sum: u64 = counts.iter().map(|&c| u64::from(c)).sum();
            Ok((min > 0, sum, min))
        })
        .collect::<Result<_>>()?;
    let fully = per_run.iter().filter(|r| r.0).count() as u64;
    let total: u64 = per_run.iter().map(|r| r.1).sum();
    let mean = total as f64 / (runs.max(1) * n) as f64;
    let expected = bounds.expected_cover_count_f64();
    let intended = 2.0 * coverage_constant * (n as f64).ln();
    let rel = (mean - intended).abs() / intended;
    Ok(CoverageReport {
        params,
        runs,
        fully_covered_runs: fully,
        mean_cover_count: mean,
        expected_cover_count: expected,
        intended_cover_count: intended,
        relative_error: rel,
        relative_error_vs_expected: (mean - expected).abs() / expected,
        min_cover_count: per_run.iter().map(|r| r.2).min().unwrap_or(0),
        passed: fully * 100 >= runs * 99 && rel <= 0.05,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(bijection_suite(3, 3).unwrap().passed);
        let c = counts_suite(3, 2).unwrap();
        assert_eq!((c.total_multisets.as_str(), c.containing_multisets.as_str()), ("6", "3"));
        assert_eq!(c.inclusion_probability, "1/2");
        assert!(c.passed);
        let l = redaction_suite(4, 3).unwrap();
        assert!(l.passed);
        assert_eq!(l.containing_counts, vec![10; 4]);
        assert!(uniformity_suite(3, 2, 6_000, 1, 0.001).unwrap().passed);
    }

    #[test]
    fn coverage_small() {
        let r = coverage_suite(64, 4.0, 0.6, 5, 2).unwrap();
        assert_eq!(r.runs, 5);
        assert!(r.mean_cover_count > 0.0);
    }
}
