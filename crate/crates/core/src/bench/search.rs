use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use super::model::Scheme;
use crate::error::Result;
use crate::hints::{preprocess, CoverageParams, SearchPolicy};
use crate::prg::{derive_seed, Prg, DOMAIN_CLIENT, DOMAIN_FLOYD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchMeasurement {
    pub scheme: Scheme,
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub queries: u64,
    pub mean_ms: f64,
}

/// Times the client-side hint search for one query, averaged over
/// `queries` random targets.
///
/// SPIDER and baseSPIDER share the same search: expand every unconsumed
/// hint and scan for the target. The RMS24 figure is a cost model: one
/// generated element and one comparison per seed.
pub fn measure_hint_search(
    scheme: Scheme,
    n: u64,
    coverage_constant: f64,
    queries: u64,
    seed: u64,
) -> Result<SearchMeasurement> {
    let params = CoverageParams::with_hint_size(n, crate::hints::ceil_sqrt(n), 1, coverage_constant, 0.6)?;
    let queries = queries.max(1);
    let mut rng = Prg::keyed(seed, DOMAIN_CLIENT);
    let targets: Vec<u64> = (0..queries).map(|_| rng.in_range(1, n)).collect();
    let elapsed = match scheme {
        Scheme::BaseSpider | Scheme::Spider => {
            let entries = (1..=n).map(|i| Ok((i, vec![0u8])));
            let mut pool = preprocess(entries, params, seed)?;
            pool.set_search_policy(SearchPolicy::FullScanUniform);
            let start = Instant::now();
            for &t in &targets {
                black_box(pool.find_covering_hint(t)?);
            }
            start.elapsed()
        }
        Scheme::Rms24 => {
            let seeds: Vec<u64> = (0..params.m).map(|j| derive_seed(seed, j)).collect();
            let start = Instant::now();
            for &t in &targets {
                let hits = seeds
                    .iter()
                    .filter(|&&s| Prg::keyed(s, DOMAIN_FLOYD).in_range(1, n) == t)
                    .count();
                black_box(hits);
            }
            start.elapsed()
        }
    };
    Ok(SearchMeasurement {
        scheme,
        n,
        k: params.k,
        m: params.m,
        queries,
        mean_ms: elapsed.as_secs_f64() * 1e3 / queries as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_scan_costs_more_than_one_draw_per_seed() {
        let full = measure_hint_search(Scheme::BaseSpider, 1024, 4.0, 5, 1).unwrap();
        let rms = measure_hint_search(Scheme::Rms24, 1024, 4.0, 5, 1).unwrap();
        assert_eq!((full.k, full.m), (32, 1775));
        assert_eq!(rms.m, 1775);
        assert!(full.mean_ms > rms.mean_ms, "{full:?} vs {rms:?}");
    }
}
