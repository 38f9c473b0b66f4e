//! Statistical harness comparing what the server sees for two target
//! sequences.
//!
//! Each trial builds a fresh pool over a fixed small database, runs one
//! target sequence through an in-process server and records the redacted
//! multiset sent in every round. Per round the two resulting histograms are
//! compared with a homogeneity test; round 1 is also tested against the
//! exact uniform distribution over all size-(k-1) multisets.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::enumerate_multisets;
use crate::error::{Error, Result};
use crate::hints::{preprocess, CoverageParams};
use crate::prg::derive_seed;
use crate::protocol::{CacheHitPolicy, Client, ServerMode, Session};
use crate::server::{Database, LocalConnection, Server};
use crate::stats::{homogeneity, total_variation, uniformity, ChiSquare};

#[derive(Debug, Clone, Serialize)]
pub struct TranscriptTestConfig {
    pub n: u64,
    pub k: u64,
    /// Fresh pools per target sequence.
    pub trials: u64,
    pub mode: ServerMode,
    pub coverage_constant: f64,
    pub delta_slack: f64,
    pub significance: f64,
    pub seed: u64,
}

impl TranscriptTestConfig {
    pub fn new(n: u64, k: u64, trials: u64) -> Self {
        TranscriptTestConfig {
            n,
            k,
            trials,
            mode: ServerMode::Cooperative,
            coverage_constant: 4.0,
            delta_slack: 0.6,
            significance: 0.001,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub homogeneity: ChiSquare,
    pub total_variation: f64,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TranscriptReport {
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub trials: u64,
    /// Size of the redacted-multiset space the histograms range over.
    pub categories: usize,
    pub rounds: Vec<RoundReport>,
    pub round1_uniformity_a: ChiSquare,
    pub round1_uniformity_b: ChiSquare,
    pub significance: f64,
}

impl TranscriptReport {
    pub fn passed(&self) -> bool {
        let s = self.significance;
        self.rounds.iter().all(|r| !r.homogeneity.rejects_at(s))
            && !self.round1_uniformity_a.rejects_at(s)
            && !self.round1_uniformity_b.rejects_at(s)
    }

    pub fn max_total_variation(&self) -> f64 {
        self.rounds.iter().map(|r| r.total_variation).fold(0.0, f64::max)
    }
}

/// Histograms of redacted multisets per round, one vector per round.
fn collect(
    targets: &[u64],
    config: &TranscriptTestConfig,
    params: CoverageParams,
    db: &Arc<Database>,
    categories: &HashMap<Vec<u64>, usize>,
    stream_salt: u64,
) -> Result<Vec<Vec<u64>>> {
    let rounds = targets.len();
    let width = categories.len();
    let entries: Vec<(u64, Vec<u8>)> = db.entries_one_based().collect::<Result<_>>()?;
    (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<Vec<u64>>> {
            let master = derive_seed(config.seed ^ stream_salt, trial);
            let pool = preprocess(entries.iter().cloned().map(Ok), params, master)?;
            let server = Server::new(db.clone(), config.mode);
            let session = Session::connect(LocalConnection::new(server))?;
            let mut client = Client::with_pool(session, pool)?.with_cache_policy(CacheHitPolicy::Dummy);
            for &t in targets {
                client.query(t)?;
            }
            let mut hist = vec![vec![0u64; width]; rounds];
            for (round, entry) in client.session().transcript().queries().enumerate().take(rounds) {
                let key: Vec<u64> = entry.request.indices.iter().map(|i| i + 1).collect();
                let slot = categories
                    .get(&key)
                    .ok_or_else(|| Error::integrity(format!("unexpected redacted multiset {key:?}")))?;
                hist[round][*slot] += 1;
            }
            Ok(hist)
        })
        .try_reduce(
            || vec![vec![0u64; width]; rounds],
            |mut acc, h| {
                for (a, b) in acc.iter_mut().zip(h) {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                }
                Ok(acc)
            },
        )
}

/// Runs both target sequences over `config.trials` fresh pools each.
pub fn transcript_distribution_test(
    targets_a: &[u64],
    targets_b: &[u64],
    config: &TranscriptTestConfig,
) -> Result<TranscriptReport> {
    let TranscriptTestConfig { n, k, .. } = *config;
    if targets_a.len() != targets_b.len() || targets_a.is_empty() {
        return Err(Error::param("target sequences must be non-empty and equally long"));
    }
    if k < 2 {
        return Err(Error::param("k must be at least 2 for a non-empty redacted query"));
    }
    if let Some(t) = targets_a.iter().chain(targets_b).find(|&&t| t == 0 || t > n) {
        return Err(Error::param(format!("target {t} outside [1, {n}]")));
    }
    let space = enumerate_multisets(n, k - 1)?;
    let categories: HashMap<Vec<u64>, usize> = space
        .iter()
        .enumerate()
        .map(|(i, m)| (m.elements().to_vec(), i))
        .collect();
    let params = CoverageParams::with_hint_size(n, k, 1, config.coverage_constant, config.delta_slack)?;
    let db = Arc::new(Database::generate(n, 1, config.seed)?);

    let a = collect(targets_a, config, params, &db, &categories, 0xA)?;
    let b = collect(targets_b, config, params, &db, &categories, 0xB)?;

    let rounds = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (ca, cb))| RoundReport {
            round: i + 1,
            homogeneity: homogeneity(ca, cb),
            total_variation: total_variation(ca, cb),
            counts_a: ca.clone(),
            counts_b: cb.clone(),
        })
        .collect();
    Ok(TranscriptReport {
        n,
        k,
        m: params.m,
        trials: config.trials,
        categories: space.len(),
        round1_uniformity_a: uniformity(&a[0]),
        round1_uniformity_b: uniformity(&b[0]),
        rounds,
        significance: config.significance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences_pass() {
        let config = TranscriptTestConfig::new(4, 3, 2_000);
        let report = transcript_distribution_test(&[2, 2], &[2, 2], &config).unwrap();
        assert_eq!(report.categories, 10);
        assert_eq!(report.rounds.len(), 2);
        assert!(report.passed(), "{report:#?}");
        let total: u64 = report.rounds[0].counts_a.iter().sum();
        assert_eq!(total, 2_000);
    }

    #[test]
    fn rejects_bad_targets() {
        let config = TranscriptTestConfig::new(4, 3, 10);
        assert!(transcript_distribution_test(&[5], &[1], &config).is_err());
        assert!(transcript_distribution_test(&[1, 2], &[1], &config).is_err());
    }
}
