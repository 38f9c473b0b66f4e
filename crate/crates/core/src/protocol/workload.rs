use std::io::{Read, Write};

use serde::Serialize;

use super::client::{Client, QueryKind};
use crate::error::Result;
use crate::hints::RefreshReport;
use crate::prg::{Prg, DOMAIN_CLIENT};
use crate::server::Database;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhasePlan {
    pub phases: u64,
    pub queries_per_phase: u64,
    /// Seeds the uniform target sequence.
    pub target_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub phase: u64,
    /// 1-based target.
    pub index: u64,
    pub kind: QueryKind,
    /// Present when an oracle database was supplied.
    pub correct: Option<bool>,
    pub upload_payload: u64,
    pub download_payload: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    pub phase: u64,
    pub queries: u64,
    pub correct: Option<u64>,
    /// Refreshes that ran during this phase, including the one opening it.
    pub refreshes: Vec<RefreshReport>,
    /// Share of next-generation hints already complete when the phase ended.
    pub next_generation_completed: f64,
    /// Share of next-generation hint slots already folded in.
    pub next_generation_folded: f64,
    pub online_download: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadReport {
    pub phases: Vec<PhaseReport>,
    pub queries: Vec<QueryRecord>,
    pub total_queries: u64,
    pub total_correct: Option<u64>,
    /// All payload bytes downloaded during the run, refresh traffic included.
    pub total_download: u64,
    pub completion_download: u64,
    pub amortized_download_per_query: f64,
}

impl WorkloadReport {
    pub fn all_correct(&self) -> bool {
        self.total_correct == Some(self.total_queries)
    }
}

fn folded_fraction<C: Read + Write>(client: &Client<C>) -> f64 {
    let k = client.pool().params().k as usize;
    let partials = client.pool().next_generation().partials();
    if partials.is_empty() {
        return 0.0;
    }
    let missing: usize = partials.iter().map(|p| p.missing.len()).sum();
    1.0 - missing as f64 / (partials.len() * k) as f64
}

/// Runs `plan.phases` phases of uniformly random queries. Each phase after
/// the first starts with a refresh if the previous one issued any query.
pub fn run_phases<C: Read + Write>(
    client: &mut Client<C>,
    plan: &PhasePlan,
    oracle: Option<&Database>,
) -> Result<WorkloadReport> {
    let n = client.pool().params().n;
    let mut targets = Prg::keyed(plan.target_seed, DOMAIN_CLIENT);
    let start = client.session().traffic();
    let mut phases = Vec::new();
    let mut records = Vec::new();
    let mut completion_download = 0;

    for phase in 0..plan.phases {
        let mut refreshes = Vec::new();
        if phase > 0 && client.pool().queries_this_phase() > 0 {
            refreshes.push(client.refresh()?);
        }
        let mut correct = oracle.map(|_| 0u64);
        let mut online_download = 0;
        for _ in 0..plan.queries_per_phase {
            let index = targets.in_range(1, n);
            let out = client.query(index)?;
            if let Some(r) = out.refresh.clone() {
                refreshes.push(r);
            }
            let ok = oracle.map(|db| db.entry(index - 1) == out.value.as_slice());
            if let (Some(c), Some(true)) = (correct.as_mut(), ok) {
                *c += 1;
            }
            online_download += out.traffic.download_payload;
            records.push(QueryRecord {
                phase,
                index,
                kind: out.kind,
                correct: ok,
                upload_payload: out.traffic.upload_payload,
                download_payload: out.traffic.download_payload,
            });
        }
        completion_download += refreshes.iter().map(|r| r.bytes_fetched).sum::<u64>();
        phases.push(PhaseReport {
            phase,
            queries: plan.queries_per_phase,
            correct,
            refreshes,
            next_generation_completed: client.pool().next_generation().completed_fraction(),
            next_generation_folded: folded_fraction(client),
            online_download,
        });
    }

    let total_queries = plan.phases * plan.queries_per_phase;
    let total_download = client.session().traffic().since(&start).download_payload;
    Ok(WorkloadReport {
        total_correct: oracle.map(|_| phases.iter().filter_map(|p| p.correct).sum()),
        phases,
        queries: records,
        total_queries,
        total_download,
        completion_download,
        amortized_download_per_query: if total_queries == 0 {
            0.0
        } else {
            total_download as f64 / total_queries as f64
        },
    })
}
