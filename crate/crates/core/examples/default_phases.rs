//! A default-mode server only reads entries by index. The client XORs the
//! returned entries itself and rebuilds its hints phase by phase.

use std::sync::Arc;

use spider_pir::hints::compute_params;
use spider_pir::protocol::{run_phases, CacheHitPolicy, Client, PhasePlan, ServerMode, Session};
use spider_pir::server::{Database, LocalConnection, Server};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let db = Arc::new(Database::generate(4096, 16, 3)?);
    let server = Server::new(db.clone(), ServerMode::Default);
    let session = Session::connect(LocalConnection::new(server))?;
    let params = compute_params(4096, 16, 4.0, 0.6)?;
    let mut client = Client::preprocess(session, params, 11)?.with_cache_policy(CacheHitPolicy::Dummy);

    let plan = PhasePlan {
        phases: 4,
        queries_per_phase: params.k,
        target_seed: 5,
    };
    let report = run_phases(&mut client, &plan, Some(&db))?;
    for p in &report.phases {
        println!(
            "phase {}: {} queries, {:.0}% of next-generation slots already folded",
            p.phase,
            p.queries,
            p.next_generation_folded * 100.0
        );
    }
    println!(
        "correct {}/{}, amortized download {:.0} B/query, server XORs {}",
        report.total_correct.unwrap_or(0),
        report.total_queries,
        report.amortized_download_per_query,
        db.counters().xor_ops()
    );
    Ok(())
}
