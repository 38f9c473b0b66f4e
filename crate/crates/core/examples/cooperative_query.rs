//! Preprocess against an in-process cooperative server and run a few
//! queries. The server answers each with one XOR.

use std::sync::Arc;

use spider_pir::hints::{compute_params, coverage_bounds};
use spider_pir::protocol::{Client, ServerMode, Session};
use spider_pir::server::{Database, LocalConnection, Server};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let db = Arc::new(Database::generate(1024, 32, 7)?);
    let server = Server::new(db.clone(), ServerMode::Cooperative);
    let session = Session::connect(LocalConnection::new(server))?;

    let params = compute_params(1024, 32, 4.0, 0.6)?;
    let bounds = coverage_bounds(&params);
    println!("k={} m={} markov bound {:.3e}", params.k, params.m, bounds.markov_failure_bound);

    let mut client = Client::preprocess(session, params, 42)?;
    for index in [1, 500, 1024, 500] {
        let out = client.query(index)?;
        assert_eq!(out.value, db.entry(index - 1));
        println!(
            "index {index:4}: {:?}, up {} B, down {} B",
            out.kind, out.traffic.upload_payload, out.traffic.download_payload
        );
    }
    println!("server XORs so far: {}", db.counters().xor_ops());
    Ok(())
}
