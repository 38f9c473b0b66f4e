//! Serve a database on a loopback port and query it over TCP.

use std::sync::Arc;

use spider_pir::hints::compute_params;
use spider_pir::protocol::{Client, ServerMode, Session};
use spider_pir::server::{serve_database, Database, ServerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let db = Arc::new(Database::generate(256, 64, 1)?);
    let mut config = ServerConfig::new("", ServerMode::Cooperative);
    config.listen = "127.0.0.1:0".into();
    let handle = serve_database(db.clone(), &config)?;
    println!("listening on {}", handle.local_addr());

    let session = Session::connect_tcp(handle.local_addr())?;
    let info = session.info();
    println!("server: n={} beta={} mode={}", info.n, info.beta, info.mode);
    let mut client = Client::preprocess(session, compute_params(info.n, info.beta, 4.0, 0.6)?, 9)?;

    let out = client.query(100)?;
    assert_eq!(out.value, db.entry(99));
    println!("entry 100 = {}", hex::encode(&out.value[..8]));
    let t = client.session().traffic();
    println!("wire totals: {} B up, {} B down in {} requests", t.upload_wire, t.download_wire, t.requests);
    for e in client.session().transcript().entries() {
        println!("  {:?} with {} indices", e.request.opcode, e.request.indices.len());
    }
    handle.shutdown();
    Ok(())
}
