//! Run the latency model over a sweep config and print the crossover points.
//!
//!     cargo run --release --example latency_sweep -- crates/core/examples/sweep.toml

use spider_pir::bench::{sweep, write_csv, SweepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/sweep.toml").to_string());
    let config = SweepConfig::load(&path)?;
    let result = sweep(&config)?;

    for c in &result.crossovers {
        match c.beta_star {
            Some(b) => println!("n={} bw={} bits/ms clients={}: baseSPIDER wins from beta={b} B", c.n, c.bandwidth, c.num_clients),
            None => println!("n={} bw={} bits/ms clients={}: no crossover in range", c.n, c.bandwidth, c.num_clients),
        }
    }
    let out = std::env::temp_dir().join("spider_sweep.csv");
    write_csv(std::fs::File::create(&out)?, &result.rows)?;
    println!("{} rows written to {}", result.rows.len(), out.display());
    Ok(())
}
