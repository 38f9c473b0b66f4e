//! Compare what the server sees for two different target sequences.
//!
//!     cargo run --release --example transcript_privacy -- 20000

use spider_pir::privacy::{transcript_distribution_test, TranscriptTestConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5_000);
    let config = TranscriptTestConfig::new(4, 3, trials);
    let report = transcript_distribution_test(&[1, 1, 1], &[2, 3, 4], &config)?;

    println!("{} trials per sequence over {} redacted multisets", report.trials, report.categories);
    for r in &report.rounds {
        println!(
            "round {}: chi2 {:.2} (df {}), p = {:.3}, total variation {:.4}",
            r.round, r.homogeneity.statistic, r.homogeneity.degrees_of_freedom, r.homogeneity.p_value, r.total_variation
        );
    }
    println!("indistinguishable at {}: {}", report.significance, report.passed());
    Ok(())
}
