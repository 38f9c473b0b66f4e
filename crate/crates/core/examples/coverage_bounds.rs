//! Print sizing and coverage bounds for a range of database sizes, then
//! check one of them empirically.

use spider_pir::hints::{compute_params, coverage_bounds};
use spider_pir::verify::coverage_suite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>9} {:>5} {:>7} {:>12} {:>12} {:>8}", "n", "k", "m", "markov", "chernoff", "E[Y]");
    for shift in [6, 10, 14, 18, 20] {
        let n = 1u64 << shift;
        let p = compute_params(n, 1, 4.0, 0.6)?;
        let b = coverage_bounds(&p);
        println!(
            "{n:>9} {:>5} {:>7} {:>12.3e} {:>12.3e} {:>8.2}",
            p.k,
            p.m,
            b.markov_failure_bound,
            b.chernoff_failure_bound,
            b.expected_cover_count_f64()
        );
    }

    let r = coverage_suite(1024, 4.0, 0.6, 20, 1)?;
    println!(
        "\nn=1024 over {} pools: {} fully covered, mean cover {:.2} (expected {:.2}), min {}",
        r.runs, r.fully_covered_runs, r.mean_cover_count, r.expected_cover_count, r.min_cover_count
    );
    Ok(())
}
