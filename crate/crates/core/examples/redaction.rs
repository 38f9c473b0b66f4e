//! Redacting one copy of the target leaves a multiset that is uniform over
//! all size-(k-1) multisets. Counts below come from enumeration.
//!
//!     cargo run --example redaction -- 4 3

use spider_pir::combinatorics::{combinatorial_counts, enumerate_multisets, verify_redaction_bijection};
use spider_pir::multiset::redact;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let k: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let counts = combinatorial_counts(n, k)?;
    println!(
        "M = {}, S_y = {}, p = {}",
        counts.total_multisets, counts.containing_multisets, counts.inclusion_probability
    );
    for i in 1..=n {
        let r = verify_redaction_bijection(n, k, i)?;
        println!("target {i}: {} hints contain it, bijection holds: {}", r.containing_count, r.holds);
    }

    let target = 1;
    println!("\nhints containing {target} and what the server sees:");
    for m in enumerate_multisets(n, k)?.iter().filter(|m| m.contains(target)) {
        println!("  {:?} -> {:?}", m.elements(), redact(m, target)?.elements());
    }
    Ok(())
}
