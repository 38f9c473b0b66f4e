//! Expand hint seeds into multisets and show the stars-and-bars shift.
//!
//!     cargo run --example seed_expansion -- 10 4

use spider_pir::multiset::{expand_multiset_from_seed, floyd_sample, multiset_from_subset, MultisetSeed};
use spider_pir::prg::derive_seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let k: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let master = 0xDEC0DE;

    println!("n={n} k={k}: subsets of [{}] become multisets of [{n}]", n + k - 1);
    for j in 0..6 {
        let seed = MultisetSeed(derive_seed(master, j));
        let subset = floyd_sample(n + k - 1, k, seed)?;
        let multiset = multiset_from_subset(&subset, n)?;
        assert_eq!(multiset, expand_multiset_from_seed(n, k, seed)?);
        println!("  seed {:016x}  {:?} -> {:?}", seed.0, subset.elements(), multiset.elements());
    }
    Ok(())
}
