//! Single-server stateful private information retrieval with multiset hints.
//!
//! The client streams the database once and keeps `m` hints, each a 64-bit
//! seed that expands to a uniform size-`k` multiset of indices plus the XOR
//! of those entries. To read index `i` it picks a hint covering `i`, removes
//! one copy of `i`, and sends the remaining `k - 1` indices. A cooperative
//! server answers with their XOR; a default server only returns the entries
//! and the client XORs them itself.
//!
//! Modules:
//! - [`multiset`], [`combinatorics`]: seeded multiset sampling, the
//!   stars-and-bars bijection, redaction, and exact enumeration oracles.
//! - [`hints`]: parameter selection, coverage bounds, the hint pool.
//! - [`protocol`]: wire codec, transports, the client session.
//! - [`server`]: database file, request handling, TCP service.
//! - [`bench`]: network and M/M/1 latency model and sweeps.
//! - [`privacy`]: transcript-distribution harness.
//! - [`keymap`]: sorted-rank key to index mapping.
//! - [`verify`]: exhaustive and statistical oracle suites.
//! - [`cli`]: the `spider` command line.

pub mod bench;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod hints;
pub mod keymap;
pub mod multiset;
pub mod prg;
pub mod privacy;
pub mod protocol;
pub mod server;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
