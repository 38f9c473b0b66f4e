//! Wire codec and the client side of both protocol modes.
//!
//! In cooperative mode the client sends the redacted hint with XOR_FETCH and
//! gets back one parity. In default mode it sends the same indices with
//! FETCH, receives the raw entries and XORs them itself; those entries also
//! feed continuous preprocessing of the next hint generation.

pub mod client;
pub mod codec;
pub mod session;
pub mod workload;

pub use client::{CacheHitPolicy, Client, QueryKind, QueryOutcome};
pub use codec::{Opcode, QueryMessage, ResponseMessage, ServerInfo, ServerMode};
pub use session::{Session, TcpConnection, Traffic, Transcript, TranscriptEntry};
pub use workload::{run_phases, PhasePlan, PhaseReport, QueryRecord, WorkloadReport};
