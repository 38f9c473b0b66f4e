//! Database server: the `SPDB` file, request handling for both modes, the
//! TCP service and an in-process connection for tests and simulations.
//!
//! In default mode the XOR path is unreachable: XOR_FETCH is answered with
//! `UNSUPPORTED_OPCODE` before any entry is read, and
//! [`ServerCounters::xor_ops`] stays at zero.

mod db;
mod local;
mod service;

pub use db::{Database, ServerCounters, DB_HEADER_LEN, DB_MAGIC, DB_VERSION, DEFAULT_DISK_BUDGET};
pub use local::LocalConnection;
pub use service::{
    serve, serve_database, server_answer_fetch, server_answer_xor_fetch, Server, ServerConfig, ServerHandle,
};
