//! Latency model: network transfer, server I/O, M/M/1 queueing, and
//! per-scheme traffic, plus sweeps that emit CSV tables.

mod model;
mod search;
mod sweep;

pub use model::{
    network_ms, queue, scheme_traffic, service_ms, LatencyBreakdown, LatencyScenario, QueueResult, Scheme,
    SchemeTraffic,
};
pub use search::{measure_hint_search, SearchMeasurement};
pub use sweep::{crossovers, sweep, write_csv, Crossover, SweepConfig, SweepResult, SweepRow, CSV_HEADER, CSV_VERSION_LINE};
