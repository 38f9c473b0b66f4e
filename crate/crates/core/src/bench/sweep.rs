use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{LatencyBreakdown, LatencyScenario, Scheme};
use super::search::measure_hint_search;
use crate::error::{Error, Result};

/// First line of every sweep CSV.
pub const CSV_VERSION_LINE: &str = "# spider bench csv v1";

pub const CSV_HEADER: [&str; 16] = [
    "scheme",
    "n",
    "beta",
    "bandwidth",
    "io_throughput",
    "num_clients",
    "upload_bytes",
    "download_bytes",
    "network_ms",
    "service_ms",
    "hint_search_ms",
    "base_ms",
    "rho",
    "wait_ms",
    "total_ms",
    "saturated",
];

fn default_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

fn default_bandwidth() -> Vec<f64> {
    vec![50_000.0, 250_000.0]
}

fn default_io() -> Vec<f64> {
    vec![1_000_000.0]
}

fn default_clients() -> Vec<u64> {
    vec![1]
}

fn default_queries() -> u64 {
    50
}

fn default_coverage() -> f64 {
    4.0
}

/// Sweep definition, read from TOML or JSON. Every list is swept as a
/// cartesian product.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    pub n: Vec<u64>,
    pub beta: Vec<u64>,
    /// Bits per millisecond; 50 Mbps is 50000.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: Vec<f64>,
    /// Bytes per millisecond.
    #[serde(default = "default_io")]
    pub io_throughput: Vec<f64>,
    #[serde(default = "default_clients")]
    pub num_clients: Vec<u64>,
    /// Fixed hint-search times per scheme. Schemes missing here are
    /// measured live, once per `n`.
    #[serde(default)]
    pub hint_search_ms: BTreeMap<Scheme, f64>,
    /// Queries averaged per live measurement.
    #[serde(default = "default_queries")]
    pub search_queries: u64,
    #[serde(default = "default_coverage")]
    pub coverage_constant: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Picks the parser from the extension; `.json` is JSON, anything else TOML.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let config = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("schemes", self.schemes.is_empty()),
            ("n", self.n.is_empty()),
            ("beta", self.beta.is_empty()),
            ("bandwidth", self.bandwidth.is_empty()),
            ("io_throughput", self.io_throughput.is_empty()),
            ("num_clients", self.num_clients.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("{name} must not be empty")));
        }
        if self.n.iter().any(|&n| n < 2) {
            return Err(Error::Config("every n must be at least 2".into()));
        }
        if self.bandwidth.iter().chain(&self.io_throughput).any(|&r| !(r > 0.0)) {
            return Err(Error::Config("rates must be strictly positive".into()));
        }
        if self.hint_search_ms.values().any(|&v| !(v >= 0.0)) {
            return Err(Error::Config("hint_search_ms values must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: LatencyScenario,
    pub latency: LatencyBreakdown,
}

impl SweepRow {
    /// Total latency, infinite when saturated.
    pub fn total_ms(&self) -> f64 {
        self.latency.queue.total_ms.unwrap_or(f64::INFINITY)
    }
}

/// Smallest swept beta from which on baseSPIDER beats RMS24, for one
/// combination of the other parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover {
    pub n: u64,
    pub bandwidth: f64,
    pub io_throughput: f64,
    pub num_clients: u64,
    pub beta_star: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub crossovers: Vec<Crossover>,
}

pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut search: BTreeMap<(Scheme, u64), f64> = BTreeMap::new();
    for &scheme in &config.schemes {
        for &n in &config.n {
            let ms = match config.hint_search_ms.get(&scheme) {
                Some(&ms) => ms,
                None => {
                    measure_hint_search(scheme, n, config.coverage_constant, config.search_queries, config.seed)?
                        .mean_ms
                }
            };
            search.insert((scheme, n), ms);
        }
    }

    let mut rows = Vec::new();
    for &scheme in &config.schemes {
        for &n in &config.n {
            for &bandwidth in &config.bandwidth {
                for &io_throughput in &config.io_throughput {
                    for &num_clients in &config.num_clients {
                        for &beta in &config.beta {
                            let scenario = LatencyScenario {
                                scheme,
                                n,
                                beta,
                                bandwidth,
                                io_throughput,
                                num_clients,
                                hint_search_ms: search[&(scheme, n)],
                            };
                            rows.push(SweepRow {
                                scenario,
                                latency: scenario.evaluate(),
                            });
                        }
                    }
                }
            }
        }
    }
    let crossovers = crossovers(&rows);
    Ok(SweepResult { rows, crossovers })
}

/// For every (n, bandwidth, io, clients) group holding both baseSPIDER and
/// RMS24 rows, the least beta such that baseSPIDER is strictly faster at
/// that beta and at every larger swept beta.
pub fn crossovers(rows: &[SweepRow]) -> Vec<Crossover> {
    type Key = (u64, u64, u64, u64);
    // per beta: (baseSPIDER total, RMS24 total)
    type Totals = BTreeMap<u64, (Option<f64>, Option<f64>)>;
    let key = |s: &LatencyScenario| (s.n, s.bandwidth.to_bits(), s.io_throughput.to_bits(), s.num_clients);
    let mut groups: BTreeMap<Key, Totals> = BTreeMap::new();
    for row in rows {
        let slot = groups
            .entry(key(&row.scenario))
            .or_default()
            .entry(row.scenario.beta)
            .or_default();
        match row.scenario.scheme {
            Scheme::BaseSpider => slot.0 = Some(row.total_ms()),
            Scheme::Rms24 => slot.1 = Some(row.total_ms()),
            Scheme::Spider => {}
        }
    }
    groups
        .into_iter()
        .filter_map(|((n, bw, io, clients), by_beta)| {
            let pairs: Vec<(u64, f64, f64)> = by_beta
                .into_iter()
                .filter_map(|(beta, (b, r))| Some((beta, b?, r?)))
                .collect();
            if pairs.is_empty() {
                return None;
            }
            let mut beta_star = None;
            for &(beta, base, rms) in pairs.iter().rev() {
                if base < rms {
                    beta_star = Some(beta);
                } else {
                    break;
                }
            }
            Some(Crossover {
                n,
                bandwidth: f64::from_bits(bw),
                io_throughput: f64::from_bits(io),
                num_clients: clients,
                beta_star,
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "inf".to_string(), |x| x.to_string())
}

/// Writes the version line, the fixed header and one record per row.
pub fn write_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        let s = &row.scenario;
        let l = &row.latency;
        w.write_record([
            s.scheme.to_string(),
            s.n.to_string(),
            s.beta.to_string(),
            s.bandwidth.to_string(),
            s.io_throughput.to_string(),
            s.num_clients.to_string(),
            l.traffic.upload_bytes.to_string(),
            l.traffic.download_bytes.to_string(),
            l.network_ms.to_string(),
            l.service_ms.to_string(),
            l.hint_search_ms.to_string(),
            l.base_ms.to_string(),
            l.queue.rho.to_string(),
            opt(l.queue.wait_ms),
            opt(l.queue.total_ms),
            l.queue.saturated.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
