use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hints::ceil_sqrt;
use crate::protocol::codec::INDEX_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "baseSPIDER")]
    BaseSpider,
    #[serde(rename = "SPIDER")]
    Spider,
    #[serde(rename = "RMS24")]
    Rms24,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::BaseSpider, Scheme::Spider, Scheme::Rms24];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::BaseSpider => "baseSPIDER",
            Scheme::Spider => "SPIDER",
            Scheme::Rms24 => "RMS24",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "basespider" => Ok(Scheme::BaseSpider),
            "spider" => Ok(Scheme::Spider),
            "rms24" => Ok(Scheme::Rms24),
            _ => Err(Error::param(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Per-query online payload bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SchemeTraffic {
    pub upload_bytes: u64,
    pub download_bytes: u64,
}

pub fn scheme_traffic(scheme: Scheme, n: u64, beta: u64) -> SchemeTraffic {
    let k = ceil_sqrt(n);
    let index = INDEX_WIDTH as u64;
    match scheme {
        Scheme::BaseSpider => SchemeTraffic {
            upload_bytes: (k - 1) * index,
            download_bytes: beta,
        },
        Scheme::Spider => SchemeTraffic {
            upload_bytes: (k - 1) * index,
            download_bytes: (k - 1) * beta,
        },
        // two redacted half-size hints
        Scheme::Rms24 => SchemeTraffic {
            upload_bytes: 2 * (k / 2) * index,
            download_bytes: 2 * beta,
        },
    }
}

pub fn network_ms(upload_bytes: u64, download_bytes: u64, bandwidth_bits_per_ms: f64) -> f64 {
    (upload_bytes + download_bytes) as f64 * 8.0 / bandwidth_bits_per_ms
}

/// Time for the server to read the `ceil(sqrt n)` entries one query touches.
pub fn service_ms(n: u64, beta: u64, io_bytes_per_ms: f64) -> f64 {
    (ceil_sqrt(n) * beta) as f64 / io_bytes_per_ms
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueResult {
    pub rho: f64,
    /// Absent when saturated.
    pub wait_ms: Option<f64>,
    pub total_ms: Option<f64>,
    pub saturated: bool,
}

/// M/M/1 queue for `num_clients` clients. `total_ms` is
/// `base_ms + service_ms + wait_ms`.
pub fn queue(num_clients: u64, base_ms: f64, service_ms: f64) -> QueueResult {
    let rho = num_clients as f64 * service_ms / (base_ms + service_ms);
    if rho >= 1.0 {
        return QueueResult {
            rho,
            wait_ms: None,
            total_ms: None,
            saturated: true,
        };
    }
    let wait = service_ms * rho / (1.0 - rho);
    QueueResult {
        rho,
        wait_ms: Some(wait),
        total_ms: Some(base_ms + service_ms + wait),
        saturated: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyScenario {
    pub scheme: Scheme,
    pub n: u64,
    pub beta: u64,
    pub bandwidth: f64,
    pub io_throughput: f64,
    pub num_clients: u64,
    pub hint_search_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyBreakdown {
    pub traffic: SchemeTraffic,
    pub network_ms: f64,
    pub service_ms: f64,
    pub hint_search_ms: f64,
    /// Uncontended round trip: network, hint search and server I/O.
    pub base_ms: f64,
    pub queue: QueueResult,
}

impl LatencyScenario {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.bandwidth > 0.0 && self.io_throughput > 0.0) {
            return Err(Error::param("bandwidth and io_throughput must be positive"));
        }
        if !(self.hint_search_ms >= 0.0) {
            return Err(Error::param("hint_search_ms must be non-negative"));
        }
        if self.n == 0 {
            return Err(Error::param("n must be positive"));
        }
        Ok(())
    }

    pub fn evaluate(&self) -> LatencyBreakdown {
        let traffic = scheme_traffic(self.scheme, self.n, self.beta);
        let network = network_ms(traffic.upload_bytes, traffic.download_bytes, self.bandwidth);
        let service = service_ms(self.n, self.beta, self.io_throughput);
        let base = network + self.hint_search_ms + service;
        LatencyBreakdown {
            traffic,
            network_ms: network,
            service_ms: service,
            hint_search_ms: self.hint_search_ms,
            base_ms: base,
            queue: queue(self.num_clients, base, service),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_traffic_values() {
        let mib4 = 4 * 1024 * 1024;
        assert_eq!(scheme_traffic(Scheme::BaseSpider, 1 << 20, mib4).download_bytes, 4_194_304);
        assert_eq!(scheme_traffic(Scheme::Spider, 1 << 20, 7).download_bytes, 1023 * 7);
        for beta in [1u64, 64, 1 << 20] {
            assert_eq!(
                scheme_traffic(Scheme::Rms24, 4096, beta).download_bytes,
                2 * scheme_traffic(Scheme::BaseSpider, 4096, beta).download_bytes
            );
        }
    }

    #[test]
    fn network_and_service() {
        let ms = network_ms(0, 4 * 1024 * 1024, 50_000.0);
        assert!((ms - 33_554_432.0 / 50_000.0).abs() < 1e-9);
        assert_eq!(network_ms(0, 0, 1.0), 0.0);
        let s = service_ms(1 << 20, 65536, 1e6);
        assert!((s - 67.108864).abs() < 1e-12);
        assert_eq!(service_ms(1 << 20, 0, 1e6), 0.0);
    }

    #[test]
    fn queue_examples() {
        // one client, rho = 10 / (10 + 10)
        let q = queue(1, 10.0, 10.0);
        assert_eq!(q.rho, 0.5);
        assert_eq!(q.wait_ms, Some(10.0));
        assert_eq!(q.total_ms, Some(30.0));
        let idle = queue(0, 5.0, 5.0);
        assert_eq!((idle.rho, idle.wait_ms), (0.0, Some(0.0)));
        let sat = queue(2, 10.0, 10.0);
        assert!(sat.saturated && sat.wait_ms.is_none() && sat.rho == 1.0);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
    }
}
