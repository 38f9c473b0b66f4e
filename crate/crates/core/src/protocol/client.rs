use std::io::{Read, Write};

use log::debug;
use serde::Serialize;

use super::codec::ServerMode;
use super::session::{Session, Traffic};
use crate::error::{Error, Result};
use crate::hints::{preprocess, xor_into, CoverageParams, HintHandle, HintPool, Lookup, RefreshReport, RefreshSource};

/// What to put on the wire when the answer is already known locally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheHitPolicy {
    /// Answer from the cache and send nothing.
    #[default]
    Silent,
    /// Spend a real query on a random uncached index so every query has
    /// the same traffic.
    Dummy,
}

impl std::str::FromStr for CacheHitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "silent" => Ok(CacheHitPolicy::Silent),
            "dummy" => Ok(CacheHitPolicy::Dummy),
            other => Err(Error::param(format!("unknown cache policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Hint,
    CacheHit,
    /// Served from the uncovered-entry side store.
    Stored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryOutcome {
    pub index: u64,
    #[serde(serialize_with = "hex_bytes")]
    pub value: Vec<u8>,
    pub kind: QueryKind,
    /// Wire traffic of the online request, excluding any refresh.
    pub traffic: Traffic,
    pub refresh: Option<RefreshReport>,
}

fn hex_bytes<S: serde::Serializer>(v: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(v))
}

impl<C: Read + Write> RefreshSource for Session<C> {
    fn fetch(&mut self, indices: &[u64]) -> Result<Vec<Vec<u8>>> {
        Session::fetch(self, indices)
    }

    fn stream(&mut self) -> Result<Vec<(u64, Vec<u8>)>> {
        self.stream_database()
    }
}

/// A PIR client: one server session plus the hint pool.
pub struct Client<C> {
    session: Session<C>,
    pool: HintPool,
    cache_policy: CacheHitPolicy,
}

impl<C: Read + Write> Client<C> {
    /// Streams the database from the server and builds a fresh pool.
    pub fn preprocess(mut session: Session<C>, params: CoverageParams, master_seed: u64) -> Result<Self> {
        let info = session.info();
        if info.n != params.n || info.beta != params.beta {
            return Err(Error::param(format!(
                "server has n={} beta={}, params ask for n={} beta={}",
                info.n, info.beta, params.n, params.beta
            )));
        }
        let entries = session.stream_database()?;
        let pool = preprocess(entries.into_iter().map(Ok), params, master_seed)?;
        Client::with_pool(session, pool)
    }

    /// Resumes with an existing pool. Default-mode servers get continuous
    /// preprocessing switched on.
    pub fn with_pool(session: Session<C>, mut pool: HintPool) -> Result<Self> {
        let info = session.info();
        let params = pool.params();
        if info.n != params.n || info.beta != params.beta {
            return Err(Error::param(format!(
                "pool was built for n={} beta={}, server has n={} beta={}",
                params.n, params.beta, info.n, info.beta
            )));
        }
        if info.mode == ServerMode::Default && !pool.is_continuous() {
            pool.enable_continuous()?;
        }
        Ok(Client {
            session,
            pool,
            cache_policy: CacheHitPolicy::default(),
        })
    }

    pub fn with_cache_policy(mut self, policy: CacheHitPolicy) -> Self {
        self.cache_policy = policy;
        self
    }

    pub fn mode(&self) -> ServerMode {
        self.session.info().mode
    }

    pub fn pool(&self) -> &HintPool {
        &self.pool
    }

    pub fn pool_mut(&mut self) -> &mut HintPool {
        &mut self.pool
    }

    pub fn session(&self) -> &Session<C> {
        &self.session
    }

    pub fn into_parts(self) -> (Session<C>, HintPool) {
        (self.session, self.pool)
    }

    /// Starts a new phase now.
    pub fn refresh(&mut self) -> Result<RefreshReport> {
        let report = self.pool.refresh_phase(&mut self.session)?;
        debug!("phase refresh: {report:?}");
        Ok(report)
    }

    /// Retrieves the entry at 1-based `index`.
    pub fn query(&mut self, index: u64) -> Result<QueryOutcome> {
        let n = self.pool.params().n;
        if index == 0 || index > n {
            return Err(Error::param(format!("index {index} outside [1, {n}]")));
        }
        let cached = self.pool.entry_cache().get(&index).cloned();
        if let (Some(value), CacheHitPolicy::Silent) = (&cached, self.cache_policy) {
            return Ok(QueryOutcome {
                index,
                value: value.clone(),
                kind: QueryKind::CacheHit,
                traffic: Traffic::default(),
                refresh: None,
            });
        }

        let refresh = if self.pool.phase_exhausted() {
            Some(self.refresh()?)
        } else {
            None
        };
        // a refresh clears the cache
        let cached = if refresh.is_some() { None } else { cached };

        let before = self.session.traffic();
        let (value, kind) = match cached {
            Some(v) => {
                self.dummy_query()?;
                (v, QueryKind::CacheHit)
            }
            None => match self.pool.find_covering_hint(index)? {
                Lookup::Hint(handle) => (self.hint_query(handle, index)?, QueryKind::Hint),
                Lookup::CacheHit(v) => (v, QueryKind::CacheHit),
                Lookup::Stored(v) => {
                    self.dummy_query()?;
                    self.pool.cache_entry(index, &v);
                    (v, QueryKind::Stored)
                }
                Lookup::Uncovered => return Err(Error::Uncovered { index }),
            },
        };
        Ok(QueryOutcome {
            index,
            value,
            kind,
            traffic: self.session.traffic().since(&before),
            refresh,
        })
    }

    /// Redacted retrieval of `index` through `handle`. The hint is consumed
    /// only once the server has answered.
    fn hint_query(&mut self, handle: HintHandle, index: u64) -> Result<Vec<u8>> {
        let mode = self.mode();
        let redacted = self.pool.redacted_query(handle, index)?;
        let mut value = self.pool.hint(handle).parity.clone();
        let mut returned = Vec::new();
        if redacted.size() > 0 {
            match mode {
                ServerMode::Cooperative => {
                    let parity = self.session.xor_fetch(&redacted)?;
                    xor_into(&mut value, &parity);
                }
                ServerMode::Default => {
                    let beta = self.pool.params().beta_usize();
                    let entries = self.session.fetch_multiset(&redacted)?;
                    for (ix, e) in redacted.elements().iter().zip(entries.chunks_exact(beta)) {
                        xor_into(&mut value, e);
                        returned.push((*ix, e.to_vec()));
                    }
                }
            }
        }
        self.pool.consume_and_replenish(handle, index, &value)?;
        if self.pool.is_continuous() {
            for (ix, e) in &returned {
                self.pool.ingest_for_next_generation(*ix, e);
            }
            self.pool.ingest_for_next_generation(index, &value);
        }
        Ok(value)
    }

    /// A real hint query for a random uncached covered index, so the wire
    /// looks the same as for any other query.
    fn dummy_query(&mut self) -> Result<()> {
        let n = self.pool.params().n;
        for _ in 0..64 {
            let j = self.pool.rng_mut().in_range(1, n);
            if self.pool.entry_cache().contains_key(&j) {
                continue;
            }
            if let Lookup::Hint(handle) = self.pool.find_covering_hint(j)? {
                self.hint_query(handle, j)?;
                return Ok(());
            }
        }
        let candidates: Vec<u64> = (1..=n)
            .filter(|j| !self.pool.entry_cache().contains_key(j) && self.pool.cover_count(*j) > 0)
            .collect();
        if candidates.is_empty() {
            return Err(Error::ContractViolation("no hint left for a dummy query".into()));
        }
        let j = candidates[self.pool.rng_mut().below(candidates.len() as u64) as usize];
        match self.pool.find_covering_hint(j)? {
            Lookup::Hint(handle) => self.hint_query(handle, j).map(|_| ()),
            _ => Err(Error::ContractViolation("dummy candidate lost its cover".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hints::compute_params;
    use crate::server::{Database, LocalConnection, Server};

    fn client(n: u64, mode: ServerMode, seed: u64) -> (Arc<Database>, Client<LocalConnection>) {
        let db = Arc::new(Database::generate(n, 8, seed).unwrap());
        let server = Server::new(db.clone(), mode);
        let session = Session::connect(LocalConnection::new(server)).unwrap();
        let params = compute_params(n, 8, 4.0, 0.6).unwrap();
        (db, Client::preprocess(session, params, seed ^ 0x55).unwrap())
    }

    #[test]
    fn both_modes_return_ground_truth() {
        for mode in [ServerMode::Cooperative, ServerMode::Default] {
            let (db, mut c) = client(64, mode, 3);
            for i in [1u64, 64, 17, 33, 2, 50, 9, 40] {
                let out = c.query(i).unwrap();
                assert_eq!(out.value, db.entry(i - 1), "mode {mode} index {i}");
                let expect = match mode {
                    ServerMode::Cooperative => 8,
                    ServerMode::Default => 7 * 8,
                };
                assert_eq!(out.traffic.download_payload, expect);
                assert_eq!(out.traffic.upload_payload, 7 * 8);
            }
        }
    }

    #[test]
    fn repeat_is_silent_cache_hit() {
        let (_, mut c) = client(64, ServerMode::Cooperative, 5);
        c.query(10).unwrap();
        let again = c.query(10).unwrap();
        assert_eq!(again.kind, QueryKind::CacheHit);
        assert_eq!(again.traffic, Traffic::default());
    }

    #[test]
    fn dummy_policy_keeps_traffic_shape() {
        let (db, c) = client(64, ServerMode::Default, 6);
        let mut c = c.with_cache_policy(CacheHitPolicy::Dummy);
        c.query(10).unwrap();
        let again = c.query(10).unwrap();
        assert_eq!(again.kind, QueryKind::CacheHit);
        assert_eq!(again.value, db.entry(9));
        assert_eq!(again.traffic.download_payload, 7 * 8);
        assert_eq!(c.pool().queries_this_phase(), 2);
    }

    #[test]
    fn phases_roll_over_with_refresh() {
        let (db, mut c) = client(64, ServerMode::Default, 7);
        let mut refreshes = 0;
        for q in 0..40u64 {
            let i = (q * 37) % 64 + 1;
            let out = c.query(i).unwrap();
            assert_eq!(out.value, db.entry(i - 1));
            refreshes += usize::from(out.refresh.is_some());
        }
        assert!(refreshes >= 1);
        assert_eq!(db.counters().xor_ops(), 0);
    }

    #[test]
    fn server_error_leaves_hint_unconsumed() {
        let (_, mut c) = client(64, ServerMode::Cooperative, 8);
        let live = c.pool().live_hints();
        // a session that thinks it talks to a cooperative server but the
        // server is default mode: XOR_FETCH gets rejected
        let db = Arc::new(Database::generate(64, 8, 8).unwrap());
        let server = Server::new(db, ServerMode::Default);
        let mut session = Session::connect(LocalConnection::new(server)).unwrap();
        std::mem::swap(&mut session, &mut c.session);
        c.session.info.mode = ServerMode::Cooperative;
        let err = c.query(12).unwrap_err();
        assert!(matches!(err, Error::Server(2)));
        assert_eq!(c.pool().live_hints(), live);
        assert_eq!(c.pool().queries_this_phase(), 0);
    }
}
