//! The `spider` command line.
//!
//! Every flag can also be set through an environment variable named
//! `SPIDER_<FLAG>` (upper case, dashes as underscores). Every subcommand
//! accepts `--json` and then prints a single JSON object on stdout.
//!
//! Database indices given on the command line are 0-based, matching the
//! database file and the wire.

use std::collections::hash_map::RandomState;
use std::ffi::OsString;
use std::hash::{BuildHasher, Hasher};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bench::{sweep, write_csv, SweepConfig};
use crate::error::Error;
use crate::hints::{HintPool, SearchPolicy};
use crate::hints::{coverage_bounds, CoverageParams};
use crate::keymap::KeyMap;
use crate::privacy::{transcript_distribution_test, TranscriptTestConfig};
use crate::protocol::{run_phases, CacheHitPolicy, Client, PhasePlan, QueryKind, ServerMode, Session};
use crate::server::{serve_database, Database, ServerConfig, DEFAULT_DISK_BUDGET};
use crate::verify;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    /// Bad flags or parameters (also used by clap itself).
    pub const USAGE: u8 = 2;
    pub const NETWORK: u8 = 3;
    pub const POOL: u8 = 4;
    /// The target index is covered by no hint and has no stored value.
    pub const COVERAGE: u8 = 5;
    pub const PROTOCOL: u8 = 6;
    /// A verification suite ran but did not pass.
    pub const VERIFY_FAILED: u8 = 7;
}

#[derive(Debug, Parser)]
#[command(name = "spider", version, about = "Single-server PIR with multiset hints")]
pub struct Cli {
    /// Print one JSON object instead of text.
    #[arg(long, global = true, env = "SPIDER_JSON")]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a deterministic pseudorandom database file.
    GenDb {
        #[arg(long, env = "SPIDER_N")]
        n: u64,
        /// Entry size in bytes.
        #[arg(long, env = "SPIDER_BETA")]
        beta: u64,
        #[arg(long, env = "SPIDER_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "SPIDER_OUT")]
        out: PathBuf,
        /// Refuse to write databases larger than this many bytes.
        #[arg(long, env = "SPIDER_DISK_BUDGET", default_value_t = DEFAULT_DISK_BUDGET)]
        disk_budget: u64,
    },
    /// Serve a database file over TCP until killed.
    Serve {
        #[arg(long, env = "SPIDER_DB")]
        db: PathBuf,
        #[arg(long, env = "SPIDER_MODE", default_value = "cooperative")]
        mode: ServerMode,
        #[arg(long, env = "SPIDER_LISTEN", default_value = "127.0.0.1:7878")]
        listen: String,
        /// Largest index list accepted per request [default: 4 * ceil(sqrt n)].
        #[arg(long, env = "SPIDER_MAX_INDICES")]
        max_indices: Option<usize>,
        /// Simulated storage throughput; requests are delayed accordingly.
        #[arg(long, env = "SPIDER_IO_BYTES_PER_MS")]
        io_bytes_per_ms: Option<f64>,
        #[arg(long, env = "SPIDER_MAX_SESSIONS", default_value_t = 256)]
        max_sessions: usize,
    },
    /// Stream the database from a server and build a hint pool file.
    Preprocess {
        #[arg(long, env = "SPIDER_SERVER", default_value = "127.0.0.1:7878")]
        server: String,
        #[arg(long, env = "SPIDER_POOL")]
        pool: PathBuf,
        #[arg(long, env = "SPIDER_COVERAGE_CONSTANT", default_value_t = 4.0)]
        coverage_constant: f64,
        #[arg(long, env = "SPIDER_DELTA_SLACK", default_value_t = 0.6)]
        delta_slack: f64,
        /// Hint size k [default: ceil(sqrt n)].
        #[arg(long, env = "SPIDER_HINT_SIZE")]
        hint_size: Option<u64>,
        /// Hint count m [default: from the coverage formula].
        #[arg(long, env = "SPIDER_HINT_COUNT")]
        hint_count: Option<u64>,
        /// Keep this secret; anyone who knows it can recompute the hints
        /// [default: fresh random].
        #[arg(long, env = "SPIDER_MASTER_SEED")]
        master_seed: Option<u64>,
        /// Stop hint search at the first covering hint instead of picking
        /// uniformly among all of them.
        #[arg(long, env = "SPIDER_FIRST_FOUND")]
        first_found: bool,
    },
    /// Privately retrieve one entry and update the pool file.
    Query {
        #[arg(long, env = "SPIDER_SERVER", default_value = "127.0.0.1:7878")]
        server: String,
        #[arg(long, env = "SPIDER_POOL")]
        pool: PathBuf,
        /// 0-based database index.
        #[arg(long, env = "SPIDER_INDEX", conflicts_with = "key", required_unless_present = "key")]
        index: Option<u64>,
        /// Key to resolve through --keymap.
        #[arg(long, env = "SPIDER_KEY", requires = "keymap")]
        key: Option<String>,
        #[arg(long, env = "SPIDER_KEYMAP")]
        keymap: Option<PathBuf>,
        #[arg(long, env = "SPIDER_CACHE_POLICY", default_value = "silent")]
        cache_policy: CacheHitPolicy,
    },
    /// Run a multi-phase random workload with refreshes.
    RunPhases {
        #[arg(long, env = "SPIDER_SERVER", default_value = "127.0.0.1:7878")]
        server: String,
        #[arg(long, env = "SPIDER_POOL")]
        pool: PathBuf,
        #[arg(long, env = "SPIDER_PHASES")]
        phases: u64,
        /// [default: k]
        #[arg(long, env = "SPIDER_QUERIES_PER_PHASE")]
        queries_per_phase: Option<u64>,
        /// Local copy of the database to check every answer against.
        #[arg(long, env = "SPIDER_ORACLE_DB")]
        oracle_db: Option<PathBuf>,
        #[arg(long, env = "SPIDER_TARGET_SEED", default_value_t = 1)]
        target_seed: u64,
        #[arg(long, env = "SPIDER_CACHE_POLICY", default_value = "dummy")]
        cache_policy: CacheHitPolicy,
    },
    /// Run an oracle suite.
    Verify {
        #[arg(env = "SPIDER_SUITE")]
        suite: Suite,
        /// [default depends on suite]
        #[arg(long, env = "SPIDER_N")]
        n: Option<u64>,
        #[arg(long, env = "SPIDER_K")]
        k: Option<u64>,
        /// Seeds expanded by `uniformity` [default: 10000 * M].
        #[arg(long, env = "SPIDER_SAMPLES")]
        samples: Option<u64>,
        /// Pools built by `coverage`.
        #[arg(long, env = "SPIDER_RUNS", default_value_t = 100)]
        runs: u64,
        /// Pools per target sequence for `transcript`.
        #[arg(long, env = "SPIDER_TRIALS", default_value_t = 100_000)]
        trials: u64,
        #[arg(long, env = "SPIDER_TARGETS_A", value_delimiter = ',', default_value = "1,1,1")]
        targets_a: Vec<u64>,
        #[arg(long, env = "SPIDER_TARGETS_B", value_delimiter = ',', default_value = "2,3,4")]
        targets_b: Vec<u64>,
        #[arg(long, env = "SPIDER_COVERAGE_CONSTANT", default_value_t = 4.0)]
        coverage_constant: f64,
        #[arg(long, env = "SPIDER_DELTA_SLACK", default_value_t = 0.6)]
        delta_slack: f64,
        #[arg(long, env = "SPIDER_SIGNIFICANCE", default_value_t = 0.001)]
        significance: f64,
        #[arg(long, env = "SPIDER_SEED", default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate the latency model over a sweep config (TOML or JSON).
    Bench {
        #[arg(long, env = "SPIDER_BENCH_CONFIG")]
        config: PathBuf,
        /// CSV destination [default: stdout in text mode].
        #[arg(long, env = "SPIDER_BENCH_OUT")]
        out: Option<PathBuf>,
    },
    /// Map newline-separated keys to indices by sorted rank.
    Keymap {
        #[arg(long, env = "SPIDER_KEYS")]
        keys: PathBuf,
        #[arg(long, env = "SPIDER_KEYMAP_OUT")]
        out: PathBuf,
        /// Print the index of this key after writing the map.
        #[arg(long, env = "SPIDER_LOOKUP")]
        lookup: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Bijection,
    Counts,
    /// Redaction bijection, every target.
    #[value(name = "lemma1", alias = "redaction")]
    Redaction,
    Uniformity,
    Coverage,
    Transcript,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

/// Result of a subcommand: human text, the JSON form, and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub code: u8,
}

impl Outcome {
    fn ok(text: String, json: Value) -> Self {
        Outcome { text, json, code: exit::OK }
    }
}

/// Tags an error with the exit code of the stage it came from. Errors with
/// an intrinsic category keep it.
trait At<T> {
    fn at(self, stage: u8) -> Result<T, CliError>;
}

impl<T, E: Into<Error>> At<T> for Result<T, E> {
    fn at(self, stage: u8) -> Result<T, CliError> {
        self.map_err(|e| {
            let error = e.into();
            let code = match &error {
                Error::Parameter(_) | Error::Config(_) | Error::DuplicateKeys(_) | Error::OracleTooLarge { .. } => {
                    exit::USAGE
                }
                Error::Uncovered { .. } => exit::COVERAGE,
                Error::Framing(_) | Error::Server(_) => exit::PROTOCOL,
                _ => stage,
            };
            CliError { code, error }
        })
    }
}

fn random_seed() -> u64 {
    let mut h = RandomState::new().build_hasher();
    h.write_u128(std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_nanos()));
    h.finish()
}

/// Parses `args`, runs the subcommand, prints the outcome.
pub fn main_from_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let json = cli.json;
    let mut stdout = std::io::stdout().lock();
    match run(cli) {
        Ok(outcome) => {
            let _ = if json {
                writeln!(stdout, "{}", outcome.json)
            } else {
                write!(stdout, "{}", outcome.text)
            };
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            if json {
                let _ = writeln!(stdout, "{}", json!({"error": e.to_string(), "exit_code": e.code}));
            }
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let json = cli.json;
    match cli.command {
        Command::GenDb {
            n,
            beta,
            seed,
            out,
            disk_budget,
        } => {
            let db = Database::generate_within(n, beta, seed, disk_budget).at(exit::USAGE)?;
            db.save(&out).at(exit::FAILURE)?;
            Ok(Outcome::ok(
                format!("wrote {}: n={n} beta={beta} bytes={}\n", out.display(), db.file_len()),
                json!({"path": out, "n": n, "beta": beta, "seed": seed, "file_len": db.file_len()}),
            ))
        }
        Command::Serve {
            db,
            mode,
            listen,
            max_indices,
            io_bytes_per_ms,
            max_sessions,
        } => {
            let database = Arc::new(Database::load(&db).at(exit::FAILURE)?);
            let config = ServerConfig {
                mode,
                listen,
                db_path: db,
                max_sessions,
                max_indices,
                io_bytes_per_ms,
            };
            let (n, beta) = (database.n(), database.beta());
            let handle = serve_database(database, &config).at(exit::NETWORK)?;
            let addr = handle.local_addr();
            let mut out = std::io::stdout().lock();
            let _ = if json {
                writeln!(out, "{}", json!({"listening": addr.to_string(), "n": n, "beta": beta, "mode": mode}))
            } else {
                writeln!(out, "listening on {addr} (mode {mode}, n={n}, beta={beta})")
            };
            let _ = out.flush();
            drop(out);
            handle.wait();
            Ok(Outcome::ok(String::new(), Value::Null))
        }
        Command::Preprocess {
            server,
            pool,
            coverage_constant,
            delta_slack,
            hint_size,
            hint_count,
            master_seed,
            first_found,
        } => {
            let session = Session::connect_tcp(&server).at(exit::NETWORK)?;
            let info = session.info();
            let k = hint_size.unwrap_or_else(|| crate::hints::ceil_sqrt(info.n));
            let params = match hint_count {
                Some(m) => CoverageParams::explicit(info.n, k, m, info.beta, coverage_constant, delta_slack),
                None => CoverageParams::with_hint_size(info.n, k, info.beta, coverage_constant, delta_slack),
            }
            .at(exit::USAGE)?;
            let master_seed = master_seed.unwrap_or_else(random_seed);
            let mut client = Client::preprocess(session, params, master_seed).at(exit::NETWORK)?;
            if first_found {
                client.pool_mut().set_search_policy(SearchPolicy::FirstFound);
            }
            let streamed = client.session().traffic().download_payload;
            let (_, built) = client.into_parts();
            built.save(&pool).at(exit::POOL)?;
            let uncovered = built.uncovered_store().len();
            let bounds = coverage_bounds(&params);
            Ok(Outcome::ok(
                format!(
                    "pool {}: n={} k={} m={} beta={} mode={}\nstreamed: {streamed} bytes\nuncovered entries stored: {uncovered}\n",
                    pool.display(),
                    params.n,
                    params.k,
                    params.m,
                    params.beta,
                    info.mode
                ),
                json!({
                    "pool": pool,
                    "params": params,
                    "mode": info.mode,
                    "master_seed": master_seed,
                    "streamed_bytes": streamed,
                    "uncovered_stored": uncovered,
                    "continuous": built.is_continuous(),
                    "bounds": bounds,
                }),
            ))
        }
        Command::Query {
            server,
            pool,
            index,
            key,
            keymap,
            cache_policy,
        } => {
            let index0 = match (index, key) {
                (Some(i), _) => i,
                (None, Some(key)) => {
                    let map = KeyMap::load(keymap.expect("clap enforces --keymap")).at(exit::USAGE)?;
                    map.lookup(&key)
                        .ok_or_else(|| Error::Parameter(format!("key {key:?} not in the key map")))
                        .at(exit::USAGE)?
                }
                (None, None) => unreachable!("clap enforces --index or --key"),
            };
            let hint_pool = HintPool::load(&pool).at(exit::POOL)?;
            let n = hint_pool.params().n;
            if index0 >= n {
                return Err(Error::param(format!("--index {index0} outside [0, {n})"))).at(exit::USAGE);
            }
            let session = Session::connect_tcp(&server).at(exit::NETWORK)?;
            let mut client = Client::with_pool(session, hint_pool)
                .at(exit::POOL)?
                .with_cache_policy(cache_policy);
            let out = client.query(index0 + 1).at(exit::NETWORK)?;
            let (_, updated) = client.into_parts();
            updated.save(&pool).at(exit::POOL)?;
            let value = hex::encode(&out.value);
            let mut text = format!("index: {index0}\nvalue: {value}\n");
            if out.kind == QueryKind::CacheHit && out.traffic.requests == 0 {
                text.push_str("cache hit, 0 bytes\n");
            } else {
                text.push_str(&format!(
                    "uploaded: {} bytes\ndownloaded: {} bytes\n",
                    out.traffic.upload_payload, out.traffic.download_payload
                ));
            }
            if let Some(r) = &out.refresh {
                text.push_str(&format!("refreshed phase first: {} bytes\n", r.bytes_fetched));
            }
            let mut j = serde_json::to_value(&out).expect("outcome serialises");
            j["index"] = json!(index0);
            Ok(Outcome::ok(text, j))
        }
        Command::RunPhases {
            server,
            pool,
            phases,
            queries_per_phase,
            oracle_db,
            target_seed,
            cache_policy,
        } => {
            if phases == 0 {
                return Ok(Outcome::ok("nothing to do: 0 phases\n".into(), json!({"phases": [], "total_queries": 0})));
            }
            let oracle = oracle_db.map(Database::load).transpose().at(exit::FAILURE)?;
            let hint_pool = HintPool::load(&pool).at(exit::POOL)?;
            let session = Session::connect_tcp(&server).at(exit::NETWORK)?;
            let mut client = Client::with_pool(session, hint_pool)
                .at(exit::POOL)?
                .with_cache_policy(cache_policy);
            let plan = PhasePlan {
                phases,
                queries_per_phase: queries_per_phase.unwrap_or(client.pool().params().k),
                target_seed,
            };
            let report = run_phases(&mut client, &plan, oracle.as_ref()).at(exit::NETWORK)?;
            let mode = client.mode();
            let (_, updated) = client.into_parts();
            updated.save(&pool).at(exit::POOL)?;
            let mut text = String::new();
            for p in &report.phases {
                text.push_str(&format!(
                    "phase {}: queries={} correct={} refresh_bytes={} next_gen_complete={:.4} next_gen_folded={:.4}\n",
                    p.phase,
                    p.queries,
                    p.correct.map_or("-".into(), |c| c.to_string()),
                    p.refreshes.iter().map(|r| r.bytes_fetched).sum::<u64>(),
                    p.next_generation_completed,
                    p.next_generation_folded,
                ));
            }
            if let Some(c) = report.total_correct {
                text.push_str(&format!("correct: {c}/{}\n", report.total_queries));
            }
            text.push_str(&format!(
                "completion download: {} bytes\namortized download per query: {:.1} bytes\n",
                report.completion_download, report.amortized_download_per_query
            ));
            let mut j = serde_json::to_value(&report).expect("report serialises");
            j["mode"] = json!(mode);
            let code = match report.total_correct {
                Some(c) if c != report.total_queries => exit::VERIFY_FAILED,
                _ => exit::OK,
            };
            Ok(Outcome { text, json: j, code })
        }
        Command::Verify {
            suite,
            n,
            k,
            samples,
            runs,
            trials,
            targets_a,
            targets_b,
            coverage_constant,
            delta_slack,
            significance,
            seed,
        } => run_verify(
            suite,
            n,
            k,
            samples,
            runs,
            trials,
            (&targets_a, &targets_b),
            (coverage_constant, delta_slack, significance, seed),
        ),
        Command::Bench { config, out } => {
            let cfg = SweepConfig::load(&config).at(exit::USAGE)?;
            let result = sweep(&cfg).at(exit::FAILURE)?;
            let mut text = String::new();
            match &out {
                Some(path) => {
                    let file = std::fs::File::create(path).at(exit::FAILURE)?;
                    write_csv(std::io::BufWriter::new(file), &result.rows).at(exit::FAILURE)?;
                    text.push_str(&format!("wrote {} rows to {}\n", result.rows.len(), path.display()));
                }
                None if !json => {
                    let mut buf = Vec::new();
                    write_csv(&mut buf, &result.rows).at(exit::FAILURE)?;
                    text.push_str(&String::from_utf8_lossy(&buf));
                }
                None => {}
            }
            for c in &result.crossovers {
                let star = c.beta_star.map_or("none".into(), |b| b.to_string());
                text.push_str(&format!(
                    "# crossover n={} bandwidth={} io={} clients={}: beta*={star}\n",
                    c.n, c.bandwidth, c.io_throughput, c.num_clients
                ));
            }
            Ok(Outcome::ok(text, serde_json::to_value(&result).expect("sweep serialises")))
        }
        Command::Keymap { keys, out, lookup } => {
            let text = std::fs::read_to_string(&keys).at(exit::FAILURE)?;
            let map = KeyMap::parse_keys(&text).at(exit::USAGE)?;
            map.save(&out).at(exit::FAILURE)?;
            let found = lookup.as_deref().map(|k| (k, map.lookup(k)));
            let mut t = format!("mapped {} keys to {}\n", map.len(), out.display());
            if let Some((k, i)) = found {
                t.push_str(&format!("{k} -> {}\n", i.map_or("absent".into(), |i| i.to_string())));
            }
            Ok(Outcome::ok(
                t,
                json!({"keys": map.len(), "out": out, "lookup": found.map(|(k, i)| json!({"key": k, "index": i}))}),
            ))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_verify(
    suite: Suite,
    n: Option<u64>,
    k: Option<u64>,
    samples: Option<u64>,
    runs: u64,
    trials: u64,
    targets: (&[u64], &[u64]),
    (coverage_constant, delta_slack, significance, seed): (f64, f64, f64, u64),
) -> Result<Outcome, CliError> {
    let (passed, text, j) = match suite {
        Suite::Bijection => {
            let (n, k) = (n.unwrap_or(6), k.unwrap_or(4));
            let r = verify::bijection_suite(n, k).at(exit::USAGE)?;
            let t = format!(
                "bijection n<={n} k<={k}: {} pairs, {} multisets checked\n",
                r.pairs_checked, r.multisets_checked
            );
            (r.passed, t, serde_json::to_value(&r))
        }
        Suite::Counts => {
            let (n, k) = (n.unwrap_or(3), k.unwrap_or(2));
            let r = verify::counts_suite(n, k).at(exit::USAGE)?;
            let t = format!(
                "counts n={n} k={k}: M={} S_y={} p={}\n",
                r.total_multisets, r.containing_multisets, r.inclusion_probability
            );
            (r.passed, t, serde_json::to_value(&r))
        }
        Suite::Redaction => {
            let (n, k) = (n.unwrap_or(4), k.unwrap_or(3));
            let r = verify::redaction_suite(n, k).at(exit::USAGE)?;
            let t = format!(
                "redaction n={n} k={k}: |R_i| = {:?} (expected {} each)\n",
                r.containing_counts, r.expected_count
            );
            (r.passed, t, serde_json::to_value(&r))
        }
        Suite::Uniformity => {
            let (n, k) = (n.unwrap_or(5), k.unwrap_or(2));
            let m_total = crate::combinatorics::binomial(n + k - 1, k);
            let default_samples = u64::try_from(m_total * 10_000u32).unwrap_or(u64::MAX);
            let r = verify::uniformity_suite(n, k, samples.unwrap_or(default_samples), seed, significance)
                .at(exit::USAGE)?;
            let t = format!(
                "uniformity n={n} k={k}: {} samples over {} multisets, chi2={:.3} df={} p={:.4}\n",
                r.samples, r.categories, r.chi_square.statistic, r.chi_square.degrees_of_freedom, r.chi_square.p_value
            );
            (r.passed, t, serde_json::to_value(&r))
        }
        Suite::Coverage => {
            let n = n.unwrap_or(1024);
            let r = verify::coverage_suite(n, coverage_constant, delta_slack, runs, seed).at(exit::USAGE)?;
            let t = format!(
                "coverage n={n} k={} m={}: fully covered {}/{} runs, mean cover {:.3} vs 2C ln n = {:.3} ({:.2}% off), exact expectation {:.3}\nmarkov bound {:.3e}, chernoff bound {:.3e}\n",
                r.params.k,
                r.params.m,
                r.fully_covered_runs,
                r.runs,
                r.mean_cover_count,
                r.intended_cover_count,
                r.relative_error * 100.0,
                r.expected_cover_count,
                r.bounds.markov_failure_bound,
                r.bounds.chernoff_failure_bound,
            );
            (r.passed, t, serde_json::to_value(&r))
        }
        Suite::Transcript => {
            let (n, k) = (n.unwrap_or(4), k.unwrap_or(3));
            let mut config = TranscriptTestConfig::new(n, k, trials);
            config.coverage_constant = coverage_constant;
            config.delta_slack = delta_slack;
            config.significance = significance;
            config.seed = seed;
            let r = transcript_distribution_test(targets.0, targets.1, &config).at(exit::USAGE)?;
            let mut t = format!("transcript n={n} k={k} m={} trials={}\n", r.m, r.trials);
            for round in &r.rounds {
                t.push_str(&format!(
                    "round {}: chi2={:.3} df={} p={:.4} tv={:.5}\n",
                    round.round,
                    round.homogeneity.statistic,
                    round.homogeneity.degrees_of_freedom,
                    round.homogeneity.p_value,
                    round.total_variation
                ));
            }
            t.push_str(&format!(
                "round 1 uniformity p: a={:.4} b={:.4}\n",
                r.round1_uniformity_a.p_value, r.round1_uniformity_b.p_value
            ));
            (r.passed(), t, serde_json::to_value(&r))
        }
    };
    let mut j = j.expect("report serialises");
    j["passed"] = json!(passed);
    Ok(Outcome {
        text: format!("{text}{}\n", if passed { "PASS" } else { "FAIL" }),
        json: j,
        code: if passed { exit::OK } else { exit::VERIFY_FAILED },
    })
}
