use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_spider");

fn spider(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("SPIDER_JSON").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

struct ServerProcess {
    child: Child,
    addr: String,
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(db: &Path, mode: &str) -> ServerProcess {
    let mut child = Command::new(BIN)
        .args(["--json", "serve", "--listen", "127.0.0.1:0", "--mode", mode, "--db"])
        .arg(db)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let v: Value = serde_json::from_str(&line).unwrap();
    ServerProcess {
        child,
        addr: v["listening"].as_str().unwrap().to_string(),
    }
}

fn gen_db(dir: &Path, name: &str, n: u64, beta: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    let o = spider(&["gen-db", "--n", &n.to_string(), "--beta", &beta.to_string(), "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    path
}

#[test]
fn gen_db_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_db(dir.path(), "a.db", 100, 16);
    let b = gen_db(dir.path(), "b.db", 100, 16);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.db");
    let o = spider(&["--json", "gen-db", "--n", "100", "--beta", "16", "--seed", "2", "--out", c.to_str().unwrap()]);
    assert_eq!(json(&o)["n"], 100);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn gen_db_respects_disk_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big.db");
    let o = spider(&["gen-db", "--n", "1000", "--beta", "1000", "--disk-budget", "4096", "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn preprocess_then_query_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let db = gen_db(dir.path(), "db", 256, 32);
    let raw = std::fs::read(&db).unwrap();
    let body = &raw[raw.len() - 256 * 32..];
    for mode in ["cooperative", "default"] {
        let server = serve(&db, mode);
        let pool = dir.path().join(format!("{mode}.pool"));
        let p = pool.to_str().unwrap();
        let o = spider(&["--json", "preprocess", "--server", &server.addr, "--pool", p, "--master-seed", "9"]);
        assert!(o.status.success(), "{o:?}");
        assert_eq!(json(&o)["params"]["m"], 710);

        let o = spider(&["--json", "query", "--server", &server.addr, "--pool", p, "--index", "200"]);
        let v = json(&o);
        assert_eq!(v["value"].as_str().unwrap(), hex::encode(&body[200 * 32..201 * 32]));
        assert_eq!(v["kind"], "hint");
        let expect_down = if mode == "default" { 15 * 32 } else { 32 };
        assert_eq!(v["traffic"]["download_payload"], expect_down);

        let o = spider(&["query", "--server", &server.addr, "--pool", p, "--index", "200"]);
        assert!(stdout(&o).contains("cache hit, 0 bytes"), "{}", stdout(&o));
    }
}

#[test]
fn run_phases_checks_against_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let db = gen_db(dir.path(), "db", 256, 8);
    let server = serve(&db, "default");
    let pool = dir.path().join("pool");
    let p = pool.to_str().unwrap();
    assert!(spider(&["preprocess", "--server", &server.addr, "--pool", p]).status.success());
    let o = spider(&[
        "run-phases", "--server", &server.addr, "--pool", p, "--phases", "3", "--oracle-db", db.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("correct: 48/48"), "{}", stdout(&o));

    let noop = spider(&["--json", "run-phases", "--server", &server.addr, "--pool", p, "--phases", "0"]);
    assert!(noop.status.success());
    assert_eq!(json(&noop)["total_queries"], 0);
}

#[test]
fn env_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env.db");
    let o = Command::new(BIN)
        .arg("gen-db")
        .env("SPIDER_N", "12")
        .env("SPIDER_BETA", "4")
        .env("SPIDER_OUT", &out)
        .env("SPIDER_JSON", "true")
        .output()
        .unwrap();
    assert!(o.status.success(), "{o:?}");
    assert_eq!(json(&o)["n"], 12);
    assert_eq!(std::fs::metadata(&out).unwrap().len(), json(&o)["file_len"].as_u64().unwrap());
}

#[test]
fn verify_suites_report_pass() {
    for args in [
        vec!["verify", "bijection", "--n", "4", "--k", "3"],
        vec!["verify", "counts", "--n", "5", "--k", "2"],
        vec!["verify", "lemma1", "--n", "4", "--k", "3"],
        vec!["verify", "uniformity", "--n", "4", "--k", "2", "--samples", "20000"],
        vec!["verify", "coverage", "--n", "1024", "--runs", "3"],
        vec!["verify", "transcript", "--trials", "500", "--targets-a", "1,1", "--targets-b", "2,3"],
    ] {
        let mut full = vec!["--json"];
        full.extend(&args);
        let o = spider(&full);
        assert!(o.status.success(), "{args:?}: {o:?}");
        assert_eq!(json(&o)["passed"], true, "{args:?}");
    }
}

#[test]
fn bench_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "schemes = [\"baseSPIDER\", \"RMS24\"]\nn = [4096]\nbeta = [1024, 1048576]\n\n[hint_search_ms]\nbaseSPIDER = 2.0\nRMS24 = 0.1\n",
    )
    .unwrap();
    let out = dir.path().join("out.csv");
    let o = spider(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# spider bench csv v1"));
    assert!(lines.next().unwrap().starts_with("scheme,n,beta,"));
    assert_eq!(lines.count(), 2 * 2 * 2);

    std::fs::write(&cfg, "n = [4096]\nbogus = 1\n").unwrap();
    let o = spider(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn keymap_roundtrip_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("keys.txt");
    std::fs::write(&keys, "carol\nalice\nbob\n").unwrap();
    let map = dir.path().join("keys.map");
    let o = spider(&[
        "--json", "keymap", "--keys", keys.to_str().unwrap(), "--out", map.to_str().unwrap(), "--lookup", "bob",
    ]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(json(&o)["lookup"]["index"], 1);

    std::fs::write(&keys, "a\nb\na\n").unwrap();
    let o = spider(&["keymap", "--keys", keys.to_str().unwrap(), "--out", map.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate keys: a"));
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.pool");
    let m = missing.to_str().unwrap();
    let o = spider(&["--json", "query", "--server", "127.0.0.1:1", "--pool", m, "--index", "0"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o)["exit_code"], 4);

    let db = gen_db(dir.path(), "db", 64, 8);
    let server = serve(&db, "cooperative");
    let pool = dir.path().join("pool");
    let p = pool.to_str().unwrap();
    assert!(spider(&["preprocess", "--server", &server.addr, "--pool", p]).status.success());
    let o = spider(&["query", "--server", &server.addr, "--pool", p, "--index", "64"]);
    assert_eq!(o.status.code(), Some(2));
    drop(server);
    let o = spider(&["query", "--server", "127.0.0.1:1", "--pool", p, "--index", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(spider(&["query", "--pool", p]).status.code(), Some(2));
}
