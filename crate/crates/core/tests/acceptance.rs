//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use spider_pir::bench::{network_ms, queue, scheme_traffic, sweep, LatencyScenario, Scheme, SweepConfig};
use spider_pir::combinatorics::verify_redaction_bijection;
use spider_pir::hints::compute_params;
use spider_pir::multiset::{multiset_from_subset, subset_from_multiset, Multiset, SubsetSample};
use spider_pir::privacy::{transcript_distribution_test, TranscriptTestConfig};
use spider_pir::protocol::{run_phases, CacheHitPolicy, Client, PhasePlan, ServerMode, Session};
use spider_pir::server::{serve_database, server_answer_xor_fetch, Database, ServerConfig};
use spider_pir::verify::{bijection_suite, coverage_suite, uniformity_suite};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

fn c1_bijection() -> Verdict {
    let start = Instant::now();
    let r = bijection_suite(6, 4).expect("enumeration within cap");
    let t = start.elapsed();
    verdict(
        r.passed && r.pairs_checked == 24 && within(t, 5),
        format!("{} (n,k) pairs, {} multisets, {t:.2?}", r.pairs_checked, r.multisets_checked),
    )
}

fn c2_worked_example() -> Verdict {
    let subset = SubsetSample::new(vec![2, 3, 5], 5).unwrap();
    let multiset = Multiset::new(vec![2, 2, 3], 3).unwrap();
    let forward = multiset_from_subset(&subset, 3).unwrap() == multiset;
    let backward = subset_from_multiset(&multiset) == subset;
    verdict(forward && backward, "(2,2,3) <-> (2,3,5)")
}

fn c3_redaction() -> Verdict {
    let start = Instant::now();
    // |R_i| = C(n+k-2, k-1): C(5,2), C(5,1), C(4,2)
    let cases = [(4u64, 3u64, 10u64), (5, 2, 5), (3, 3, 6)];
    let mut ok = true;
    for (n, k, size) in cases {
        for i in 1..=n {
            let r = verify_redaction_bijection(n, k, i).unwrap();
            ok &= r.holds && r.containing_count == size;
        }
    }
    let t = start.elapsed();
    verdict(ok && within(t, 5), format!("(4,3),(5,2),(3,3) every i, {t:.2?}"))
}

fn c4_seed_uniformity() -> Verdict {
    let start = Instant::now();
    let r = uniformity_suite(5, 2, 150_000, 0x5EED, 0.001).unwrap();
    let t = start.elapsed();
    verdict(
        r.passed && r.categories == 15 && within(t, 30),
        format!(
            "chi2={:.3} df={} p={:.4}, {t:.2?}",
            r.chi_square.statistic, r.chi_square.degrees_of_freedom, r.chi_square.p_value
        ),
    )
}

struct EndToEnd {
    mode: ServerMode,
    correct: u64,
    total: u64,
    m: u64,
    downloads: Vec<u64>,
    uploads: Vec<u64>,
    xor_ops: u64,
    elapsed: Duration,
}

fn end_to_end(mode: ServerMode) -> EndToEnd {
    let start = Instant::now();
    let db = Arc::new(Database::generate(1024, 64, 2024).unwrap());
    let mut config = ServerConfig::new("", mode);
    config.listen = "127.0.0.1:0".into();
    let handle = serve_database(db.clone(), &config).unwrap();
    let session = Session::connect_tcp(handle.local_addr()).unwrap();
    let params = compute_params(1024, 64, 4.0, 0.6).unwrap();
    let mut client = Client::preprocess(session, params, 0xC0FFEE)
        .unwrap()
        .with_cache_policy(CacheHitPolicy::Dummy);
    let plan = PhasePlan {
        phases: 4,
        queries_per_phase: 32,
        target_seed: 77,
    };
    let report = run_phases(&mut client, &plan, Some(&db)).unwrap();
    let xor_ops = handle.server().database().counters().xor_ops();
    handle.shutdown();
    EndToEnd {
        mode,
        correct: report.total_correct.unwrap(),
        total: report.total_queries,
        m: params.m,
        downloads: report.queries.iter().map(|q| q.download_payload).collect(),
        uploads: report.queries.iter().map(|q| q.upload_payload).collect(),
        xor_ops,
        elapsed: start.elapsed(),
    }
}

fn c5_correctness(runs: &[EndToEnd]) -> Verdict {
    let ok = runs
        .iter()
        .all(|r| r.correct == 128 && r.total == 128 && r.m == 1775 && within(r.elapsed, 120));
    let correct: u64 = runs.iter().map(|r| r.correct).sum();
    let total: u64 = runs.iter().map(|r| r.total).sum();
    let times: Vec<String> = runs.iter().map(|r| format!("{} {:.2?}", r.mode, r.elapsed)).collect();
    verdict(ok && total == 256, format!("correct {correct}/{total}, m=1775, {}", times.join(", ")))
}

fn c6_traffic(runs: &[EndToEnd]) -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for r in runs {
        let expect = match r.mode {
            ServerMode::Cooperative => 64,
            ServerMode::Default => 31 * 64,
        };
        let exact = r.downloads.iter().all(|&d| d == expect) && r.uploads.iter().all(|&u| u == 31 * 8);
        ok &= exact && r.downloads.len() == 128;
        detail.push(format!("{}: {} queries at {expect} B down", r.mode, r.downloads.len()));
    }
    verdict(ok, detail.join(", "))
}

fn c7_coverage() -> Verdict {
    let start = Instant::now();
    let r = coverage_suite(1024, 4.0, 0.6, 100, 0xC0DE).unwrap();
    let t = start.elapsed();
    let intended = 8.0 * 1024f64.ln();
    verdict(
        r.fully_covered_runs >= 99
            && (r.mean_cover_count - intended).abs() / intended <= 0.05
            && within(t, 300),
        format!(
            "covered {}/100 runs, mean {:.3} vs {intended:.3} ({:.2}% off), {t:.2?}",
            r.fully_covered_runs,
            r.mean_cover_count,
            r.relative_error * 100.0
        ),
    )
}

fn c8_transcript() -> Verdict {
    let start = Instant::now();
    let config = TranscriptTestConfig::new(4, 3, 100_000);
    let r = transcript_distribution_test(&[1, 1, 1], &[2, 3, 4], &config).unwrap();
    let t = start.elapsed();
    let rounds: Vec<String> = r
        .rounds
        .iter()
        .map(|x| format!("r{} p={:.3} tv={:.4}", x.round, x.homogeneity.p_value, x.total_variation))
        .collect();
    verdict(
        r.passed() && r.categories == 10 && r.rounds.len() == 3 && within(t, 600),
        format!(
            "{}; round-1 uniform p={:.3}/{:.3}, {t:.2?}",
            rounds.join(", "),
            r.round1_uniformity_a.p_value,
            r.round1_uniformity_b.p_value
        ),
    )
}

fn c9_xor_oracle() -> Verdict {
    let mut rng = StdRng::seed_from_u64(9);
    let (n, beta) = (64usize, 16usize);
    let raw: Vec<u8> = (0..n * beta).map(|_| rng.gen()).collect();
    let db = Database::from_entries(n as u64, beta as u64, raw.clone()).unwrap();
    let mut dup_lists = 0;
    let mut ok = true;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=24);
        let mut list: Vec<u64> = (0..len).map(|_| rng.gen_range(0..n as u64)).collect();
        if rng.gen_bool(0.3) {
            let x = list[0];
            list.push(x);
        }
        let mut sorted = list.clone();
        sorted.sort_unstable();
        sorted.dedup();
        dup_lists += usize::from(sorted.len() < list.len());
        let mut expect = vec![0u8; beta];
        for &i in &list {
            for b in 0..beta {
                expect[b] ^= raw[i as usize * beta + b];
            }
        }
        ok &= server_answer_xor_fetch(&db, &list).unwrap() == expect;
    }
    let pair = server_answer_xor_fetch(&db, &[5, 5]).unwrap() == vec![0u8; beta];
    verdict(ok && pair && dup_lists > 0, format!("1000 lists, {dup_lists} with duplicates"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn c10_formulas() -> Verdict {
    let mut ok = true;
    let net = network_ms(0, 4 * 1024 * 1024, 50_000.0);
    ok &= rel(net, 33_554_432.0 / 50_000.0) <= 1e-6;

    // independent route: arrival rate lambda = c / (base + service),
    // service rate mu = 1 / service, rho = lambda / mu, Wq = rho / (mu - lambda)
    let mut rng = StdRng::seed_from_u64(10);
    let mut checked = 0;
    while checked < 20 {
        let base = rng.gen_range(0.1..5_000.0);
        let service = rng.gen_range(0.1..2_000.0);
        let clients = rng.gen_range(0..12u64);
        let lambda = clients as f64 / (base + service);
        let mu = 1.0 / service;
        let rho = lambda / mu;
        let q = queue(clients, base, service);
        ok &= rel(q.rho, rho) <= 1e-9 || (rho == 0.0 && q.rho == 0.0);
        ok &= q.saturated == (rho >= 1.0);
        if rho < 1.0 {
            let wq = rho / (mu - lambda);
            let w = q.wait_ms.unwrap();
            ok &= if wq == 0.0 { w == 0.0 } else { rel(w, wq) <= 1e-9 };
            ok &= rel(q.total_ms.unwrap(), base + service + wq) <= 1e-9;
        } else {
            ok &= q.wait_ms.is_none() && q.total_ms.is_none();
        }
        checked += 1;
    }

    // rho = 3 * 1 / (2 + 1) is exactly 1
    ok &= queue(3, 2.0, 1.0).saturated;
    let below = queue(3, 2.0 + 1e-9, 1.0);
    ok &= !below.saturated && below.rho < 1.0;
    ok &= !queue(2, 2.0, 1.0).saturated && queue(4, 2.0, 1.0).saturated;
    verdict(ok, format!("network {net:.5} ms, 20 random queue sets, flip at rho = 1"))
}

fn c11_bench_shape() -> Verdict {
    let betas: Vec<u64> = (0..9).map(|i| 1024u64 << (2 * i)).collect();
    let config = SweepConfig {
        schemes: vec![Scheme::BaseSpider, Scheme::Rms24],
        n: vec![1 << 14],
        beta: betas.clone(),
        bandwidth: vec![50_000.0],
        io_throughput: vec![1_000_000.0],
        num_clients: vec![1],
        hint_search_ms: Default::default(),
        search_queries: 20,
        coverage_constant: 4.0,
        seed: 11,
    };
    let result = sweep(&config).unwrap();
    let double = betas.iter().all(|&b| {
        scheme_traffic(Scheme::Rms24, 1 << 14, b).download_bytes
            == 2 * scheme_traffic(Scheme::BaseSpider, 1 << 14, b).download_bytes
    }) && result.rows.iter().all(|r| {
        let d = r.latency.traffic.download_bytes;
        match r.scenario.scheme {
            Scheme::Rms24 => d == 2 * r.scenario.beta,
            _ => d == r.scenario.beta,
        }
    });
    let search = |s: Scheme| {
        result
            .rows
            .iter()
            .find(|r| r.scenario.scheme == s)
            .map(|r| r.scenario.hint_search_ms)
            .unwrap()
    };
    let beta_star = result.crossovers.first().and_then(|c| c.beta_star);

    // client sweep towards saturation
    let scenario = |clients| LatencyScenario {
        scheme: Scheme::BaseSpider,
        n: 1 << 14,
        beta: 1 << 20,
        bandwidth: 50_000.0,
        io_throughput: 10_000_000.0,
        num_clients: clients,
        hint_search_ms: search(Scheme::BaseSpider),
    };
    let rows: Vec<_> = (1..=40).map(|c| scenario(c).evaluate()).collect();
    let finite: Vec<f64> = rows.iter().filter_map(|r| r.queue.total_ms).collect();
    let monotone = finite.windows(2).all(|w| w[1] > w[0]);
    let saturates = rows.iter().any(|r| r.queue.saturated)
        && rows.iter().skip_while(|r| !r.queue.saturated).all(|r| r.queue.saturated);
    let last = rows.iter().rev().find(|r| !r.queue.saturated).unwrap();
    let growth = last.queue.wait_ms.unwrap() / rows[0].queue.wait_ms.unwrap();
    verdict(
        double && beta_star.is_some() && monotone && saturates && growth > 10.0,
        format!(
            "search base={:.3} ms rms={:.4} ms, beta*={:?}, wait grows x{growth:.1} before saturation at rho={:.3}",
            search(Scheme::BaseSpider),
            search(Scheme::Rms24),
            beta_star,
            last.queue.rho
        ),
    )
}

fn c12_purity(runs: &[EndToEnd]) -> Verdict {
    let default = runs.iter().find(|r| r.mode == ServerMode::Default).unwrap();
    let coop = runs.iter().find(|r| r.mode == ServerMode::Cooperative).unwrap();
    verdict(
        default.xor_ops == 0 && coop.xor_ops > 0,
        format!("default xor_ops={}, cooperative xor_ops={}", default.xor_ops, coop.xor_ops),
    )
}

fn main() {
    let runs = [end_to_end(ServerMode::Cooperative), end_to_end(ServerMode::Default)];
    let results = [
        ("1 stars-and-bars bijection", c1_bijection()),
        ("2 worked example", c2_worked_example()),
        ("3 redaction bijection", c3_redaction()),
        ("4 seed-expansion uniformity", c4_seed_uniformity()),
        ("5 end-to-end correctness", c5_correctness(&runs)),
        ("6 traffic exactness", c6_traffic(&runs)),
        ("7 coverage", c7_coverage()),
        ("8 transcript indistinguishability", c8_transcript()),
        ("9 server XOR oracle", c9_xor_oracle()),
        ("10 latency formulas", c10_formulas()),
        ("11 benchmark shape", c11_bench_shape()),
        ("12 default-mode purity", c12_purity(&runs)),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!v.passed);
        println!("criterion {name:<36} {tag}  {}", v.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
