//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report prints in
//! order; exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::DateTime;
use payroll_cache::{Cache, CacheConfig};
use payroll_cli::bench::{run_bench, BenchParams, DEFAULT_PERIODS};
use payroll_core::clock::ManualClock;
use payroll_core::testkit::{
    fig2_employee, fig2_period, fig2_statement, fig2_timecard, oracle, random_instance,
    random_statement,
};
use payroll_core::{
    compute_period, parse_statement, render_statement, run_payroll, CompensationModel, Currency,
    EarningStatement, Employee, EmployeeId, Money, PayPeriod, PayrollRun, RuleSet,
    RuleSetCatalog, RunId, RunStatus,
};
use payroll_datastore::{Store, RUNS_FILE};
use payroll_gateway::{Gateway, GatewayConfig, RequestLog, Role, ServerHandle, VersionWeights};
use payroll_taskqueue::{
    drain, Autoscaler, JobKind, JobQueue, JobStatus, PayrollRunHandler, QueueConfig,
    RandomFaults, RunPayrollPayload, ScalingPolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const GOLDEN: &str = include_str!("../../core/tests/golden/fig2_statement.txt");

enum Outcome {
    Pass(String),
    Skip(String),
}

type Check = fn() -> Result<Outcome, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("figure2-exact", figure2_exact),
        ("golden-statement", golden_statement),
        ("engine-oracle", engine_oracle),
        ("exactly-one-under-faults", exactly_one_under_faults),
        ("history-retrieval", history_retrieval),
        ("traffic-splitting", traffic_splitting),
        ("cache-behavior", cache_behavior),
        ("autoscaler", autoscaler),
        ("benchmark", benchmark),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let secs = started.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            Ok(Outcome::Pass(d)) => ("PASS", d),
            Ok(Outcome::Skip(d)) => ("SKIP", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} {name:<26} {secs:>7.2}s  {detail}");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn figure2_exact() -> Result<Outcome, String> {
    let started = Instant::now();
    let run = run_payroll(
        fig2_period(),
        &[fig2_employee()],
        &[fig2_timecard()],
        &RuleSet::fig2_ng(),
        RunId::new("fig2"),
        DateTime::UNIX_EPOCH,
    );
    ensure!(run.status == RunStatus::Done, "warnings: {:?}", run.warnings);
    ensure!(run.statements.len() == 1, "{} statements", run.statements.len());
    let s = &run.statements[0];
    let amounts = |lines: &[payroll_core::DeductionLine]| -> Vec<(String, i64)> {
        lines.iter().map(|l| (l.label.clone(), l.amount.amount_minor())).collect()
    };
    ensure!(s.gross.amount_minor() == 11_250_000, "gross {}", s.gross);
    let withheld = vec![
        ("Federal Income Tax".to_string(), 1_125_000),
        ("Fees & Tolls".to_string(), 25_000),
        ("State Income Tax".to_string(), 25_000),
    ];
    ensure!(amounts(&s.withheld) == withheld, "withheld {:?}", amounts(&s.withheld));
    let employer = vec![("Medicare".to_string(), 40_000), ("Insurance".to_string(), 30_000)];
    ensure!(amounts(&s.employer) == employer, "employer {:?}", amounts(&s.employer));
    let expected_net = 11_250_000 - withheld.iter().map(|(_, a)| a).sum::<i64>();
    ensure!(expected_net == 10_075_000, "line-item net {expected_net}");
    ensure!(s.net.amount_minor() == expected_net, "net {}", s.net);
    ensure!(*s == fig2_statement(), "statement differs from fixture");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(Outcome::Pass(format!("gross {} net {}", s.gross.to_major_string(), s.net.to_major_string())))
}

fn golden_statement() -> Result<Outcome, String> {
    let rendered = render_statement(&fig2_statement());
    ensure!(rendered.as_bytes() == GOLDEN.as_bytes(), "render differs from golden file:\n{rendered}");
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    for i in 0..1_000 {
        let stmt = random_statement(&mut rng);
        let text = render_statement(&stmt);
        let parsed = parse_statement(&text, Currency::NGN).map_err(|e| format!("#{i}: {e}"))?;
        ensure!(render_statement(&parsed) == text, "#{i}: not a fixed point");
        ensure!(parsed == stmt, "#{i}: parse changed the statement");
    }
    Ok(Outcome::Pass("golden byte-identical; 1000 roundtrips fixed".into()))
}

fn engine_oracle() -> Result<Outcome, String> {
    let mut statements = 0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 20, 5);
        let got = compute_period(inst.period, &inst.employees, &inst.timecards, &inst.rules).statements;
        let want = oracle::statements(&inst);
        ensure!(got == want, "seed {seed}: engine and oracle disagree");
        for s in &got {
            let withheld: i64 = s.withheld.iter().map(|l| l.amount.amount_minor()).sum();
            ensure!(
                s.net.amount_minor() + withheld == s.gross.amount_minor(),
                "seed {seed}: {} net + withheld != gross",
                s.employee_id
            );
        }
        statements += got.len();
    }
    Ok(Outcome::Pass(format!("500 instances, {statements} statements match")))
}

fn exactly_one_under_faults() -> Result<Outcome, String> {
    let (mut done, mut failed, mut jobs_total) = (0, 0, 0);
    for seed in 0..150u64 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let store = Arc::new(Store::open(dir.path()).map_err(|e| e.to_string())?);
        store.put_employee(&fig2_employee()).map_err(|e| e.to_string())?;
        let clock = ManualClock::new();
        let queue = JobQueue::new(QueueConfig::default(), Arc::new(clock.clone()));
        let p = [0.1, 0.3, 0.5, 0.7, 0.9][seed as usize % 5];
        let handler = PayrollRunHandler::new(store.clone(), Arc::new(RuleSetCatalog::default()))
            .with_faults(Arc::new(RandomFaults::new(seed, p)));
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        let jobs: Vec<_> = (0..rng.gen_range(1..=6u8))
            .map(|m| {
                let run_id = format!("s{seed}-{m}");
                let payload = RunPayrollPayload {
                    period: PayPeriod::new(2022, m + 1).unwrap(),
                    ruleset_id: "FIG2-NG".into(),
                    run_id: RunId::new(&run_id),
                    supersede: false,
                };
                (queue.enqueue(JobKind::RunPayroll, payload).unwrap(), run_id)
            })
            .collect();
        drain(&queue, &handler, &clock);
        for (job_id, run_id) in &jobs {
            let job = queue.poll_status(job_id).map_err(|e| e.to_string())?;
            let n = store.runs().iter().filter(|r| r.run_id.as_str() == run_id).count();
            ensure!(n <= 1, "seed {seed}: {run_id} appended {n} times");
            match job.status {
                JobStatus::Done => {
                    ensure!(n == 1, "seed {seed}: {run_id} Done but not in ledger");
                    done += 1;
                }
                JobStatus::Failed => failed += 1,
                other => return Err(format!("seed {seed}: job left {other:?}")),
            }
        }
        jobs_total += jobs.len();
        let reopened = Store::open(dir.path()).map_err(|e| e.to_string())?;
        ensure!(reopened.runs().len() == store.runs().len(), "seed {seed}: reload lost runs");
    }
    Ok(Outcome::Pass(format!(
        "150 schedules, {jobs_total} jobs: {done} Done with one run each, {failed} Failed after retries"
    )))
}

fn salaried(id: &str) -> Employee {
    Employee::new(
        EmployeeId::new(id).unwrap(),
        "Staff",
        CompensationModel::MonthlySalary { amount: Money::ngn(1_000_000) },
    )
    .unwrap()
}

fn history_oracle(ledger: &[PayrollRun], id: &str, from: PayPeriod, to: PayPeriod) -> Vec<EarningStatement> {
    let superseded: Vec<&RunId> = ledger.iter().filter_map(|r| r.supersedes.as_ref()).collect();
    let mut out: Vec<EarningStatement> = ledger
        .iter()
        .filter(|r| !superseded.contains(&&r.run_id))
        .filter(|r| r.period >= from && r.period <= to)
        .flat_map(|r| r.statements.iter().filter(|s| s.employee_id.as_str() == id).cloned())
        .collect();
    out.sort_by_key(|s| s.period);
    out
}

fn history_retrieval() -> Result<Outcome, String> {
    let ids = ["a", "b", "c", "d"];
    let mut max_runs = 0;
    for seed in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
        for id in ids {
            store.put_employee(&salaried(id)).map_err(|e| e.to_string())?;
        }
        let mut ledger: Vec<PayrollRun> = Vec::new();
        let mut heads: HashMap<PayPeriod, RunId> = HashMap::new();
        for i in 0..rng.gen_range(1..=50) {
            let period = PayPeriod::new(2021, rng.gen_range(1..=12)).unwrap();
            let mut statements = Vec::new();
            for id in ids {
                if rng.gen_bool(0.7) {
                    let mut s = random_statement(&mut rng);
                    s.employee_id = EmployeeId::new(id).unwrap();
                    s.period = period;
                    statements.push(s);
                }
            }
            let run = PayrollRun {
                run_id: RunId::new(format!("run{i}")),
                period,
                ruleset_id: "FIG2-NG".into(),
                status: RunStatus::Done,
                statements,
                warnings: vec![],
                supersedes: heads.get(&period).cloned(),
                created_at: DateTime::UNIX_EPOCH,
            };
            store.append_run(run.clone()).map_err(|e| format!("seed {seed}: {e}"))?;
            heads.insert(period, run.run_id.clone());
            ledger.push(run);
        }
        max_runs = max_runs.max(ledger.len());
        let queries: Vec<_> = (0..12)
            .map(|_| {
                let a = PayPeriod::new(2021, rng.gen_range(1..=12)).unwrap();
                let b = PayPeriod::new(2021, rng.gen_range(1..=12)).unwrap();
                (ids[rng.gen_range(0..4)], a.min(b), a.max(b))
            })
            .collect();
        let answer = |store: &Store| -> Result<Vec<Vec<EarningStatement>>, String> {
            queries
                .iter()
                .map(|(id, from, to)| {
                    store.get_history(&EmployeeId::new(*id).unwrap(), *from, *to).map_err(|e| e.to_string())
                })
                .collect()
        };
        let before = answer(&store)?;
        for ((id, from, to), got) in queries.iter().zip(&before) {
            ensure!(*got == history_oracle(&ledger, id, *from, *to), "seed {seed}: history {id} {from}..{to} differs");
        }
        drop(store);

        // simulated crash mid-append: half a record at the end of the run file
        let mut torn = serde_json::to_value(&ledger[0]).unwrap();
        torn["schema_version"] = 1.into();
        torn["run_id"] = "torn".into();
        let torn = torn.to_string();
        let mut f = OpenOptions::new().append(true).open(dir.path().join(RUNS_FILE)).unwrap();
        f.write_all(&torn.as_bytes()[..torn.len() / 2]).unwrap();
        drop(f);

        let reopened = Store::open(dir.path()).map_err(|e| format!("seed {seed}: reload failed: {e}"))?;
        ensure!(reopened.runs().len() == ledger.len(), "seed {seed}: complete runs lost on reload");
        ensure!(answer(&reopened)? == before, "seed {seed}: answers changed after reload");
    }
    Ok(Outcome::Pass(format!("60 ledgers (up to {max_runs} runs) match oracle; torn tail ignored on reload")))
}

fn traffic_splitting() -> Result<Outcome, String> {
    let started = Instant::now();
    let w = VersionWeights::new([("v1", 70), ("v2", 30)]);
    let clients: Vec<String> = (0..10_000).map(|i| format!("client-{i:05}")).collect();
    let picks: Vec<String> = clients.iter().map(|c| w.route(c).unwrap().to_string()).collect();
    let v1 = picks.iter().filter(|v| *v == "v1").count() as f64 / clients.len() as f64;
    ensure!((v1 - 0.70).abs() <= 0.02, "v1 share {:.4}", v1);
    for (client, first) in clients.iter().zip(&picks) {
        for _ in 0..1_000 {
            ensure!(w.route(client).unwrap() == first, "{client} moved");
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(Outcome::Pass(format!(
        "v1 share {:.2}% over 10000 clients; every client sticky over 1000 repeats",
        v1 * 100.0
    )))
}

/// HTTP against a live gateway whose cache runs on a manual clock.
struct Live {
    handle: ServerHandle,
    clock: ManualClock,
    http: reqwest::blocking::Client,
    _dir: tempfile::TempDir,
}

impl Live {
    fn start() -> Live {
        let dir = tempfile::tempdir().unwrap();
        let mut config = GatewayConfig { store_dir: dir.path().to_path_buf(), ..GatewayConfig::default() };
        config.tokens.insert("admin".into(), Role::Admin);
        config.cache.ttl_secs = 300;
        let clock = ManualClock::new();
        let gateway = Gateway::open_with(&config, Arc::new(clock.clone()), RequestLog::discard()).unwrap();
        let handle = ServerHandle::start(gateway, "127.0.0.1:0").unwrap();
        Live { handle, clock, http: reqwest::blocking::Client::new(), _dir: dir }
    }

    fn call(&self, method: reqwest::Method, path: &str, body: Option<Value>) -> (u16, Option<String>, Vec<u8>) {
        let mut req = self.http.request(method, format!("{}{path}", self.handle.url())).bearer_auth("admin");
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().unwrap();
        let status = resp.status().as_u16();
        let cache = resp.headers().get("x-cache").map(|v| v.to_str().unwrap().to_string());
        (status, cache, resp.bytes().unwrap().to_vec())
    }

    fn run(&self, supersede: bool) -> Result<(), String> {
        let (status, _, body) = self.call(
            reqwest::Method::POST,
            "/v1/payroll/runs",
            Some(json!({"period": "2021-06", "supersede": supersede})),
        );
        ensure!(status == 202, "run request {status}");
        let job = serde_json::from_slice::<Value>(&body).unwrap()["job_id"].as_str().unwrap().to_string();
        for _ in 0..500 {
            let (_, _, body) = self.call(reqwest::Method::GET, &format!("/v1/jobs/{job}"), None);
            let v: Value = serde_json::from_slice(&body).unwrap();
            if v["status"] == "Done" {
                return Ok(());
            }
            ensure!(v["status"] != "Failed", "job failed: {}", v["last_error"]);
            std::thread::sleep(Duration::from_millis(10));
        }
        Err("job did not finish".into())
    }
}

fn cache_behavior() -> Result<Outcome, String> {
    // TTL on a manual clock
    let clock = ManualClock::new();
    let cache = Cache::new(CacheConfig { capacity: 2, default_ttl: Duration::from_secs(60) }, Arc::new(clock.clone()));
    cache.put("k", "v", Duration::from_secs(60));
    clock.advance(Duration::from_secs(59));
    ensure!(cache.get("k").is_some(), "expired early");
    clock.advance(Duration::from_secs(1));
    ensure!(cache.get("k").is_none(), "served after ttl");

    // LRU with capacity 2: put a, put b, get a, put c evicts b
    let ttl = Duration::from_secs(60);
    cache.put("a", "1", ttl);
    cache.put("b", "2", ttl);
    ensure!(cache.get("a").is_some(), "a missing");
    cache.put("c", "3", ttl);
    ensure!(cache.get("b").is_none(), "b not evicted");
    ensure!(cache.get("a").is_some() && cache.get("c").is_some(), "a or c evicted");

    // read-through over HTTP, then invalidation by a rerun
    let live = Live::start();
    let post = |path: &str, body: Value| live.call(reqwest::Method::POST, path, Some(body)).0;
    ensure!(post("/v1/employees", json!({"id": "e1", "name": "Regular Employee",
        "compensation": {"kind": "hourly_rate", "rate": {"amount_minor": 250000, "currency": "NGN"}}})) == 201, "create");
    ensure!(post("/v1/timecards", json!({"employee_id": "e1", "period": "2021-06", "hours": "45.00", "approved": true})) == 201, "card");
    live.run(false)?;
    let path = "/v1/employees/e1/statements/2021-06";
    let (s1, c1, b1) = live.call(reqwest::Method::GET, path, None);
    let (s2, c2, b2) = live.call(reqwest::Method::GET, path, None);
    ensure!((s1, s2) == (200, 200), "statement status {s1}/{s2}");
    ensure!(c1.as_deref() == Some("MISS") && c2.as_deref() == Some("HIT"), "markers {c1:?} {c2:?}");
    ensure!(b1 == b2, "HIT body differs from MISS body");
    let text = serde_json::from_slice::<Value>(&b1).unwrap()["text"].as_str().unwrap().to_string();
    ensure!(text == GOLDEN, "served statement is not the reference text");

    let (_, _, emp) = live.call(reqwest::Method::GET, "/v1/employees/e1", None);
    let version = serde_json::from_slice::<Value>(&emp).unwrap()["version"].clone();
    let (st, _, _) = live.call(
        reqwest::Method::PATCH,
        "/v1/employees/e1",
        Some(json!({"version": version, "effective_period": "2021-06", "description": "raise",
            "update": {"compensation": {"kind": "hourly_rate", "rate": {"amount_minor": 300000, "currency": "NGN"}}}})),
    );
    ensure!(st == 200, "patch {st}");
    live.run(true)?;
    let (_, c3, b3) = live.call(reqwest::Method::GET, path, None);
    ensure!(c3.as_deref() == Some("MISS"), "after rerun got {c3:?}");
    let gross = serde_json::from_slice::<Value>(&b3).unwrap()["statement"]["gross"]["amount_minor"].clone();
    ensure!(gross == 13_500_000, "after rerun gross {gross}");
    let (_, c4, _) = live.call(reqwest::Method::GET, path, None);
    live.clock.advance(Duration::from_secs(300));
    let (_, c5, _) = live.call(reqwest::Method::GET, path, None);
    ensure!(c4.as_deref() == Some("HIT") && c5.as_deref() == Some("MISS"), "ttl over http {c4:?} {c5:?}");
    Ok(Outcome::Pass("ttl, lru trace, HIT byte-identical, rerun invalidates".into()))
}

fn autoscaler() -> Result<Outcome, String> {
    let policy = ScalingPolicy { min_workers: 1, max_workers: 4, high_watermark: 10, low_watermark: 2, cooldown_ticks: 5 };
    let tables: [(&str, usize, Vec<usize>, Vec<usize>); 4] = [
        ("floor", 1, vec![0; 8], vec![1; 8]),
        ("scale up and cap", 2, vec![50; 6], vec![3, 4, 4, 4, 4, 4]),
        ("cooldown", 4, vec![0; 10], vec![4, 4, 4, 4, 3, 3, 3, 3, 3, 2]),
        (
            "mixed",
            1,
            vec![12, 12, 5, 1, 1, 1, 1, 1, 11, 0, 0, 0, 0, 0, 5, 0],
            vec![2, 3, 3, 3, 3, 3, 3, 2, 3, 3, 3, 3, 3, 2, 2, 2],
        ),
    ];
    for (name, start, depths, expected) in &tables {
        let mut a = Autoscaler::new(policy).map_err(|e| e.to_string())?;
        let mut w = *start;
        for (step, (d, want)) in depths.iter().zip(expected).enumerate() {
            w = a.tick(*d, w);
            ensure!(w == *want, "{name} step {step}: depth {d} gave {w}, expected {want}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut a = Autoscaler::new(policy).map_err(|e| e.to_string())?;
    let mut w = 1;
    for _ in 0..10_000 {
        w = a.tick(rng.gen_range(0..40), w);
        ensure!((1..=4).contains(&w), "left bounds: {w}");
    }
    Ok(Outcome::Pass(format!("{} scripted tables match; 10000 random ticks in [1,4]", tables.len())))
}

fn benchmark() -> Result<Outcome, String> {
    let started = Instant::now();
    let bench = |workers| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_bench(BenchParams { employees: 10_000, workers, seed: 42, periods: DEFAULT_PERIODS }, dir.path())
            .map_err(|e| e.to_string())
    };
    let one = bench(1)?;
    let four = bench(4)?;
    ensure!(one.statements == 10_000 * DEFAULT_PERIODS as usize, "{} statements", one.statements);
    ensure!(one.ledger_digest == four.ledger_digest, "digests differ: {} vs {}", one.ledger_digest, four.ledger_digest);
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let timing = format!("W1 {:.0} ms, W4 {:.0} ms, ratio {:.2}", one.wall_ms, four.wall_ms, one.wall_ms / four.wall_ms);
    if cores < 4 {
        return Ok(Outcome::Skip(format!(
            "digests equal ({}...); speed check needs >= 4 cores, this machine has {cores}; {timing}",
            &one.ledger_digest[..12]
        )));
    }
    ensure!(four.wall_ms <= one.wall_ms / 1.5, "W4 not 1.5x faster: {timing}");
    Ok(Outcome::Pass(format!("digests equal; {timing}")))
}
