use payroll_gateway::{Gateway, GatewayConfig, Role, ServerHandle};
use serde_json::Value;

const GOLDEN: &str = include_str!("../../core/tests/golden/fig2_statement.txt");
const ADMIN: &str = "admin-secret";

struct Server {
    handle: ServerHandle,
    _dir: tempfile::TempDir,
}

fn server() -> Server {
    let dir = tempfile::tempdir().unwrap();
    let mut config = GatewayConfig { store_dir: dir.path().join("store"), ..GatewayConfig::default() };
    config.tokens.insert(ADMIN.into(), Role::Admin);
    config.tokens.insert("e1".into(), "employee:e1".parse().unwrap());
    let handle = ServerHandle::start(Gateway::open(&config).unwrap(), "127.0.0.1:0").unwrap();
    Server { handle, _dir: dir }
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli_as(s: &Server, token: &str, args: &[&str]) -> Out {
    let url = s.handle.url();
    let mut argv = vec!["payroll", "--server", &url, "--token", token];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = payroll_cli::cli_dispatch(argv, &mut out, &mut err);
    Out { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn cli(s: &Server, args: &[&str]) -> Out {
    cli_as(s, ADMIN, args)
}

/// The output is a single JSON document that re-serializes to itself.
fn json_roundtrip(out: &Out) -> Value {
    let line = out.stdout.trim_end_matches('\n');
    assert!(!line.contains('\n'), "one line expected: {line}");
    let v: Value = serde_json::from_str(line).unwrap();
    assert_eq!(serde_json::to_string(&v).unwrap(), line);
    v
}

fn seed_fig2(s: &Server) {
    let r = cli(s, &["employee", "create", "--id", "e1", "--name", "Regular Employee", "--hourly", "2500.00"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = cli(s, &["timecard", "submit", "--employee", "e1", "--period", "2021-06", "--hours", "45.00"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn figure_two_statement_from_the_command_line() {
    let s = server();
    seed_fig2(&s);
    let r = cli(&s, &["payroll", "run", "--period", "2021-06"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("Done"));
    let r = cli(&s, &["statement", "get", "--employee", "e1", "--period", "2021-06"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout, GOLDEN);
    let r = cli_as(&s, "e1", &["statement", "get", "--employee", "e1", "--period", "2021-06"]);
    assert_eq!(r.stdout, GOLDEN);
    let r = cli(&s, &["history", "--employee", "e1", "--from", "2021-01", "--to", "2021-12"]);
    assert_eq!(r.stdout, GOLDEN);
}

#[test]
fn unknown_job_is_not_found() {
    let s = server();
    let r = cli(&s, &["job", "status", "--id", "unknown"]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.contains("NotFound"), "{}", r.stderr);
    let r = cli(&s, &["--json", "job", "status", "--id", "unknown"]);
    assert_ne!(r.code, 0);
    assert_eq!(json_roundtrip(&r)["code"], "NotFound");
}

#[test]
fn second_run_reports_run_exists() {
    let s = server();
    seed_fig2(&s);
    assert_eq!(cli(&s, &["payroll", "run", "--period", "2021-06"]).code, 0);
    let r = cli(&s, &["payroll", "run", "--period", "2021-06"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("RunExists"), "{}", r.stderr);
    let r = cli(&s, &["payroll", "run", "--period", "2021-06", "--supersede"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn every_subcommand_has_json_output() {
    let s = server();
    let j = |args: &[&str]| {
        let mut argv = vec!["--json"];
        argv.extend_from_slice(args);
        let r = cli(&s, &argv);
        assert_eq!(r.code, 0, "{args:?}: {} {}", r.stdout, r.stderr);
        json_roundtrip(&r)
    };
    let emp = j(&["employee", "create", "--id", "e1", "--name", "Regular Employee", "--hourly", "2500.00"]);
    assert_eq!(emp["compensation"]["rate"]["amount_minor"], 250000);
    assert_eq!(j(&["employee", "get", "--id", "e1"])["version"], 1);
    j(&["timecard", "submit", "--employee", "e1", "--period", "2021-06", "--hours", "45.00"]);
    let run = j(&["payroll", "run", "--period", "2021-06"]);
    assert_eq!(run["status"], "Done");
    let run_id = run["run_id"].as_str().unwrap().to_string();
    assert_eq!(j(&["payroll", "show", "--run-id", &run_id])["period"], "2021-06");
    let job_id = run["job_id"].as_str().unwrap().to_string();
    assert_eq!(j(&["job", "status", "--id", &job_id])["attempts"], 1);
    let stmt = j(&["statement", "get", "--employee", "e1", "--period", "2021-06"]);
    assert_eq!(stmt["text"], GOLDEN);
    assert_eq!(stmt["statement"]["net"]["amount_minor"], 10_075_000);
    let hist = j(&["history", "--employee", "e1", "--from", "2021-06", "--to", "2021-06"]);
    assert_eq!(hist["statements"].as_array().unwrap().len(), 1);
    let changed = j(&[
        "employee", "change", "--id", "e1", "--effective", "2021-07", "--description", "raise", "--hourly", "3000.00",
    ]);
    assert_eq!(changed["version"], 2);
    let t = j(&["traffic", "set", "v1=70", "v2=30"]);
    assert_eq!(t["weights"]["v2"], 30);
    assert_eq!(j(&["traffic", "get"])["weights"]["v1"], 70);
    assert!(j(&["metrics"])["requests"]["total"].as_u64().unwrap() > 5);
    let bench = j(&["bench", "--employees", "0", "--workers", "1"]);
    assert_eq!((bench["statements"].as_u64(), bench["throughput"].as_f64()), (Some(0), Some(0.0)));
    let queued = j(&["payroll", "run", "--period", "2021-07", "--no-wait"]);
    assert!(queued["job_id"].is_string());
}

#[test]
fn bad_input_and_permissions() {
    let s = server();
    let r = cli(&s, &["traffic", "set", "v1=-1"]);
    assert!(r.stderr.contains("InvalidWeights"), "{}", r.stderr);
    assert_eq!(cli(&s, &["traffic", "set", "v1"]).code, 2);
    assert_eq!(cli(&s, &["statement", "get", "--employee", "e1", "--period", "June"]).code, 2);
    assert_eq!(cli(&s, &["employee", "create", "--id", "e1", "--name", "x"]).code, 2);
    assert_eq!(cli(&s, &["frobnicate"]).code, 2);
    let r = cli_as(&s, "wrong", &["metrics"]);
    assert!(r.stderr.contains("Unauthenticated"));
    let r = cli_as(&s, "e1", &["metrics"]);
    assert!(r.stderr.contains("Forbidden"));
    let mut out = Vec::new();
    assert_eq!(payroll_cli::cli_dispatch(["payroll", "--help"], &mut out, &mut Vec::new()), 0);
    assert!(String::from_utf8(out).unwrap().contains("bench"));
}

#[test]
fn unreachable_server_is_a_transport_error() {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = payroll_cli::cli_dispatch(
        ["payroll", "--server", "http://127.0.0.1:9", "job", "status", "--id", "x"],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 3);
}
