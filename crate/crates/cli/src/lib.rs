//! `payroll` command-line client, server launcher and benchmark.
//!
//! Remote commands talk to the gateway over HTTP. With `--json` every
//! command prints exactly one JSON document on stdout, including errors
//! (`{"code": .., "message": ..}`).

pub mod bench;
pub mod client;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use payroll_core::{render_statement, Currency, EarningStatement, Money, PayPeriod};
use payroll_gateway::{Gateway, ServerHandle};
use serde_json::{json, Value};

use crate::bench::{run_bench, BenchParams, DEFAULT_PERIODS};
use crate::client::ApiClient;
use crate::config::Config;
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "payroll", version, about = "Payroll service client and server")]
pub struct Cli {
    /// TOML config file (also `PAYROLL_CONFIG`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Gateway base URL.
    #[arg(long, global = true)]
    pub server: Option<String>,
    /// Bearer token.
    #[arg(long, global = true)]
    pub token: Option<String>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the gateway, queue workers and autoscaler.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
    #[command(subcommand)]
    Employee(EmployeeCmd),
    #[command(subcommand)]
    Timecard(TimecardCmd),
    #[command(subcommand)]
    Payroll(PayrollCmd),
    #[command(subcommand)]
    Job(JobCmd),
    #[command(subcommand)]
    Statement(StatementCmd),
    /// Statements for an employee across a period range.
    History {
        #[arg(long)]
        employee: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    #[command(subcommand)]
    Traffic(TrafficCmd),
    /// Queue, cache and request counters.
    Metrics,
    /// Time payroll jobs for synthetic employees at a fixed worker count.
    Bench {
        #[arg(long, default_value_t = 10_000)]
        employees: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PERIODS)]
        periods: u32,
        /// Store directory to fill; a temporary one by default.
        #[arg(long)]
        store_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Pay {
    /// Hourly rate in naira, e.g. 2500.00
    #[arg(long)]
    pub hourly: Option<String>,
    /// Monthly salary in naira
    #[arg(long)]
    pub monthly: Option<String>,
    /// Annual contract amount in naira
    #[arg(long)]
    pub annual: Option<String>,
}

impl Pay {
    fn to_json(&self) -> Result<Value, CliError> {
        let money = |s: &str| -> Result<Value, CliError> {
            let m = Money::parse_major(s, Currency::NGN)
                .map_err(|e| CliError::Usage(format!("amount {s:?}: {e}")))?;
            Ok(serde_json::to_value(m).expect("money serializes"))
        };
        Ok(match (&self.hourly, &self.monthly, &self.annual) {
            (Some(r), _, _) => json!({"kind": "hourly_rate", "rate": money(r)?}),
            (_, Some(a), _) => json!({"kind": "monthly_salary", "amount": money(a)?}),
            (_, _, Some(a)) => json!({"kind": "annual_contract", "amount": money(a)?}),
            _ => return Err(CliError::Usage("one of --hourly, --monthly, --annual is required".into())),
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum EmployeeCmd {
    Create {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: String,
        #[command(flatten)]
        pay: Pay,
    },
    Get {
        #[arg(long)]
        id: String,
    },
    /// Record a compensation or status change.
    Change {
        #[arg(long)]
        id: String,
        #[arg(long)]
        effective: String,
        #[arg(long)]
        description: String,
        #[arg(long)]
        hourly: Option<String>,
        #[arg(long)]
        monthly: Option<String>,
        #[arg(long)]
        annual: Option<String>,
        /// active or terminated
        #[arg(long, conflicts_with_all = ["hourly", "monthly", "annual"])]
        status: Option<String>,
        /// Version the change is based on; the current one when omitted.
        #[arg(long)]
        version: Option<u64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TimecardCmd {
    Submit {
        #[arg(long)]
        employee: String,
        #[arg(long)]
        period: String,
        /// Decimal hours in quarter steps, e.g. 45.00
        #[arg(long)]
        hours: String,
        /// Submit without approval.
        #[arg(long)]
        unapproved: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum PayrollCmd {
    /// Queue a run and wait for its job to finish.
    Run {
        #[arg(long)]
        period: String,
        #[arg(long, default_value = payroll_core::FIG2_NG)]
        ruleset: String,
        /// Replace the period's current run.
        #[arg(long)]
        supersede: bool,
        /// Return as soon as the job is queued.
        #[arg(long)]
        no_wait: bool,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
    },
    /// Show a stored run.
    Show {
        #[arg(long)]
        run_id: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum JobCmd {
    Status {
        #[arg(long)]
        id: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatementCmd {
    Get {
        #[arg(long)]
        employee: String,
        #[arg(long)]
        period: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum TrafficCmd {
    /// e.g. `traffic set v1=70 v2=30`
    Set {
        #[arg(required = true)]
        weights: Vec<String>,
    },
    Get,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let as_json = cli.json;
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            if as_json {
                let _ = writeln!(out, "{}", json!({"code": e.code(), "message": e.to_string()}));
            } else {
                let _ = writeln!(err, "error: {e}");
            }
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let path = cli.config.clone().or_else(|| std::env::var_os("PAYROLL_CONFIG").map(PathBuf::from));
    let mut config = match path {
        Some(p) => Config::load(&p)?,
        None => Config::default(),
    };
    config.apply_env(|k| std::env::var(k).ok())?;
    if let Some(s) = &cli.server {
        config.client.server = s.clone();
    }
    if let Some(t) = &cli.token {
        config.client.token = Some(t.clone());
    }
    Ok(config)
}

fn period(raw: &str) -> Result<String, CliError> {
    raw.parse::<PayPeriod>()
        .map(|p| p.to_string())
        .map_err(|e| CliError::Usage(format!("period {raw:?}: {e}")))
}

fn emit(out: &mut dyn Write, as_json: bool, value: &Value, text: impl FnOnce(&Value) -> String) -> Result<(), CliError> {
    if as_json {
        writeln!(out, "{value}")?;
    } else {
        write!(out, "{}", text(value))?;
    }
    Ok(())
}

fn str_of(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn money_text(v: &Value) -> String {
    serde_json::from_value::<Money>(v.clone()).map_or_else(|_| v.to_string(), |m| m.to_major_string())
}

fn employee_text(e: &Value) -> String {
    let comp = &e["compensation"];
    let amount = comp.get("rate").or_else(|| comp.get("amount")).map(money_text).unwrap_or_default();
    format!(
        "{} {} (version {}, {})\n  {} {}\n",
        str_of(&e["id"]),
        str_of(&e["name"]),
        e["version"],
        str_of(&e["status"]),
        str_of(&comp["kind"]),
        amount
    )
}

fn job_text(j: &Value) -> String {
    let mut s = format!("{} {} (attempts {}/{})\n", str_of(&j["job_id"]), str_of(&j["status"]), j["attempts"], j["max_attempts"]);
    if let Some(e) = j["last_error"].as_str() {
        s.push_str(&format!("  last error: {e}\n"));
    }
    s
}

/// Failed job errors are stored as `Code: message`.
fn job_failure(job: &Value) -> CliError {
    let last = job["last_error"].as_str().unwrap_or("job failed");
    let (code, message) = match last.split_once(": ") {
        Some((c, m)) if !c.is_empty() && c.chars().all(|ch| ch.is_ascii_alphanumeric()) => (c, m),
        _ => ("JobFailed", last),
    };
    CliError::Api { status: 200, code: code.to_string(), message: message.to_string() }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(&cli)?;
    let as_json = cli.json;
    let client = || ApiClient::new(&config.client.server, config.client.token.clone());
    match cli.command {
        Command::Serve { listen } => {
            let listen = listen.unwrap_or_else(|| config.server.listen.clone());
            let gateway = Gateway::open(&config.server).map_err(|e| CliError::Config(e.to_string()))?;
            let handle = ServerHandle::start(gateway, &listen).map_err(|e| CliError::Other(e.to_string()))?;
            emit(out, as_json, &json!({"listening": handle.url()}), |_| format!("listening on {}\n", handle.url()))?;
            out.flush()?;
            handle.join()?;
            Ok(())
        }
        Command::Employee(cmd) => {
            let c = client()?;
            let emp = match cmd {
                EmployeeCmd::Create { id, name, pay } => {
                    c.post("/v1/employees", &json!({"id": id, "name": name, "compensation": pay.to_json()?}))?
                }
                EmployeeCmd::Get { id } => c.get(&format!("/v1/employees/{id}"))?,
                EmployeeCmd::Change { id, effective, description, hourly, monthly, annual, status, version } => {
                    let update = match status {
                        Some(s) => json!({"status": s}),
                        None => json!({"compensation": Pay { hourly, monthly, annual }.to_json()?}),
                    };
                    let version = match version {
                        Some(v) => json!(v),
                        None => c.get(&format!("/v1/employees/{id}"))?["version"].clone(),
                    };
                    c.patch(
                        &format!("/v1/employees/{id}"),
                        &json!({"version": version, "effective_period": period(&effective)?, "description": description, "update": update}),
                    )?
                }
            };
            emit(out, as_json, &emp, employee_text)
        }
        Command::Timecard(TimecardCmd::Submit { employee, period: p, hours, unapproved }) => {
            let card = client()?.post(
                "/v1/timecards",
                &json!({"employee_id": employee, "period": period(&p)?, "hours": hours, "approved": !unapproved}),
            )?;
            emit(out, as_json, &card, |c| {
                format!("time card stored for {} {}\n", str_of(&c["employee_id"]), str_of(&c["period"]))
            })
        }
        Command::Payroll(PayrollCmd::Run { period: p, ruleset, supersede, no_wait, timeout_secs }) => {
            let c = client()?;
            let accepted = c.post(
                "/v1/payroll/runs",
                &json!({"period": period(&p)?, "ruleset_id": ruleset, "supersede": supersede}),
            )?;
            if no_wait {
                return emit(out, as_json, &accepted, |a| {
                    format!("queued {} as {}\n", str_of(&a["run_id"]), str_of(&a["job_id"]))
                });
            }
            let job_id = str_of(&accepted["job_id"]);
            let job = wait_for_job(&c, &job_id, Duration::from_secs(timeout_secs))?;
            if job["status"] == "Failed" {
                return Err(job_failure(&job));
            }
            let mut result = job.clone();
            result["run_id"] = accepted["run_id"].clone();
            emit(out, as_json, &result, |r| format!("run {} {}", str_of(&r["run_id"]), job_text(r)))
        }
        Command::Payroll(PayrollCmd::Show { run_id }) => {
            let run = client()?.get(&format!("/v1/payroll/runs/{run_id}"))?;
            emit(out, as_json, &run, |r| {
                let mut s = format!(
                    "{} {} {} ({} statements{})\n",
                    str_of(&r["run_id"]),
                    str_of(&r["period"]),
                    str_of(&r["status"]),
                    r["statements"].as_array().map_or(0, Vec::len),
                    if r["superseded"] == true { ", superseded" } else { "" }
                );
                for w in r["warnings"].as_array().into_iter().flatten() {
                    s.push_str(&format!("  warning: {}\n", str_of(w)));
                }
                s
            })
        }
        Command::Job(JobCmd::Status { id }) => {
            let job = client()?.get(&format!("/v1/jobs/{id}"))?;
            emit(out, as_json, &job, job_text)
        }
        Command::Statement(StatementCmd::Get { employee, period: p }) => {
            let body = client()?.get(&format!("/v1/employees/{employee}/statements/{}", period(&p)?))?;
            emit(out, as_json, &body, |b| str_of(&b["text"]))
        }
        Command::History { employee, from, to } => {
            let body = client()?.get(&format!(
                "/v1/employees/{employee}/history?from={}&to={}",
                period(&from)?,
                period(&to)?
            ))?;
            emit(out, as_json, &body, |b| {
                let stmts: Vec<EarningStatement> =
                    serde_json::from_value(b["statements"].clone()).unwrap_or_default();
                if stmts.is_empty() {
                    return "no statements in range\n".into();
                }
                stmts.iter().map(render_statement).collect::<Vec<_>>().join("\n")
            })
        }
        Command::Traffic(cmd) => {
            let c = client()?;
            let body = match cmd {
                TrafficCmd::Set { weights } => {
                    let mut map = serde_json::Map::new();
                    for w in &weights {
                        let (label, n) = w
                            .split_once('=')
                            .ok_or_else(|| CliError::Usage(format!("expected label=weight, got {w:?}")))?;
                        let n: i64 = n.parse().map_err(|_| CliError::Usage(format!("weight {n:?} is not an integer")))?;
                        map.insert(label.to_string(), json!(n));
                    }
                    c.put("/v1/admin/traffic", &json!({"weights": map}))?
                }
                TrafficCmd::Get => c.get("/v1/admin/traffic")?,
            };
            emit(out, as_json, &body, |b| {
                let parts: Vec<String> = b["weights"]
                    .as_object()
                    .into_iter()
                    .flatten()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect();
                format!("{}\n", parts.join(" "))
            })
        }
        Command::Metrics => {
            let m = client()?.get("/v1/metrics")?;
            emit(out, as_json, &m, |m| format!("{}\n", serde_json::to_string_pretty(m).expect("json")))
        }
        Command::Bench { employees, workers, seed, periods, store_dir } => {
            let params = BenchParams { employees, workers, seed, periods };
            let report = match store_dir {
                Some(dir) => run_bench(params, &dir)?,
                None => {
                    let tmp = tempfile::tempdir()?;
                    run_bench(params, tmp.path())?
                }
            };
            let value = serde_json::to_value(&report).expect("report serializes");
            emit(out, as_json, &value, |_| {
                format!(
                    "employees {}  workers {}  periods {}  statements {}\nwall {:.1} ms  throughput {:.0} statements/s\ndigest {}\n",
                    report.employees,
                    report.workers,
                    report.periods,
                    report.statements,
                    report.wall_ms,
                    report.throughput,
                    report.ledger_digest
                )
            })
        }
    }
}

/// Polls a job from 100 ms up to 1 s between attempts until it is terminal.
pub fn wait_for_job(client: &ApiClient, job_id: &str, timeout: Duration) -> Result<Value, CliError> {
    let deadline = Instant::now() + timeout;
    let mut delay = Duration::from_millis(100);
    loop {
        let job = client.get(&format!("/v1/jobs/{job_id}"))?;
        if job["status"] == "Done" || job["status"] == "Failed" {
            return Ok(job);
        }
        if Instant::now() >= deadline {
            return Err(CliError::Other(format!("job {job_id} still {} after {timeout:?}", str_of(&job["status"]))));
        }
        std::thread::sleep(delay);
        delay = (delay * 2).min(Duration::from_secs(1));
    }
}
