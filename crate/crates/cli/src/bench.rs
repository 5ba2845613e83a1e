//! Throughput benchmark: synthetic employees paid through the task queue.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use payroll_core::{
    render_statement, CompensationModel, Employee, EmployeeId, Money, PayPeriod, QuarterHours,
    RuleSetCatalog, RunId, TimeCard, FIG2_NG,
};
use payroll_datastore::Store;
use payroll_taskqueue::{
    JobKind, JobQueue, JobStatus, PayrollRunHandler, QueueConfig, RunPayrollPayload, WorkerPool,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_PERIODS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchParams {
    pub employees: usize,
    pub workers: usize,
    pub seed: u64,
    /// One payroll job per period, starting 2021-01.
    pub periods: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub employees: usize,
    pub workers: usize,
    pub periods: u32,
    pub statements: usize,
    pub wall_ms: f64,
    /// statements per second
    pub throughput: f64,
    /// sha256 over the statement text of every run, in period order
    pub ledger_digest: String,
}

/// Hourly staff with rates of N1,500-N3,500 and 30-60 hours a month.
pub fn synthetic_workforce(
    employees: usize,
    periods: &[PayPeriod],
    seed: u64,
) -> (Vec<Employee>, Vec<TimeCard>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut staff = Vec::with_capacity(employees);
    let mut cards = Vec::with_capacity(employees * periods.len());
    for i in 0..employees {
        let id = EmployeeId::new(format!("emp-{i:06}")).expect("valid id");
        let rate = Money::ngn(rng.gen_range(1_500..=3_500) * 100);
        let emp = Employee::new(id.clone(), format!("Employee {i}"), CompensationModel::HourlyRate { rate })
            .expect("valid employee");
        staff.push(emp);
        for &period in periods {
            cards.push(TimeCard {
                employee_id: id.clone(),
                period,
                hours: QuarterHours::new(rng.gen_range(30 * 4..=60 * 4)),
                approved: true,
                verified: true,
            });
        }
    }
    (staff, cards)
}

pub fn bench_periods(n: u32) -> Vec<PayPeriod> {
    let mut p = PayPeriod::new(2021, 1).expect("valid period");
    (0..n)
        .map(|_| {
            let cur = p;
            p = p.next();
            cur
        })
        .collect()
}

/// Seeds a fresh store in `dir`, then times the payroll jobs alone.
pub fn run_bench(params: BenchParams, dir: &Path) -> Result<BenchReport, CliError> {
    if params.workers == 0 {
        return Err(CliError::Usage("workers must be at least 1".into()));
    }
    let store = Arc::new(Store::open(dir).map_err(|e| CliError::Other(e.to_string()))?);
    if !store.employees().is_empty() {
        return Err(CliError::Usage(format!("bench needs an empty store, {} is not", dir.display())));
    }
    let periods = bench_periods(params.periods);
    let (staff, cards) = synthetic_workforce(params.employees, &periods, params.seed);
    store.put_employees(&staff).map_err(|e| CliError::Other(e.to_string()))?;
    store.put_timecards(&cards).map_err(|e| CliError::Other(e.to_string()))?;

    let queue = Arc::new(JobQueue::new(
        QueueConfig { capacity: periods.len().max(1), ..QueueConfig::default() },
        Arc::new(payroll_core::clock::SystemClock::default()),
    ));
    let handler = PayrollRunHandler::new(store.clone(), Arc::new(RuleSetCatalog::default()));
    let pool = WorkerPool::start(queue.clone(), Arc::new(handler), params.workers);

    let started = Instant::now();
    let jobs = periods
        .iter()
        .map(|&period| {
            queue.enqueue(
                JobKind::RunPayroll,
                RunPayrollPayload {
                    period,
                    ruleset_id: FIG2_NG.into(),
                    run_id: RunId::new(format!("bench-{period}")),
                    supersede: false,
                },
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Other(e.to_string()))?;
    pool.wait_idle();
    let wall_ms = started.elapsed().as_secs_f64() * 1000.0;
    pool.shutdown();

    for job in &jobs {
        let job = queue.poll_status(job).map_err(|e| CliError::Other(e.to_string()))?;
        if job.status != JobStatus::Done {
            return Err(CliError::Other(format!("bench job {} ended {:?}: {:?}", job.job_id, job.status, job.last_error)));
        }
    }

    let mut hasher = Sha256::new();
    let mut statements = 0;
    for &period in &periods {
        let run = store
            .current_run(period)
            .ok_or_else(|| CliError::Other(format!("no run for {period}")))?;
        for stmt in &run.statements {
            hasher.update(render_statement(stmt).as_bytes());
            statements += 1;
        }
    }
    let throughput = if statements == 0 || wall_ms <= 0.0 {
        0.0
    } else {
        statements as f64 / (wall_ms / 1000.0)
    };
    Ok(BenchReport {
        employees: params.employees,
        workers: params.workers,
        periods: params.periods,
        statements,
        wall_ms,
        throughput,
        ledger_digest: hex::encode(hasher.finalize()),
    })
}
