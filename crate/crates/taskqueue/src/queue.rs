//! In-process job queue with leases, bounded retries and backoff.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::Duration;

use payroll_core::clock::{Clock, SystemClock};
use payroll_core::{PayPeriod, RunId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(String);

impl JobId {
    pub fn new(id: impl Into<String>) -> Self {
        JobId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobKind {
    RunPayroll,
}

/// `run_id` is assigned before enqueue and doubles as the idempotency key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunPayrollPayload {
    pub period: PayPeriod,
    pub ruleset_id: String,
    pub run_id: RunId,
    /// Replace the period's current run instead of failing with `RunExists`.
    #[serde(default)]
    pub supersede: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(&self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: JobId,
    pub kind: JobKind,
    pub payload: RunPayrollPayload,
    pub status: JobStatus,
    pub attempts: u32,
    pub max_attempts: u32,
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueueError {
    #[error("queue is full ({capacity} jobs waiting)")]
    QueueFull { capacity: usize },
    #[error("job {0} not found")]
    NotFound(JobId),
}

impl QueueError {
    pub fn code(&self) -> &'static str {
        match self {
            QueueError::QueueFull { .. } => "QueueFull",
            QueueError::NotFound(_) => "NotFound",
        }
    }
}

/// Why an execution did not complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JobFailure {
    /// Worker crashed or hit a transient error; the job is redelivered.
    Retryable(String),
    /// Retrying cannot help.
    Permanent(String),
}

#[derive(Debug, Clone)]
pub struct QueueConfig {
    /// Maximum number of queued (not yet running) jobs.
    pub capacity: usize,
    pub max_attempts: u32,
    /// Delay before attempt `n + 1`, indexed by attempts made; the last
    /// entry repeats.
    pub backoff: Vec<Duration>,
}

impl Default for QueueConfig {
    fn default() -> Self {
        QueueConfig {
            capacity: 1024,
            max_attempts: 3,
            backoff: vec![
                Duration::ZERO,
                Duration::from_millis(100),
                Duration::from_millis(400),
            ],
        }
    }
}

impl QueueConfig {
    fn delay_after(&self, attempts: u32) -> Duration {
        self.backoff
            .get(attempts as usize)
            .or(self.backoff.last())
            .copied()
            .unwrap_or_default()
    }
}

/// A job handed to exactly one worker.
#[derive(Debug, Clone)]
pub struct Lease {
    pub job_id: JobId,
    pub kind: JobKind,
    pub payload: RunPayrollPayload,
    /// 1-based attempt number of this execution.
    pub attempt: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueMetrics {
    pub depth: usize,
    pub workers: usize,
    pub running: usize,
    pub jobs_done: u64,
    pub jobs_failed: u64,
}

struct State {
    jobs: HashMap<JobId, Job>,
    ready: VecDeque<JobId>,
    /// (due time, job) waiting out a retry delay
    delayed: Vec<(Duration, JobId)>,
    running: usize,
    lease_limit: usize,
    workers: usize,
    next_id: u64,
    done: u64,
    failed: u64,
}

impl State {
    fn depth(&self) -> usize {
        self.ready.len() + self.delayed.len()
    }

    fn promote_due(&mut self, now: Duration) {
        if self.delayed.is_empty() {
            return;
        }
        self.delayed.sort_by_key(|(due, _)| *due);
        let due = self.delayed.partition_point(|(d, _)| *d <= now);
        for (_, id) in self.delayed.drain(..due) {
            self.ready.push_back(id);
        }
    }
}

pub struct JobQueue {
    config: QueueConfig,
    clock: Arc<dyn Clock>,
    state: Mutex<State>,
    wakeup: Condvar,
}

impl Default for JobQueue {
    fn default() -> Self {
        JobQueue::new(QueueConfig::default(), Arc::new(SystemClock::default()))
    }
}

impl JobQueue {
    pub fn new(config: QueueConfig, clock: Arc<dyn Clock>) -> Self {
        JobQueue {
            config,
            clock,
            state: Mutex::new(State {
                jobs: HashMap::new(),
                ready: VecDeque::new(),
                delayed: Vec::new(),
                running: 0,
                lease_limit: usize::MAX,
                workers: 0,
                next_id: 1,
                done: 0,
                failed: 0,
            }),
            wakeup: Condvar::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Queues a job and returns immediately.
    pub fn enqueue(&self, kind: JobKind, payload: RunPayrollPayload) -> Result<JobId, QueueError> {
        let mut st = self.lock();
        if st.depth() >= self.config.capacity {
            return Err(QueueError::QueueFull { capacity: self.config.capacity });
        }
        let job_id = JobId(format!("job-{:08}", st.next_id));
        st.next_id += 1;
        st.jobs.insert(
            job_id.clone(),
            Job {
                job_id: job_id.clone(),
                kind,
                payload,
                status: JobStatus::Queued,
                attempts: 0,
                max_attempts: self.config.max_attempts,
                last_error: None,
            },
        );
        st.ready.push_back(job_id.clone());
        drop(st);
        self.wakeup.notify_one();
        Ok(job_id)
    }

    pub fn poll_status(&self, job_id: &JobId) -> Result<Job, QueueError> {
        self.lock()
            .jobs
            .get(job_id)
            .cloned()
            .ok_or_else(|| QueueError::NotFound(job_id.clone()))
    }

    /// Leases the next due job, if any and if the running limit allows.
    pub fn try_lease(&self) -> Option<Lease> {
        let mut st = self.lock();
        self.lease_locked(&mut st)
    }

    fn lease_locked(&self, st: &mut State) -> Option<Lease> {
        st.promote_due(self.clock.now());
        if st.running >= st.lease_limit {
            return None;
        }
        let job_id = st.ready.pop_front()?;
        st.running += 1;
        let job = st.jobs.get_mut(&job_id).expect("ready job is tracked");
        job.status = JobStatus::Running;
        job.attempts += 1;
        Some(Lease {
            job_id,
            kind: job.kind,
            payload: job.payload.clone(),
            attempt: job.attempts,
        })
    }

    /// Blocks up to `timeout` for a job.
    pub fn lease_timeout(&self, timeout: Duration) -> Option<Lease> {
        let mut st = self.lock();
        if let Some(lease) = self.lease_locked(&mut st) {
            return Some(lease);
        }
        // wake early enough to pick up a retry that becomes due
        let now = self.clock.now();
        let wait = st
            .delayed
            .iter()
            .map(|(due, _)| due.saturating_sub(now))
            .min()
            .map_or(timeout, |d| d.min(timeout).max(Duration::from_millis(1)));
        let (mut st, _) = self
            .wakeup
            .wait_timeout(st, wait)
            .unwrap_or_else(|e| e.into_inner());
        self.lease_locked(&mut st)
    }

    /// Records the outcome of a leased execution.
    pub fn complete(&self, lease: &Lease, outcome: Result<(), JobFailure>) -> JobStatus {
        let mut st = self.lock();
        st.running -= 1;
        let now = self.clock.now();
        let job = st.jobs.get_mut(&lease.job_id).expect("leased job is tracked");
        let status = match outcome {
            Ok(()) => JobStatus::Done,
            Err(JobFailure::Retryable(msg)) if job.attempts < job.max_attempts => {
                job.last_error = Some(msg);
                JobStatus::Queued
            }
            Err(JobFailure::Retryable(msg)) | Err(JobFailure::Permanent(msg)) => {
                job.last_error = Some(msg);
                JobStatus::Failed
            }
        };
        job.status = status;
        let attempts = job.attempts;
        match status {
            JobStatus::Done => st.done += 1,
            JobStatus::Failed => st.failed += 1,
            _ => {
                let due = now + self.config.delay_after(attempts);
                st.delayed.push((due, lease.job_id.clone()));
            }
        }
        drop(st);
        self.wakeup.notify_all();
        status
    }

    /// Caps how many jobs may be running at once (the live worker count).
    pub fn set_lease_limit(&self, workers: usize) {
        let mut st = self.lock();
        st.lease_limit = workers;
        st.workers = workers;
        drop(st);
        self.wakeup.notify_all();
    }

    pub fn depth(&self) -> usize {
        self.lock().depth()
    }

    pub fn metrics(&self) -> QueueMetrics {
        let st = self.lock();
        QueueMetrics {
            depth: st.depth(),
            workers: st.workers,
            running: st.running,
            jobs_done: st.done,
            jobs_failed: st.failed,
        }
    }

    /// Earliest due time among jobs waiting out a retry delay.
    pub fn next_retry_due(&self) -> Option<Duration> {
        self.lock().delayed.iter().map(|(due, _)| *due).min()
    }

    pub fn now(&self) -> Duration {
        self.clock.now()
    }

    /// True when no job is queued, delayed or running.
    pub fn is_idle(&self) -> bool {
        let st = self.lock();
        st.depth() == 0 && st.running == 0
    }
}
