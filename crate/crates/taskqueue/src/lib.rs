//! At-least-once payroll job execution.
//!
//! Jobs are queued in memory and leased to one worker at a time. A failed
//! execution is retried with backoff up to `max_attempts`. Exactly-once
//! effects come from the run id: the handler checks the ledger before
//! writing, so a redelivered job never appends a second run.

pub mod autoscale;
pub mod fault;
pub mod handler;
pub mod pool;
pub mod queue;

pub use autoscale::{Autoscaler, PolicyError, ScalingPolicy};
pub use fault::{FaultInjector, FaultPoint, NoFaults, RandomFaults, ScriptedFaults};
pub use handler::{AppendHook, JobHandler, PayrollRunHandler};
pub use pool::{drain, execute, WorkerPool};
pub use queue::{
    Job, JobFailure, JobId, JobKind, JobQueue, JobStatus, Lease, QueueConfig, QueueError,
    QueueMetrics, RunPayrollPayload,
};
