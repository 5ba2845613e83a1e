//! Worker threads pulling from a [`JobQueue`].

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use payroll_core::clock::ManualClock;

use crate::handler::JobHandler;
use crate::queue::{JobFailure, JobQueue, Lease};

const POLL: Duration = Duration::from_millis(20);

/// Executes one lease, turning a panic into a retryable failure.
pub fn execute(queue: &JobQueue, handler: &dyn JobHandler, lease: &Lease) {
    let outcome = catch_unwind(AssertUnwindSafe(|| handler.execute(lease)))
        .unwrap_or_else(|_| Err(JobFailure::Retryable("worker panicked".into())));
    if let Err(failure) = &outcome {
        log::warn!("job {} attempt {} failed: {failure:?}", lease.job_id, lease.attempt);
    }
    queue.complete(lease, outcome);
}

/// Single-threaded driver: runs jobs until the queue is idle, advancing
/// `clock` over retry delays instead of sleeping.
pub fn drain(queue: &JobQueue, handler: &dyn JobHandler, clock: &ManualClock) {
    loop {
        if let Some(lease) = queue.try_lease() {
            execute(queue, handler, &lease);
            continue;
        }
        match queue.next_retry_due() {
            Some(due) => clock.advance(due.saturating_sub(queue.now())),
            None => break,
        }
    }
}

struct Slot {
    stop: Arc<AtomicBool>,
    thread: JoinHandle<()>,
}

pub struct WorkerPool {
    queue: Arc<JobQueue>,
    handler: Arc<dyn JobHandler>,
    slots: Mutex<Vec<Slot>>,
}

impl WorkerPool {
    pub fn start(queue: Arc<JobQueue>, handler: Arc<dyn JobHandler>, workers: usize) -> Self {
        let pool = WorkerPool { queue, handler, slots: Mutex::new(Vec::new()) };
        pool.set_workers(workers);
        pool
    }

    pub fn workers(&self) -> usize {
        self.slots.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    /// Grows or shrinks the pool. A retiring worker finishes its current
    /// job first; the queue never lets more than `n` jobs run at once.
    pub fn set_workers(&self, n: usize) {
        let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        self.queue.set_lease_limit(n);
        while slots.len() > n {
            let slot = slots.pop().expect("non-empty");
            slot.stop.store(true, Ordering::SeqCst);
        }
        while slots.len() < n {
            let stop = Arc::new(AtomicBool::new(false));
            let (queue, handler, flag) = (self.queue.clone(), self.handler.clone(), stop.clone());
            let thread = std::thread::spawn(move || {
                while !flag.load(Ordering::SeqCst) {
                    if let Some(lease) = queue.lease_timeout(POLL) {
                        execute(&queue, handler.as_ref(), &lease);
                    }
                }
            });
            slots.push(Slot { stop, thread });
        }
    }

    /// Blocks until no job is queued or running.
    pub fn wait_idle(&self) {
        while !self.queue.is_idle() {
            std::thread::sleep(Duration::from_millis(2));
        }
    }

    pub fn shutdown(&self) {
        let slots = std::mem::take(&mut *self.slots.lock().unwrap_or_else(|e| e.into_inner()));
        for slot in &slots {
            slot.stop.store(true, Ordering::SeqCst);
        }
        for slot in slots {
            let _ = slot.thread.join();
        }
    }
}
