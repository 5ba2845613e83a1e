//! Executes leased payroll jobs against the store.

use std::sync::Arc;

use chrono::Utc;
use payroll_core::{run_payroll, PayrollRun, RuleSetCatalog};
use payroll_datastore::{Store, StoreError};

use crate::fault::{FaultInjector, FaultPoint, NoFaults};
use crate::queue::{JobFailure, Lease};

pub trait JobHandler: Send + Sync {
    fn execute(&self, lease: &Lease) -> Result<(), JobFailure>;
}

pub type AppendHook = Arc<dyn Fn(&PayrollRun) + Send + Sync>;

/// Runs payroll for the leased period and appends the result.
///
/// The run id is the idempotency key. A redelivered job whose run is
/// already in the ledger completes without writing anything.
pub struct PayrollRunHandler {
    store: Arc<Store>,
    catalog: Arc<RuleSetCatalog>,
    faults: Arc<dyn FaultInjector>,
    on_appended: Option<AppendHook>,
}

impl PayrollRunHandler {
    pub fn new(store: Arc<Store>, catalog: Arc<RuleSetCatalog>) -> Self {
        PayrollRunHandler { store, catalog, faults: Arc::new(NoFaults), on_appended: None }
    }

    pub fn with_faults(mut self, faults: Arc<dyn FaultInjector>) -> Self {
        self.faults = faults;
        self
    }

    /// Called once the run is in the ledger (also on a redelivery that
    /// finds it already there), e.g. to invalidate cached statements.
    pub fn on_appended(mut self, hook: AppendHook) -> Self {
        self.on_appended = Some(hook);
        self
    }

    fn notify(&self, run: &PayrollRun) {
        if let Some(hook) = &self.on_appended {
            hook(run);
        }
    }
}

fn store_failure(e: StoreError) -> JobFailure {
    match e {
        StoreError::Io(_) => JobFailure::Retryable(e.to_string()),
        e => JobFailure::Permanent(format!("{}: {e}", e.code())),
    }
}

impl JobHandler for PayrollRunHandler {
    fn execute(&self, lease: &Lease) -> Result<(), JobFailure> {
        let p = &lease.payload;
        if let Ok(run) = self.store.get_run(&p.run_id) {
            self.notify(&run);
            return Ok(());
        }
        if self.faults.crash(FaultPoint::BeforeAppend, &p.run_id, lease.attempt) {
            return Err(JobFailure::Retryable("worker crashed before append".into()));
        }
        let rules = self
            .catalog
            .get(&p.ruleset_id)
            .ok_or_else(|| JobFailure::Permanent(format!("unknown ruleset {}", p.ruleset_id)))?;
        let employees = self.store.employees();
        let timecards = self.store.timecards_for(p.period);
        let mut run = run_payroll(p.period, &employees, &timecards, rules, p.run_id.clone(), Utc::now());
        if p.supersede {
            run.supersedes = self.store.current_run(p.period).map(|r| r.run_id.clone());
        }
        match self.store.append_run(run) {
            Ok(_) => {}
            Err(StoreError::RunExists { existing, .. }) if existing == p.run_id => {}
            Err(e) => return Err(store_failure(e)),
        }
        let run = self.store.get_run(&p.run_id).map_err(store_failure)?;
        self.notify(&run);
        if self.faults.crash(FaultPoint::AfterAppendBeforeAck, &p.run_id, lease.attempt) {
            return Err(JobFailure::Retryable("worker crashed before acknowledging".into()));
        }
        log::debug!("job {} appended run {}", lease.job_id, p.run_id);
        Ok(())
    }
}
