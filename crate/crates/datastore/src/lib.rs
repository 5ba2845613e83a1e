//! Durable storage for employees, time cards and the payroll run ledger.
//!
//! A store is a directory of three line-delimited JSON files:
//!
//! | file              | one line per                                   |
//! |-------------------|------------------------------------------------|
//! | `employees.jsonl` | stored employee version (latest line wins)     |
//! | `timecards.jsonl` | verified time card                             |
//! | `runs.jsonl`      | payroll run, in ledger order                   |
//!
//! Every line is a JSON object carrying `"schema_version": 1` next to the
//! record's own fields. Money is always `{"amount_minor", "currency"}`.
//!
//! Records are written and fsynced before a mutation is acknowledged. On
//! open, a single torn (unterminated, unparseable) trailing line per file is
//! discarded and truncated away; any other malformed line is
//! [`StoreError::CorruptStore`].
//!
//! Runs are never rewritten. A corrected run names the run it replaces in
//! `supersedes`, and at most one non-superseded run exists per period.

mod files;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use payroll_core::{
    EarningStatement, Employee, EmployeeId, PayPeriod, PayrollError, PayrollRun, RunId, TimeCard,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use files::{LedgerFile, Loaded};

pub const SCHEMA_VERSION: u32 = 1;
pub const EMPLOYEES_FILE: &str = "employees.jsonl";
pub const TIMECARDS_FILE: &str = "timecards.jsonl";
pub const RUNS_FILE: &str = "runs.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("employee {0} already exists")]
    AlreadyExists(EmployeeId),
    #[error("employee {id}: stale update (stored version {stored}, update version {submitted})")]
    VersionConflict { id: EmployeeId, stored: u64, submitted: u64 },
    #[error("a run for {period} already exists ({existing})")]
    RunExists { period: PayPeriod, existing: RunId },
    #[error("run {run_id} cannot supersede {supersedes}: current run for the period is {current:?}")]
    InvalidSupersede { run_id: RunId, supersedes: RunId, current: Option<RunId> },
    #[error("time card for {0} in {1} already stored")]
    DuplicateTimeCard(EmployeeId, PayPeriod),
    #[error("invalid range: {from} is after {to}")]
    InvalidRange { from: PayPeriod, to: PayPeriod },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("corrupt store file {file} line {line}: {reason}")]
    CorruptStore { file: PathBuf, line: usize, reason: String },
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl StoreError {
    /// Stable error code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::NotFound { .. } => "NotFound",
            StoreError::AlreadyExists(_) => "AlreadyExists",
            StoreError::VersionConflict { .. } => "VersionConflict",
            StoreError::RunExists { .. } => "RunExists",
            StoreError::InvalidSupersede { .. } => "InvalidSupersede",
            StoreError::DuplicateTimeCard(..) => "DuplicateTimeCard",
            StoreError::InvalidRange { .. } => "InvalidRange",
            StoreError::InvalidRecord(_) => "InvalidRecord",
            StoreError::CorruptStore { .. } => "CorruptStore",
            StoreError::Io(_) => "Io",
        }
    }
}

impl From<PayrollError> for StoreError {
    fn from(e: PayrollError) -> Self {
        StoreError::InvalidRecord(e.to_string())
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// On-disk line: the record plus its schema version.
#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema_version: u32,
    #[serde(flatten)]
    record: T,
}

#[derive(Default)]
struct Ledger {
    employees: BTreeMap<EmployeeId, Employee>,
    timecards: BTreeMap<PayPeriod, BTreeMap<EmployeeId, TimeCard>>,
    runs: Vec<Arc<PayrollRun>>,
    by_run_id: HashMap<RunId, usize>,
    /// Current (non-superseded) run per period.
    heads: BTreeMap<PayPeriod, usize>,
    superseded: HashSet<usize>,
}

impl Ledger {
    fn check_employee(&self, emp: &Employee) -> Result<()> {
        emp.validate()?;
        match self.employees.get(&emp.id) {
            None if emp.version == 1 => Ok(()),
            None => Err(StoreError::NotFound { kind: "employee", id: emp.id.to_string() }),
            Some(_) if emp.version == 1 => Err(StoreError::AlreadyExists(emp.id.clone())),
            Some(stored) if emp.version != stored.version + 1 => Err(StoreError::VersionConflict {
                id: emp.id.clone(),
                stored: stored.version,
                submitted: emp.version,
            }),
            Some(_) => Ok(()),
        }
    }

    fn check_timecard(&self, card: &TimeCard) -> Result<()> {
        let existing = self.timecards.get(&card.period);
        if existing.is_some_and(|cards| cards.contains_key(&card.employee_id)) {
            return Err(StoreError::DuplicateTimeCard(card.employee_id.clone(), card.period));
        }
        Ok(())
    }

    fn check_run(&self, run: &PayrollRun) -> Result<()> {
        if let Some(&idx) = self.by_run_id.get(&run.run_id) {
            return Err(StoreError::RunExists {
                period: self.runs[idx].period,
                existing: run.run_id.clone(),
            });
        }
        let head = self.heads.get(&run.period).map(|&i| &self.runs[i].run_id);
        match (&run.supersedes, head) {
            (None, None) => {}
            (None, Some(existing)) => {
                return Err(StoreError::RunExists { period: run.period, existing: existing.clone() })
            }
            (Some(target), current) if current != Some(target) => {
                return Err(StoreError::InvalidSupersede {
                    run_id: run.run_id.clone(),
                    supersedes: target.clone(),
                    current: current.cloned(),
                })
            }
            (Some(_), _) => {}
        }
        if !run.statements.windows(2).all(|w| w[0].employee_id < w[1].employee_id) {
            return Err(StoreError::InvalidRecord(format!(
                "run {} statements are not strictly ordered by employee id",
                run.run_id
            )));
        }
        for stmt in &run.statements {
            if stmt.period != run.period {
                return Err(StoreError::InvalidRecord(format!(
                    "run {} holds a statement for {}",
                    run.run_id, stmt.period
                )));
            }
            stmt.check_invariants().map_err(StoreError::InvalidRecord)?;
        }
        Ok(())
    }

    fn insert_timecard(&mut self, card: TimeCard) {
        self.timecards
            .entry(card.period)
            .or_default()
            .insert(card.employee_id.clone(), card);
    }

    fn insert_run(&mut self, run: Arc<PayrollRun>) -> u64 {
        let idx = self.runs.len();
        if let Some(prev) = self.heads.insert(run.period, idx) {
            self.superseded.insert(prev);
        }
        self.by_run_id.insert(run.run_id.clone(), idx);
        self.runs.push(run);
        idx as u64
    }
}

/// Single-writer, multi-reader handle on a store directory.
pub struct Store {
    dir: PathBuf,
    ledger: RwLock<Ledger>,
    files: std::sync::Mutex<Files>,
}

struct Files {
    employees: LedgerFile,
    timecards: LedgerFile,
    runs: LedgerFile,
}

impl Store {
    /// Opens (creating if needed) the store in `dir` and replays its files.
    pub fn open(dir: impl AsRef<Path>) -> Result<Store> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut ledger = Ledger::default();

        let (employees, lines) = LedgerFile::open(dir.join(EMPLOYEES_FILE))?;
        for Loaded { line, value } in lines {
            let emp: Employee = decode(employees.path(), line, value)?;
            // each line is a successor of the previous version
            ledger.check_employee(&emp).map_err(|e| corrupt(employees.path(), line, e))?;
            ledger.employees.insert(emp.id.clone(), emp);
        }

        let (timecards, lines) = LedgerFile::open(dir.join(TIMECARDS_FILE))?;
        for Loaded { line, value } in lines {
            let card: TimeCard = decode(timecards.path(), line, value)?;
            ledger.check_timecard(&card).map_err(|e| corrupt(timecards.path(), line, e))?;
            ledger.insert_timecard(card);
        }

        let (runs, lines) = LedgerFile::open(dir.join(RUNS_FILE))?;
        for Loaded { line, value } in lines {
            let run: PayrollRun = decode(runs.path(), line, value)?;
            ledger.check_run(&run).map_err(|e| corrupt(runs.path(), line, e))?;
            ledger.insert_run(Arc::new(run));
        }

        Ok(Store {
            dir,
            ledger: RwLock::new(ledger),
            files: std::sync::Mutex::new(Files { employees, timecards, runs }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read(&self) -> RwLockReadGuard<'_, Ledger> {
        self.ledger.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Serializes writers; readers keep using the ledger until the record
    /// is durable, then see the new state atomically.
    fn write<T>(
        &self,
        check: impl FnOnce(&Ledger) -> Result<()>,
        file: impl FnOnce(&mut Files) -> &mut LedgerFile,
        line: String,
        apply: impl FnOnce(&mut RwLockWriteGuard<'_, Ledger>) -> T,
    ) -> Result<T> {
        let mut files = self.files.lock().unwrap_or_else(|e| e.into_inner());
        check(&self.read())?;
        file(&mut files).append_line(&line)?;
        let mut ledger = self.ledger.write().unwrap_or_else(|e| e.into_inner());
        Ok(apply(&mut ledger))
    }

    /// Creates (version 1) or updates an employee. An update must be the
    /// direct successor of the stored version, otherwise
    /// [`StoreError::VersionConflict`].
    pub fn put_employee(&self, emp: &Employee) -> Result<u64> {
        let line = encode(emp)?;
        self.write(
            |l| l.check_employee(emp),
            |f| &mut f.employees,
            line,
            |l| {
                l.employees.insert(emp.id.clone(), emp.clone());
                emp.version
            },
        )
    }

    /// Creates many employees with a single sync. Every record must be a
    /// new version 1 employee; nothing is written if any check fails.
    pub fn put_employees(&self, emps: &[Employee]) -> Result<()> {
        let lines = emps.iter().map(encode).collect::<Result<Vec<_>>>()?;
        let mut files = self.files.lock().unwrap_or_else(|e| e.into_inner());
        {
            let ledger = self.read();
            let mut seen = HashSet::new();
            for emp in emps {
                if emp.version != 1 || !seen.insert(&emp.id) {
                    return Err(StoreError::AlreadyExists(emp.id.clone()));
                }
                ledger.check_employee(emp)?;
            }
        }
        files.employees.append_lines(&lines)?;
        let mut ledger = self.ledger.write().unwrap_or_else(|e| e.into_inner());
        for emp in emps {
            ledger.employees.insert(emp.id.clone(), emp.clone());
        }
        Ok(())
    }

    pub fn get_employee(&self, id: &EmployeeId) -> Result<Employee> {
        self.read()
            .employees
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound { kind: "employee", id: id.to_string() })
    }

    pub fn employees(&self) -> Vec<Employee> {
        self.read().employees.values().cloned().collect()
    }

    pub fn put_timecard(&self, card: &TimeCard) -> Result<()> {
        let line = encode(card)?;
        self.write(
            |l| l.check_timecard(card),
            |f| &mut f.timecards,
            line,
            |l| {
                l.insert_timecard(card.clone());
            },
        )
    }

    /// Stores many time cards with a single sync; all or nothing.
    pub fn put_timecards(&self, cards: &[TimeCard]) -> Result<()> {
        let lines = cards.iter().map(encode).collect::<Result<Vec<_>>>()?;
        let mut files = self.files.lock().unwrap_or_else(|e| e.into_inner());
        {
            let ledger = self.read();
            let mut seen = HashSet::new();
            for card in cards {
                if !seen.insert((&card.employee_id, card.period)) {
                    return Err(StoreError::DuplicateTimeCard(card.employee_id.clone(), card.period));
                }
                ledger.check_timecard(card)?;
            }
        }
        files.timecards.append_lines(&lines)?;
        let mut ledger = self.ledger.write().unwrap_or_else(|e| e.into_inner());
        for card in cards {
            ledger.insert_timecard(card.clone());
        }
        Ok(())
    }

    pub fn timecards(&self) -> Vec<TimeCard> {
        self.read().timecards.values().flat_map(|m| m.values().cloned()).collect()
    }

    pub fn timecards_for(&self, period: PayPeriod) -> Vec<TimeCard> {
        self.read()
            .timecards
            .get(&period)
            .map(|m| m.values().cloned().collect())
            .unwrap_or_default()
    }

    /// Appends `run` to the ledger and returns its position.
    pub fn append_run(&self, run: PayrollRun) -> Result<u64> {
        let line = encode(&run)?;
        let run = Arc::new(run);
        self.write(
            |l| l.check_run(&run),
            |f| &mut f.runs,
            line,
            |l| l.insert_run(run.clone()),
        )
    }

    pub fn get_run(&self, run_id: &RunId) -> Result<Arc<PayrollRun>> {
        let ledger = self.read();
        ledger
            .by_run_id
            .get(run_id)
            .map(|&i| ledger.runs[i].clone())
            .ok_or_else(|| StoreError::NotFound { kind: "run", id: run_id.to_string() })
    }

    pub fn contains_run(&self, run_id: &RunId) -> bool {
        self.read().by_run_id.contains_key(run_id)
    }

    pub fn is_superseded(&self, run_id: &RunId) -> bool {
        let ledger = self.read();
        ledger
            .by_run_id
            .get(run_id)
            .is_some_and(|i| ledger.superseded.contains(i))
    }

    /// The non-superseded run for `period`, if any.
    pub fn current_run(&self, period: PayPeriod) -> Option<Arc<PayrollRun>> {
        let ledger = self.read();
        ledger.heads.get(&period).map(|&i| ledger.runs[i].clone())
    }

    /// The raw ledger in append order.
    pub fn runs(&self) -> Vec<Arc<PayrollRun>> {
        self.read().runs.clone()
    }

    /// The employee's statement in the current run for `period`.
    pub fn statement(&self, employee_id: &EmployeeId, period: PayPeriod) -> Result<EarningStatement> {
        let ledger = self.read();
        let not_found = || StoreError::NotFound {
            kind: "statement",
            id: format!("{employee_id}/{period}"),
        };
        let run = ledger.heads.get(&period).map(|&i| &ledger.runs[i]).ok_or_else(not_found)?;
        find_statement(run, employee_id).cloned().ok_or_else(not_found)
    }

    /// Statements for one employee from non-superseded runs with period in
    /// `[from, to]`, ascending by period.
    pub fn get_history(
        &self,
        employee_id: &EmployeeId,
        from: PayPeriod,
        to: PayPeriod,
    ) -> Result<Vec<EarningStatement>> {
        if from > to {
            return Err(StoreError::InvalidRange { from, to });
        }
        let ledger = self.read();
        if !ledger.employees.contains_key(employee_id) {
            return Err(StoreError::NotFound { kind: "employee", id: employee_id.to_string() });
        }
        Ok(ledger
            .heads
            .range(from..=to)
            .filter_map(|(_, &i)| find_statement(&ledger.runs[i], employee_id).cloned())
            .collect())
    }
}

fn find_statement<'a>(run: &'a PayrollRun, id: &EmployeeId) -> Option<&'a EarningStatement> {
    run.statements
        .binary_search_by(|s| s.employee_id.cmp(id))
        .ok()
        .map(|i| &run.statements[i])
}

fn encode<T: Serialize>(record: &T) -> Result<String> {
    serde_json::to_string(&Envelope { schema_version: SCHEMA_VERSION, record })
        .map_err(|e| StoreError::InvalidRecord(e.to_string()))
}

fn decode<T: for<'de> Deserialize<'de>>(
    file: &Path,
    line: usize,
    value: serde_json::Value,
) -> Result<T> {
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(u64::from(SCHEMA_VERSION)) {
        return Err(StoreError::CorruptStore {
            file: file.to_path_buf(),
            line,
            reason: format!("unsupported schema_version {version:?}"),
        });
    }
    let env: Envelope<T> = serde_json::from_value(value).map_err(|e| StoreError::CorruptStore {
        file: file.to_path_buf(),
        line,
        reason: e.to_string(),
    })?;
    Ok(env.record)
}

fn corrupt(file: &Path, line: usize, err: StoreError) -> StoreError {
    StoreError::CorruptStore { file: file.to_path_buf(), line, reason: err.to_string() }
}
