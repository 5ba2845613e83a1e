//! Deterministic payroll computation.
//!
//! Everything in this crate is a pure function over value inputs: computing
//! gross pay for the three pay bases, applying deduction rule sets, verifying
//! time cards, applying effective-dated employee changes, running payroll for
//! a period, and rendering earning statements.

pub mod clock;
pub mod employee;
pub mod engine;
pub mod error;
pub mod hours;
pub mod money;
pub mod period;
pub mod rules;
pub mod statement;
pub mod timecard;

pub use employee::{
    apply_employee_change, ChangeKind, ChangeRequest, CompensationModel, Employee,
    EmployeeChange, EmployeeId, EmployeeStatus, Update,
};
pub use engine::{compute_gross, compute_period, run_payroll, PayrollRun, PeriodResult, RunId, RunStatus};
pub use error::PayrollError;
pub use hours::QuarterHours;
pub use money::{Currency, Money, MoneyError};
pub use period::PayPeriod;
pub use rules::{apply_rules, Breakdown, DeductionLine, PayRule, Payer, RuleBasis, RuleSet, RuleSetCatalog, FIG2_NG};
pub use statement::{parse_statement, render_statement, EarningLine, EarningStatement, StatementParseError};
pub use timecard::{verify_timecard, TimeCard, TimeCardError};

#[cfg(feature = "testkit")]
pub mod testkit;
