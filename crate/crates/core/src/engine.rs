//! Gross pay and whole-period payroll runs.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::employee::{CompensationModel, Employee, EmployeeId, EmployeeStatus};
use crate::error::PayrollError;
use crate::hours::QuarterHours;
use crate::money::Money;
use crate::period::PayPeriod;
use crate::rules::{apply_rules, RuleSet};
use crate::statement::{EarningLine, EarningStatement};
use crate::timecard::TimeCard;

pub const HOURLY_DESCRIPTION: &str = "Regular pay";
pub const MONTHLY_DESCRIPTION: &str = "Monthly salary";
pub const ANNUAL_DESCRIPTION: &str = "Contract salary";

/// Gross pay for one period.
///
/// Hourly pay is `rate × quarters / 4` evaluated exactly, then rounded
/// half-up to the minor unit. Annual contracts pay `annual / 12`, rounded
/// half-up, every month.
pub fn compute_gross(
    compensation: &CompensationModel,
    hours: Option<QuarterHours>,
) -> Result<Money, PayrollError> {
    match (*compensation, hours) {
        (CompensationModel::HourlyRate { rate }, Some(hours)) => {
            if hours < QuarterHours::ZERO {
                return Err(PayrollError::NegativeHours);
            }
            Ok(rate.mul_ratio_round_half_up(hours.quarters(), 4)?)
        }
        (CompensationModel::HourlyRate { .. }, None) => Err(PayrollError::HoursRequired),
        (_, Some(_)) => Err(PayrollError::HoursForbidden),
        (CompensationModel::MonthlySalary { amount }, None) => Ok(amount),
        (CompensationModel::AnnualContract { amount }, None) => {
            Ok(amount.mul_ratio_round_half_up(1, 12)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RunId(String);

impl RunId {
    pub fn new(id: impl Into<String>) -> Self {
        RunId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Done,
    DoneWithWarnings,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayrollRun {
    pub run_id: RunId,
    pub period: PayPeriod,
    pub ruleset_id: String,
    pub status: RunStatus,
    /// Sorted by employee id.
    pub statements: Vec<EarningStatement>,
    pub warnings: Vec<String>,
    pub supersedes: Option<RunId>,
    pub created_at: DateTime<Utc>,
}

/// Statements and warnings for one period; the deterministic part of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodResult {
    pub statements: Vec<EarningStatement>,
    pub warnings: Vec<String>,
}

/// Computes every payable statement for `period`.
///
/// Per-employee problems (missing or unapproved time cards, withholdings
/// exceeding gross) become warnings and the employee is skipped.
pub fn compute_period(
    period: PayPeriod,
    employees: &[Employee],
    timecards: &[TimeCard],
    rules: &RuleSet,
) -> PeriodResult {
    let mut cards: BTreeMap<&EmployeeId, Vec<&TimeCard>> = BTreeMap::new();
    for card in timecards.iter().filter(|c| c.period == period) {
        cards.entry(&card.employee_id).or_default().push(card);
    }
    let mut roster: Vec<&Employee> = employees.iter().collect();
    roster.sort_by(|a, b| a.id.cmp(&b.id));

    let mut statements = Vec::new();
    let mut warnings = Vec::new();
    for emp in roster {
        if emp.status_at(period) != EmployeeStatus::Active {
            continue;
        }
        let compensation = emp.compensation_at(period);
        let hours = if compensation.is_hourly() {
            let mut total = QuarterHours::ZERO;
            let mut payable = 0usize;
            for card in cards.get(&emp.id).map(Vec::as_slice).unwrap_or_default() {
                if !card.approved {
                    warnings.push(format!("{}: unapproved time card excluded", emp.id));
                } else if !card.verified {
                    warnings.push(format!("{}: unverified time card excluded", emp.id));
                } else {
                    payable += 1;
                    total = match total.checked_add(card.hours) {
                        Some(t) => t,
                        None => {
                            warnings.push(format!("{}: hours overflow", emp.id));
                            payable = 0;
                            break;
                        }
                    };
                }
            }
            if payable == 0 {
                warnings.push(format!("{}: no approved time card for {period}; skipped", emp.id));
                continue;
            }
            Some(total)
        } else {
            None
        };
        match statement_for(emp, period, &compensation, hours, rules) {
            Ok(stmt) => statements.push(stmt),
            Err(e) => warnings.push(format!("{}: {e}; skipped", emp.id)),
        }
    }
    PeriodResult { statements, warnings }
}

fn statement_for(
    emp: &Employee,
    period: PayPeriod,
    compensation: &CompensationModel,
    hours: Option<QuarterHours>,
    rules: &RuleSet,
) -> Result<EarningStatement, PayrollError> {
    let gross = compute_gross(compensation, hours)?;
    let (description, rate) = match *compensation {
        CompensationModel::HourlyRate { rate } => (HOURLY_DESCRIPTION, rate),
        CompensationModel::MonthlySalary { .. } => (MONTHLY_DESCRIPTION, gross),
        CompensationModel::AnnualContract { .. } => (ANNUAL_DESCRIPTION, gross),
    };
    let breakdown = apply_rules(gross, rules)?;
    Ok(EarningStatement {
        employee_id: emp.id.clone(),
        period,
        earnings: vec![EarningLine {
            description: description.to_string(),
            rate,
            hours,
            current: gross,
        }],
        gross,
        withheld: breakdown.withheld,
        employer: breakdown.employer,
        net: breakdown.net,
    })
}

/// Runs payroll for `period`. `run_id` and `created_at` come from the caller;
/// everything else is a pure function of the inputs.
pub fn run_payroll(
    period: PayPeriod,
    employees: &[Employee],
    timecards: &[TimeCard],
    rules: &RuleSet,
    run_id: RunId,
    created_at: DateTime<Utc>,
) -> PayrollRun {
    let PeriodResult { statements, warnings } =
        compute_period(period, employees, timecards, rules);
    PayrollRun {
        run_id,
        period,
        ruleset_id: rules.id().to_string(),
        status: if warnings.is_empty() { RunStatus::Done } else { RunStatus::DoneWithWarnings },
        statements,
        warnings,
        supersedes: None,
        created_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hourly(kobo: i64) -> CompensationModel {
        CompensationModel::HourlyRate { rate: Money::ngn(kobo) }
    }

    #[test]
    fn gross_for_each_pay_basis() {
        let h45 = Some(QuarterHours::from_whole_hours(45));
        assert_eq!(compute_gross(&hourly(250_000), h45).unwrap(), Money::ngn(11_250_000));
        assert_eq!(compute_gross(&hourly(250_000), Some(QuarterHours::ZERO)).unwrap(), Money::ngn(0));
        let annual = CompensationModel::AnnualContract { amount: Money::ngn(10_000_000) };
        assert_eq!(compute_gross(&annual, None).unwrap(), Money::ngn(833_333));
        let monthly = CompensationModel::MonthlySalary { amount: Money::ngn(42) };
        assert_eq!(compute_gross(&monthly, None).unwrap(), Money::ngn(42));
    }

    #[test]
    fn hours_presence_must_match_basis() {
        assert_eq!(compute_gross(&hourly(1), None).unwrap_err(), PayrollError::HoursRequired);
        let monthly = CompensationModel::MonthlySalary { amount: Money::ngn(1) };
        assert_eq!(
            compute_gross(&monthly, Some(QuarterHours::ZERO)).unwrap_err(),
            PayrollError::HoursForbidden
        );
        assert_eq!(
            compute_gross(&hourly(1), Some(QuarterHours::new(-1))).unwrap_err(),
            PayrollError::NegativeHours
        );
    }

    #[test]
    fn quarter_hour_rounding_half_up() {
        // 1 kobo/hr for 0.5h = 0.5 kobo -> 1
        assert_eq!(compute_gross(&hourly(1), Some(QuarterHours::new(2))).unwrap(), Money::ngn(1));
        // 1 kobo/hr for 0.25h = 0.25 kobo -> 0
        assert_eq!(compute_gross(&hourly(1), Some(QuarterHours::new(1))).unwrap(), Money::ngn(0));
    }

    #[test]
    fn empty_roster_is_done() {
        let run = run_payroll(
            "2021-06".parse().unwrap(),
            &[],
            &[],
            &RuleSet::fig2_ng(),
            RunId::new("r"),
            DateTime::<Utc>::UNIX_EPOCH,
        );
        assert!(run.statements.is_empty());
        assert_eq!(run.status, RunStatus::Done);
    }
}
