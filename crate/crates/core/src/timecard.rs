use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::employee::{Employee, EmployeeId, EmployeeStatus};
use crate::hours::QuarterHours;
use crate::period::PayPeriod;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeCard {
    pub employee_id: EmployeeId,
    pub period: PayPeriod,
    pub hours: QuarterHours,
    pub approved: bool,
    /// Set by [`verify_timecard`]; payroll only pays verified cards.
    #[serde(default)]
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeCardError {
    #[error("hours must not be negative")]
    NegativeHours,
    #[error("{hours} hours exceeds the {max_hours} hours in the period")]
    ExcessiveHours { hours: QuarterHours, max_hours: QuarterHours },
    #[error("unknown employee {0}")]
    UnknownEmployee(EmployeeId),
    #[error("employee {0} is not active in the period")]
    InactiveEmployee(EmployeeId),
    #[error("a time card for {0} in {1} already exists")]
    DuplicateTimeCard(EmployeeId, PayPeriod),
}

impl TimeCardError {
    pub fn code(&self) -> &'static str {
        match self {
            TimeCardError::NegativeHours => "NegativeHours",
            TimeCardError::ExcessiveHours { .. } => "ExcessiveHours",
            TimeCardError::UnknownEmployee(_) => "UnknownEmployee",
            TimeCardError::InactiveEmployee(_) => "InactiveEmployee",
            TimeCardError::DuplicateTimeCard(..) => "DuplicateTimeCard",
        }
    }
}

/// Checks a submitted card against the employee roster and the cards already
/// on file. Returns the card marked verified, or every problem found.
pub fn verify_timecard(
    card: &TimeCard,
    employees: &[Employee],
    existing: &[TimeCard],
) -> Result<TimeCard, Vec<TimeCardError>> {
    let mut errors = Vec::new();
    let max_hours = QuarterHours::from_whole_hours(24 * i64::from(card.period.days_in_month()));
    if card.hours < QuarterHours::ZERO {
        errors.push(TimeCardError::NegativeHours);
    } else if card.hours > max_hours {
        errors.push(TimeCardError::ExcessiveHours { hours: card.hours, max_hours });
    }
    match employees.iter().find(|e| e.id == card.employee_id) {
        None => errors.push(TimeCardError::UnknownEmployee(card.employee_id.clone())),
        Some(emp) if emp.status_at(card.period) != EmployeeStatus::Active => {
            errors.push(TimeCardError::InactiveEmployee(card.employee_id.clone()))
        }
        Some(_) => {}
    }
    if existing
        .iter()
        .any(|c| c.employee_id == card.employee_id && c.period == card.period)
    {
        errors.push(TimeCardError::DuplicateTimeCard(card.employee_id.clone(), card.period));
    }
    if errors.is_empty() {
        Ok(TimeCard { verified: true, ..card.clone() })
    } else {
        Err(errors)
    }
}
