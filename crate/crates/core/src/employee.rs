//! Employees, their pay basis, and effective-dated changes.
//!
//! An [`Employee`] carries its current compensation and status together with
//! the ordered list of every change ever applied. Payroll for a period uses
//! the values effective at that period, so a change never rewrites pay for
//! months before it takes effect.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_text, PayrollError};
use crate::money::Money;
use crate::period::PayPeriod;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EmployeeId(String);

impl EmployeeId {
    /// 1 to 64 characters from `[A-Za-z0-9_.-]`; ids appear in URLs and cache keys.
    pub fn new(id: impl Into<String>) -> Result<Self, PayrollError> {
        let id = id.into();
        let ok = !id.is_empty()
            && id.len() <= 64
            && id
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'));
        if ok {
            Ok(EmployeeId(id))
        } else {
            Err(PayrollError::InvalidEmployeeId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EmployeeId {
    type Error = PayrollError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        EmployeeId::new(value)
    }
}

impl From<EmployeeId> for String {
    fn from(id: EmployeeId) -> Self {
        id.0
    }
}

impl fmt::Display for EmployeeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// How an employee is paid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompensationModel {
    /// Rate per hour worked.
    HourlyRate { rate: Money },
    /// Fixed amount per month.
    MonthlySalary { amount: Money },
    /// Contracted amount per year, paid in twelve monthly shares.
    AnnualContract { amount: Money },
}

impl CompensationModel {
    pub fn amount(&self) -> Money {
        match *self {
            CompensationModel::HourlyRate { rate } => rate,
            CompensationModel::MonthlySalary { amount }
            | CompensationModel::AnnualContract { amount } => amount,
        }
    }

    pub fn is_hourly(&self) -> bool {
        matches!(self, CompensationModel::HourlyRate { .. })
    }

    pub fn validate(&self) -> Result<(), PayrollError> {
        if self.amount().is_negative() {
            return Err(PayrollError::NegativeCompensation);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmployeeStatus {
    Active,
    Terminated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum ChangeKind {
    Compensation { old: CompensationModel, new: CompensationModel },
    Status { old: EmployeeStatus, new: EmployeeStatus },
}

/// A recorded change, with both the previous and the new value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmployeeChange {
    pub effective_period: PayPeriod,
    pub description: String,
    #[serde(flatten)]
    pub kind: ChangeKind,
}

/// What a caller asks to change; the previous value is filled in on apply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Update {
    Compensation(CompensationModel),
    Status(EmployeeStatus),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeRequest {
    pub effective_period: PayPeriod,
    pub description: String,
    pub update: Update,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Employee {
    pub id: EmployeeId,
    pub name: String,
    pub compensation: CompensationModel,
    pub status: EmployeeStatus,
    pub version: u64,
    #[serde(default)]
    pub changes: Vec<EmployeeChange>,
}

impl Employee {
    pub fn new(
        id: EmployeeId,
        name: impl Into<String>,
        compensation: CompensationModel,
    ) -> Result<Self, PayrollError> {
        let name = name.into();
        check_text(&name)?;
        compensation.validate()?;
        Ok(Employee {
            id,
            name,
            compensation,
            status: EmployeeStatus::Active,
            version: 1,
            changes: Vec::new(),
        })
    }

    pub fn latest_change_period(&self) -> Option<PayPeriod> {
        self.changes.last().map(|c| c.effective_period)
    }

    /// Compensation in force during `period`.
    pub fn compensation_at(&self, period: PayPeriod) -> CompensationModel {
        let mut current = self
            .changes
            .iter()
            .find_map(|c| match c.kind {
                ChangeKind::Compensation { old, .. } => Some(old),
                ChangeKind::Status { .. } => None,
            })
            .unwrap_or(self.compensation);
        for change in self.changes.iter().take_while(|c| c.effective_period <= period) {
            if let ChangeKind::Compensation { new, .. } = change.kind {
                current = new;
            }
        }
        current
    }

    /// Status in force during `period`.
    pub fn status_at(&self, period: PayPeriod) -> EmployeeStatus {
        let mut current = self
            .changes
            .iter()
            .find_map(|c| match c.kind {
                ChangeKind::Status { old, .. } => Some(old),
                ChangeKind::Compensation { .. } => None,
            })
            .unwrap_or(self.status);
        for change in self.changes.iter().take_while(|c| c.effective_period <= period) {
            if let ChangeKind::Status { new, .. } = change.kind {
                current = new;
            }
        }
        current
    }

    /// Structural invariants, checked when records are loaded from storage.
    pub fn validate(&self) -> Result<(), PayrollError> {
        check_text(&self.name)?;
        self.compensation.validate()?;
        if self.version != 1 + self.changes.len() as u64 {
            return Err(PayrollError::InvalidRecord(format!(
                "employee {} version {} does not match {} changes",
                self.id,
                self.version,
                self.changes.len()
            )));
        }
        for pair in self.changes.windows(2) {
            if pair[1].effective_period < pair[0].effective_period {
                return Err(PayrollError::RetroactiveChange {
                    latest: pair[0].effective_period,
                    requested: pair[1].effective_period,
                });
            }
        }
        Ok(())
    }
}

/// Applies `change` to `employee`, returning the updated record.
///
/// The version always increments, even when the new value equals the old.
pub fn apply_employee_change(
    employee: &Employee,
    change: ChangeRequest,
) -> Result<Employee, PayrollError> {
    if let Some(latest) = employee.latest_change_period() {
        if change.effective_period < latest {
            return Err(PayrollError::RetroactiveChange {
                latest,
                requested: change.effective_period,
            });
        }
    }
    check_text(&change.description)?;
    let mut next = employee.clone();
    let kind = match change.update {
        Update::Compensation(new) => {
            new.validate()?;
            next.compensation = new;
            ChangeKind::Compensation { old: employee.compensation, new }
        }
        Update::Status(new) => {
            next.status = new;
            ChangeKind::Status { old: employee.status, new }
        }
    };
    next.changes.push(EmployeeChange {
        effective_period: change.effective_period,
        description: change.description,
        kind,
    });
    next.version += 1;
    Ok(next)
}
