use thiserror::Error;

use crate::money::{Money, MoneyError};
use crate::period::PayPeriod;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayrollError {
    #[error("hourly compensation requires worked hours")]
    HoursRequired,
    #[error("salaried compensation does not take worked hours")]
    HoursForbidden,
    #[error("worked hours must not be negative")]
    NegativeHours,
    #[error("withholdings {withheld} exceed gross {gross}")]
    NegativeNet { gross: Money, withheld: Money },
    #[error("change effective {requested} precedes latest change effective {latest}")]
    RetroactiveChange { latest: PayPeriod, requested: PayPeriod },
    #[error("duplicate rule id {0:?} in rule set")]
    DuplicateRuleId(String),
    #[error("invalid rule {id:?}: {reason}")]
    InvalidRule { id: String, reason: String },
    #[error("compensation amount must not be negative")]
    NegativeCompensation,
    #[error("invalid employee id {0:?}")]
    InvalidEmployeeId(String),
    #[error("invalid text field {0:?}: must be non-empty and contain no '|' or line breaks")]
    InvalidText(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Money(#[from] MoneyError),
}

impl PayrollError {
    pub fn code(&self) -> &'static str {
        match self {
            PayrollError::HoursRequired => "HoursRequired",
            PayrollError::HoursForbidden => "HoursForbidden",
            PayrollError::NegativeHours => "NegativeHours",
            PayrollError::NegativeNet { .. } => "NegativeNet",
            PayrollError::RetroactiveChange { .. } => "RetroactiveChange",
            PayrollError::DuplicateRuleId(_) => "DuplicateRuleId",
            PayrollError::InvalidRule { .. } => "InvalidRule",
            PayrollError::NegativeCompensation => "NegativeCompensation",
            PayrollError::InvalidEmployeeId(_) => "InvalidEmployeeId",
            PayrollError::InvalidText(_) => "InvalidText",
            PayrollError::InvalidRecord(_) => "InvalidRecord",
            PayrollError::Money(_) => "InvalidMoney",
        }
    }
}

/// Labels and descriptions end up in the pipe-delimited statement format.
pub(crate) fn check_text(text: &str) -> Result<(), PayrollError> {
    if text.is_empty() || text.contains(['|', '\n', '\r']) {
        return Err(PayrollError::InvalidText(text.to_string()));
    }
    Ok(())
}
