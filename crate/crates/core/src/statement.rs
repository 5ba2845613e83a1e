//! Earning statements and their pipe-delimited text form.
//!
//! One record per line, `|`-separated, money as naira with two decimals:
//!
//! ```text
//! HDR|e1|2021-06
//! EARN|Regular pay|2500.00|45.00|112500.00
//! GROSS|112500.00
//! WITHHELD|Federal Income Tax|11250.00
//! EMPLOYER|Medicare|400.00
//! CONTRIB|
//! NET|100750.00
//! ```
//!
//! Salaried earnings lines carry the monthly amount as rate and leave hours
//! blank. Rendering is byte-deterministic and [`parse_statement`] inverts it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::employee::EmployeeId;
use crate::hours::QuarterHours;
use crate::money::{Currency, Money};
use crate::period::PayPeriod;
use crate::rules::DeductionLine;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarningLine {
    pub description: String,
    pub rate: Money,
    /// `None` for salaried lines.
    pub hours: Option<QuarterHours>,
    pub current: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarningStatement {
    pub employee_id: EmployeeId,
    pub period: PayPeriod,
    pub earnings: Vec<EarningLine>,
    pub gross: Money,
    pub withheld: Vec<DeductionLine>,
    pub employer: Vec<DeductionLine>,
    pub net: Money,
}

impl EarningStatement {
    /// `gross = Σ earnings` and `net = gross − Σ withheld`, exactly.
    pub fn check_invariants(&self) -> Result<(), String> {
        let currency = self.gross.currency();
        let earned = Money::sum(currency, self.earnings.iter().map(|l| &l.current))
            .map_err(|e| e.to_string())?;
        if earned != self.gross {
            return Err(format!("gross {} != sum of earnings {}", self.gross, earned));
        }
        let withheld = Money::sum(currency, self.withheld.iter().map(|l| &l.amount))
            .map_err(|e| e.to_string())?;
        let expected_net = self.gross.checked_sub(withheld).map_err(|e| e.to_string())?;
        if expected_net != self.net {
            return Err(format!("net {} != gross - withheld {}", self.net, expected_net));
        }
        Ok(())
    }
}

/// Renders the statement in the line format described in the module docs.
pub fn render_statement(stmt: &EarningStatement) -> String {
    let mut out = String::with_capacity(256);
    let mut line = |parts: &[&str]| {
        out.push_str(&parts.join("|"));
        out.push('\n');
    };
    let period = stmt.period.to_string();
    line(&["HDR", stmt.employee_id.as_str(), &period]);
    for earn in &stmt.earnings {
        let hours = earn.hours.map(|h| h.to_string()).unwrap_or_default();
        line(&[
            "EARN",
            &earn.description,
            &earn.rate.to_major_string(),
            &hours,
            &earn.current.to_major_string(),
        ]);
    }
    line(&["GROSS", &stmt.gross.to_major_string()]);
    for w in &stmt.withheld {
        line(&["WITHHELD", &w.label, &w.amount.to_major_string()]);
    }
    for e in &stmt.employer {
        line(&["EMPLOYER", &e.label, &e.amount.to_major_string()]);
    }
    line(&["CONTRIB", ""]);
    line(&["NET", &stmt.net.to_major_string()]);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("statement line {line}: {message}")]
pub struct StatementParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Header,
    Earn,
    Gross,
    Withheld,
    Employer,
    Contrib,
    Net,
}

/// Parses the line format back into a statement; amounts are read as `currency`.
pub fn parse_statement(
    text: &str,
    currency: Currency,
) -> Result<EarningStatement, StatementParseError> {
    let mut employee_id = None;
    let mut period = None;
    let mut earnings = Vec::new();
    let mut gross = None;
    let mut withheld = Vec::new();
    let mut employer = Vec::new();
    let mut net = None;
    let mut section = None::<Section>;

    let body = text.strip_suffix('\n').ok_or(StatementParseError {
        line: text.lines().count().max(1),
        message: "missing trailing newline".into(),
    })?;
    for (idx, raw) in body.split('\n').enumerate() {
        let lineno = idx + 1;
        let err = |message: String| StatementParseError { line: lineno, message };
        let money = |s: &str| {
            Money::parse_major_exact(s, currency).map_err(|e| err(e.to_string()))
        };
        let fields: Vec<&str> = raw.split('|').collect();
        let (kind, expected_fields) = match fields[0] {
            "HDR" => (Section::Header, 3),
            "EARN" => (Section::Earn, 5),
            "GROSS" => (Section::Gross, 2),
            "WITHHELD" => (Section::Withheld, 3),
            "EMPLOYER" => (Section::Employer, 3),
            "CONTRIB" => (Section::Contrib, 2),
            "NET" => (Section::Net, 2),
            other => return Err(err(format!("unknown record kind {other:?}"))),
        };
        if fields.len() != expected_fields {
            return Err(err(format!("expected {expected_fields} fields, got {}", fields.len())));
        }
        let repeatable = matches!(kind, Section::Earn | Section::Withheld | Section::Employer);
        match section {
            None if kind != Section::Header => return Err(err("expected HDR first".into())),
            Some(prev) if kind < prev || (kind == prev && !repeatable) => {
                return Err(err(format!("{} out of order", fields[0])))
            }
            _ => {}
        }
        if kind > Section::Earn && earnings.is_empty() && kind != Section::Header {
            return Err(err("statement has no earnings lines".into()));
        }
        section = Some(kind);
        match kind {
            Section::Header => {
                employee_id =
                    Some(EmployeeId::new(fields[1]).map_err(|e| err(e.to_string()))?);
                period = Some(
                    fields[2]
                        .parse::<PayPeriod>()
                        .map_err(|e| err(e.to_string()))?,
                );
            }
            Section::Earn => {
                if fields[1].is_empty() {
                    return Err(err("empty earnings description".into()));
                }
                let hours = if fields[3].is_empty() {
                    None
                } else {
                    let h: QuarterHours = fields[3].parse().map_err(|e| err(format!("{e}")))?;
                    if h.to_string() != fields[3] {
                        return Err(err(format!("non-canonical hours {:?}", fields[3])));
                    }
                    Some(h)
                };
                earnings.push(EarningLine {
                    description: fields[1].to_string(),
                    rate: money(fields[2])?,
                    hours,
                    current: money(fields[4])?,
                });
            }
            Section::Gross => gross = Some(money(fields[1])?),
            Section::Withheld | Section::Employer => {
                if fields[1].is_empty() {
                    return Err(err("empty label".into()));
                }
                let line = DeductionLine { label: fields[1].to_string(), amount: money(fields[2])? };
                if kind == Section::Withheld {
                    withheld.push(line);
                } else {
                    employer.push(line);
                }
            }
            Section::Contrib => {
                if !fields[1].is_empty() {
                    return Err(err("contributions section carries no values".into()));
                }
            }
            Section::Net => net = Some(money(fields[1])?),
        }
    }
    let last = body.split('\n').count();
    let missing = |what: &str| StatementParseError { line: last, message: format!("missing {what}") };
    if section != Some(Section::Net) {
        return Err(missing("NET as final record"));
    }
    let stmt = EarningStatement {
        employee_id: employee_id.ok_or_else(|| missing("HDR"))?,
        period: period.ok_or_else(|| missing("HDR"))?,
        earnings,
        gross: gross.ok_or_else(|| missing("GROSS"))?,
        withheld,
        employer,
        net: net.ok_or_else(|| missing("NET"))?,
    };
    stmt.check_invariants()
        .map_err(|message| StatementParseError { line: last, message })?;
    Ok(stmt)
}
