//! Deduction and employer-tax rules applied to gross pay.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_text, PayrollError};
use crate::money::Money;

/// Identifier of the built-in rule set reproducing the reference statement.
pub const FIG2_NG: &str = "FIG2-NG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payer {
    /// Deducted from the employee's gross.
    EmployeeWithheld,
    /// Paid by the employer on top of gross; never reduces net.
    EmployerTax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleBasis {
    FlatAmount { amount: Money },
    /// Rate in basis points (1/100 of a percent), 0..=10000.
    PercentOfGross { basis_points: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayRule {
    pub id: String,
    pub label: String,
    pub payer: Payer,
    pub basis: RuleBasis,
}

impl PayRule {
    pub fn flat(id: &str, label: &str, payer: Payer, amount: Money) -> Self {
        PayRule {
            id: id.to_string(),
            label: label.to_string(),
            payer,
            basis: RuleBasis::FlatAmount { amount },
        }
    }

    pub fn percent(id: &str, label: &str, payer: Payer, basis_points: u32) -> Self {
        PayRule {
            id: id.to_string(),
            label: label.to_string(),
            payer,
            basis: RuleBasis::PercentOfGross { basis_points },
        }
    }

    fn validate(&self) -> Result<(), PayrollError> {
        let invalid = |reason: &str| PayrollError::InvalidRule {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.is_empty() {
            return Err(invalid("empty id"));
        }
        check_text(&self.label)?;
        match self.basis {
            RuleBasis::FlatAmount { amount } if amount.is_negative() => {
                Err(invalid("flat amount must not be negative"))
            }
            RuleBasis::PercentOfGross { basis_points } if basis_points > 10_000 => {
                Err(invalid("basis points must be within 0..=10000"))
            }
            _ => Ok(()),
        }
    }

    /// The amount this rule yields for `gross`.
    pub fn amount_for(&self, gross: Money) -> Result<Money, PayrollError> {
        match self.basis {
            RuleBasis::FlatAmount { amount } => {
                if amount.currency() != gross.currency() {
                    return Err(crate::money::MoneyError::CurrencyMismatch(
                        gross.currency(),
                        amount.currency(),
                    )
                    .into());
                }
                Ok(amount)
            }
            RuleBasis::PercentOfGross { basis_points } => {
                Ok(gross.mul_ratio_round_half_up(i64::from(basis_points), 10_000)?)
            }
        }
    }
}

/// An ordered list of rules; evaluation follows list order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RuleSetRaw")]
pub struct RuleSet {
    id: String,
    rules: Vec<PayRule>,
}

#[derive(Deserialize)]
struct RuleSetRaw {
    id: String,
    rules: Vec<PayRule>,
}

impl TryFrom<RuleSetRaw> for RuleSet {
    type Error = PayrollError;

    fn try_from(raw: RuleSetRaw) -> Result<Self, Self::Error> {
        RuleSet::new(raw.id, raw.rules)
    }
}

impl RuleSet {
    pub fn new(id: impl Into<String>, rules: Vec<PayRule>) -> Result<Self, PayrollError> {
        let mut seen = HashSet::new();
        for rule in &rules {
            rule.validate()?;
            if !seen.insert(rule.id.as_str()) {
                return Err(PayrollError::DuplicateRuleId(rule.id.clone()));
            }
        }
        Ok(RuleSet { id: id.into(), rules })
    }

    pub fn empty(id: impl Into<String>) -> Self {
        RuleSet { id: id.into(), rules: Vec::new() }
    }

    /// The built-in Nigerian rule set behind the reference earning statement:
    /// 10% federal income tax, flat fees and state tax, flat employer lines.
    pub fn fig2_ng() -> Self {
        use Payer::*;
        RuleSet::new(
            FIG2_NG,
            vec![
                PayRule::percent("federal", "Federal Income Tax", EmployeeWithheld, 1_000),
                PayRule::flat("fees", "Fees & Tolls", EmployeeWithheld, Money::ngn(25_000)),
                PayRule::flat("state", "State Income Tax", EmployeeWithheld, Money::ngn(25_000)),
                PayRule::flat("medicare", "Medicare", EmployerTax, Money::ngn(40_000)),
                PayRule::flat("insurance", "Insurance", EmployerTax, Money::ngn(30_000)),
            ],
        )
        .expect("built-in rule set is valid")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn rules(&self) -> &[PayRule] {
        &self.rules
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductionLine {
    pub label: String,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Breakdown {
    pub withheld: Vec<DeductionLine>,
    pub employer: Vec<DeductionLine>,
    pub net: Money,
}

/// Evaluates `rules` against `gross`.
///
/// Fails with [`PayrollError::NegativeNet`] when withholdings exceed gross.
pub fn apply_rules(gross: Money, rules: &RuleSet) -> Result<Breakdown, PayrollError> {
    let mut withheld = Vec::new();
    let mut employer = Vec::new();
    for rule in &rules.rules {
        let line = DeductionLine {
            label: rule.label.clone(),
            amount: rule.amount_for(gross)?,
        };
        match rule.payer {
            Payer::EmployeeWithheld => withheld.push(line),
            Payer::EmployerTax => employer.push(line),
        }
    }
    let total_withheld = Money::sum(gross.currency(), withheld.iter().map(|l| &l.amount))?;
    let net = gross.checked_sub(total_withheld)?;
    if net.is_negative() {
        return Err(PayrollError::NegativeNet { gross, withheld: total_withheld });
    }
    Ok(Breakdown { withheld, employer, net })
}

/// Rule sets addressable by id; always contains the built-in set.
#[derive(Debug, Clone)]
pub struct RuleSetCatalog {
    sets: BTreeMap<String, RuleSet>,
}

impl Default for RuleSetCatalog {
    fn default() -> Self {
        let mut sets = BTreeMap::new();
        sets.insert(FIG2_NG.to_string(), RuleSet::fig2_ng());
        RuleSetCatalog { sets }
    }
}

impl RuleSetCatalog {
    /// Adds or replaces a rule set.
    pub fn insert(&mut self, set: RuleSet) {
        self.sets.insert(set.id.clone(), set);
    }

    pub fn get(&self, id: &str) -> Option<&RuleSet> {
        self.sets.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }
}
