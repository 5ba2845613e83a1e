//! Fixtures, seeded generators and a brute-force reference for tests.
//!
//! The reference computation in [`oracle`] is written straight-line against
//! raw integers and shares no code with the engine beyond the data types.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::employee::{
    apply_employee_change, ChangeRequest, CompensationModel, Employee, EmployeeId,
    EmployeeStatus, Update,
};
use crate::hours::QuarterHours;
use crate::money::Money;
use crate::period::PayPeriod;
use crate::rules::{DeductionLine, PayRule, Payer, RuleSet};
use crate::statement::{EarningLine, EarningStatement};
use crate::timecard::TimeCard;

/// Period used for the reference statement (the source leaves it unstated).
pub fn fig2_period() -> PayPeriod {
    PayPeriod::new(2021, 6).unwrap()
}

/// Hourly employee at N2,500.00 per hour.
pub fn fig2_employee() -> Employee {
    Employee::new(
        EmployeeId::new("e1").unwrap(),
        "Regular Employee",
        CompensationModel::HourlyRate { rate: Money::ngn(250_000) },
    )
    .unwrap()
}

/// 45 approved, verified hours.
pub fn fig2_timecard() -> TimeCard {
    TimeCard {
        employee_id: EmployeeId::new("e1").unwrap(),
        period: fig2_period(),
        hours: QuarterHours::from_whole_hours(45),
        approved: true,
        verified: true,
    }
}

pub fn fig2_statement() -> EarningStatement {
    let line = |label: &str, naira: i64| DeductionLine { label: label.into(), amount: Money::ngn(naira * 100) };
    EarningStatement {
        employee_id: EmployeeId::new("e1").unwrap(),
        period: fig2_period(),
        earnings: vec![EarningLine {
            description: "Regular pay".into(),
            rate: Money::ngn(250_000),
            hours: Some(QuarterHours::from_whole_hours(45)),
            current: Money::ngn(11_250_000),
        }],
        gross: Money::ngn(11_250_000),
        withheld: vec![
            line("Federal Income Tax", 11_250),
            line("Fees & Tolls", 250),
            line("State Income Tax", 250),
        ],
        employer: vec![line("Medicare", 400), line("Insurance", 300)],
        net: Money::ngn(10_075_000),
    }
}

const LABEL_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 &-.,()";

fn label<R: Rng>(rng: &mut R) -> String {
    let len = rng.gen_range(1..=20);
    let mut s: String = (0..len)
        .map(|_| *LABEL_CHARS.choose(rng).unwrap() as char)
        .collect();
    if s.trim().is_empty() {
        s.push('x');
    }
    s
}

fn ident<R: Rng>(rng: &mut R, prefix: &str) -> String {
    format!("{prefix}{}", rng.gen_range(0..100_000))
}

pub fn random_period<R: Rng>(rng: &mut R) -> PayPeriod {
    PayPeriod::new(rng.gen_range(2000..=2030), rng.gen_range(1..=12)).unwrap()
}

/// Any statement satisfying the statement invariants, including ones the
/// engine would never emit (several earnings lines, zero amounts).
pub fn random_statement<R: Rng>(rng: &mut R) -> EarningStatement {
    let earnings: Vec<EarningLine> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let rate = Money::ngn(rng.gen_range(0..2_000_000));
            if rng.gen_bool(0.5) {
                let hours = QuarterHours::new(rng.gen_range(0..=4 * 744));
                let current = Money::ngn(rng.gen_range(0..50_000_000));
                EarningLine { description: label(rng), rate, hours: Some(hours), current }
            } else {
                EarningLine { description: label(rng), rate, hours: None, current: rate }
            }
        })
        .collect();
    let gross: i64 = earnings.iter().map(|l| l.current.amount_minor()).sum();
    let mut remaining = gross;
    let withheld = (0..rng.gen_range(0..=4))
        .map(|_| {
            let amount = if remaining > 0 { rng.gen_range(0..=remaining / 2) } else { 0 };
            remaining -= amount;
            DeductionLine { label: label(rng), amount: Money::ngn(amount) }
        })
        .collect::<Vec<_>>();
    let employer = (0..rng.gen_range(0..=3))
        .map(|_| DeductionLine { label: label(rng), amount: Money::ngn(rng.gen_range(0..1_000_000)) })
        .collect();
    EarningStatement {
        employee_id: EmployeeId::new(ident(rng, "emp-")).unwrap(),
        period: random_period(rng),
        earnings,
        gross: Money::ngn(gross),
        withheld,
        employer,
        net: Money::ngn(remaining),
    }
}

/// A small payroll instance: roster with change histories, time cards, rules.
#[derive(Debug, Clone)]
pub struct Instance {
    pub period: PayPeriod,
    pub employees: Vec<Employee>,
    pub timecards: Vec<TimeCard>,
    pub rules: RuleSet,
}

pub fn random_compensation<R: Rng>(rng: &mut R) -> CompensationModel {
    match rng.gen_range(0..3) {
        0 => CompensationModel::HourlyRate { rate: Money::ngn(rng.gen_range(0..1_000_000)) },
        1 => CompensationModel::MonthlySalary { amount: Money::ngn(rng.gen_range(0..50_000_000)) },
        _ => CompensationModel::AnnualContract { amount: Money::ngn(rng.gen_range(0..600_000_000)) },
    }
}

pub fn random_rules<R: Rng>(rng: &mut R, max_rules: usize) -> RuleSet {
    let rules = (0..rng.gen_range(0..=max_rules))
        .map(|i| {
            let payer = if rng.gen_bool(0.6) { Payer::EmployeeWithheld } else { Payer::EmployerTax };
            let id = format!("rule{i}");
            if rng.gen_bool(0.5) {
                PayRule::percent(&id, &label(rng), payer, rng.gen_range(0..=3_000))
            } else {
                PayRule::flat(&id, &label(rng), payer, Money::ngn(rng.gen_range(0..5_000_000)))
            }
        })
        .collect();
    RuleSet::new("random", rules).unwrap()
}

pub fn random_instance<R: Rng>(rng: &mut R, max_employees: usize, max_rules: usize) -> Instance {
    let period = PayPeriod::new(2021, rng.gen_range(3..=9)).unwrap();
    let count = rng.gen_range(0..=max_employees);
    let mut ids: Vec<String> = (0..count).map(|i| format!("e{i:02}")).collect();
    ids.shuffle(rng);
    let mut employees = Vec::new();
    let mut timecards = Vec::new();
    for id in ids {
        let id = EmployeeId::new(id).unwrap();
        let mut emp = Employee::new(id.clone(), "Staff", random_compensation(rng)).unwrap();
        let mut month = 1u8;
        for _ in 0..rng.gen_range(0..=3) {
            month = (month + rng.gen_range(0..=4)).min(12);
            let update = if rng.gen_bool(0.25) {
                let status = if rng.gen_bool(0.5) { EmployeeStatus::Terminated } else { EmployeeStatus::Active };
                Update::Status(status)
            } else {
                Update::Compensation(random_compensation(rng))
            };
            let request = ChangeRequest {
                effective_period: PayPeriod::new(2021, month).unwrap(),
                description: "change".into(),
                update,
            };
            emp = apply_employee_change(&emp, request).unwrap();
        }
        if rng.gen_bool(0.8) {
            for _ in 0..rng.gen_range(1..=2) {
                timecards.push(TimeCard {
                    employee_id: id.clone(),
                    period: if rng.gen_bool(0.85) { period } else { period.next() },
                    hours: QuarterHours::new(rng.gen_range(0..=4 * 250)),
                    approved: rng.gen_bool(0.85),
                    verified: rng.gen_bool(0.9),
                });
            }
        }
        employees.push(emp);
    }
    Instance { period, employees, timecards, rules: random_rules(rng, max_rules) }
}

/// Straight-line reference implementation over raw integers.
pub mod oracle {
    use super::*;
    use crate::employee::ChangeKind;

    /// Rounded-half-up quotient via quotient and remainder.
    fn round_half_up(numerator: i128, denominator: i128) -> i64 {
        let q = numerator / denominator;
        let r = numerator % denominator;
        (if 2 * r >= denominator { q + 1 } else { q }) as i64
    }

    /// Last change effective on or before `period` wins; before any change,
    /// the value the first change replaced.
    pub fn compensation_at(emp: &Employee, period: PayPeriod) -> CompensationModel {
        let comp_changes: Vec<_> = emp
            .changes
            .iter()
            .filter_map(|c| match &c.kind {
                ChangeKind::Compensation { old, new } => Some((c.effective_period, *old, *new)),
                _ => None,
            })
            .collect();
        for (eff, _, new) in comp_changes.iter().rev() {
            if *eff <= period {
                return *new;
            }
        }
        comp_changes.first().map(|c| c.1).unwrap_or(emp.compensation)
    }

    pub fn status_at(emp: &Employee, period: PayPeriod) -> EmployeeStatus {
        let status_changes: Vec<_> = emp
            .changes
            .iter()
            .filter_map(|c| match &c.kind {
                ChangeKind::Status { old, new } => Some((c.effective_period, *old, *new)),
                _ => None,
            })
            .collect();
        for (eff, _, new) in status_changes.iter().rev() {
            if *eff <= period {
                return *new;
            }
        }
        status_changes.first().map(|c| c.1).unwrap_or(emp.status)
    }

    pub fn statements(instance: &Instance) -> Vec<EarningStatement> {
        let period = instance.period;
        let mut out = Vec::new();
        let mut ids: Vec<&EmployeeId> = instance.employees.iter().map(|e| &e.id).collect();
        ids.sort();
        for id in ids {
            let emp = instance.employees.iter().find(|e| &e.id == id).unwrap();
            if status_at(emp, period) != EmployeeStatus::Active {
                continue;
            }
            let comp = compensation_at(emp, period);
            let (description, rate, hours, gross) = match comp {
                CompensationModel::HourlyRate { rate } => {
                    let good: Vec<_> = instance
                        .timecards
                        .iter()
                        .filter(|c| &c.employee_id == id && c.period == period && c.approved && c.verified)
                        .collect();
                    if good.is_empty() {
                        continue;
                    }
                    let quarters: i64 = good.iter().map(|c| c.hours.quarters()).sum();
                    let gross = round_half_up(i128::from(rate.amount_minor()) * i128::from(quarters), 4);
                    ("Regular pay", rate.amount_minor(), Some(QuarterHours::new(quarters)), gross)
                }
                CompensationModel::MonthlySalary { amount } => {
                    ("Monthly salary", amount.amount_minor(), None, amount.amount_minor())
                }
                CompensationModel::AnnualContract { amount } => {
                    let g = round_half_up(i128::from(amount.amount_minor()), 12);
                    ("Contract salary", g, None, g)
                }
            };
            let mut withheld = Vec::new();
            let mut employer = Vec::new();
            let mut withheld_total = 0i64;
            for rule in instance.rules.rules() {
                let amount = match rule.basis {
                    crate::rules::RuleBasis::FlatAmount { amount } => amount.amount_minor(),
                    crate::rules::RuleBasis::PercentOfGross { basis_points } => {
                        round_half_up(i128::from(gross) * i128::from(basis_points), 10_000)
                    }
                };
                let line = DeductionLine { label: rule.label.clone(), amount: Money::ngn(amount) };
                if rule.payer == Payer::EmployeeWithheld {
                    withheld_total += amount;
                    withheld.push(line);
                } else {
                    employer.push(line);
                }
            }
            if withheld_total > gross {
                continue;
            }
            out.push(EarningStatement {
                employee_id: id.clone(),
                period,
                earnings: vec![EarningLine {
                    description: description.into(),
                    rate: Money::ngn(rate),
                    hours,
                    current: Money::ngn(gross),
                }],
                gross: Money::ngn(gross),
                withheld,
                employer,
                net: Money::ngn(gross - withheld_total),
            });
        }
        out
    }
}
