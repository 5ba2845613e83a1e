use payroll_core::testkit::{oracle, random_instance, random_rules, Instance};
use payroll_core::{
    apply_employee_change, apply_rules, compute_gross, compute_period, ChangeRequest,
    CompensationModel, Employee, EmployeeId, Money, PayPeriod, PayRule, Payer, QuarterHours,
    RuleSet, Update,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 20, 5)
}

#[test]
fn engine_matches_brute_force_oracle() {
    for seed in 0..300 {
        let inst = instance(seed);
        let got = compute_period(inst.period, &inst.employees, &inst.timecards, &inst.rules);
        assert_eq!(got.statements, oracle::statements(&inst), "seed {seed}");
        for s in &got.statements {
            let withheld: i64 = s.withheld.iter().map(|l| l.amount.amount_minor()).sum();
            assert_eq!(s.net.amount_minor() + withheld, s.gross.amount_minor());
        }
    }
}

#[test]
fn salaried_statements_sorted_and_repeatable() {
    let emps: Vec<Employee> = ["c", "a", "b"]
        .iter()
        .map(|id| {
            Employee::new(
                EmployeeId::new(*id).unwrap(),
                "S",
                CompensationModel::MonthlySalary { amount: Money::ngn(1_000_000) },
            )
            .unwrap()
        })
        .collect();
    let period: PayPeriod = "2021-06".parse().unwrap();
    let first = compute_period(period, &emps, &[], &RuleSet::fig2_ng());
    let ids: Vec<_> = first.statements.iter().map(|s| s.employee_id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    let second = compute_period(period, &emps, &[], &RuleSet::fig2_ng());
    assert_eq!(first, second);
    let bytes = |r: &payroll_core::PeriodResult| {
        r.statements.iter().map(payroll_core::render_statement).collect::<String>()
    };
    assert_eq!(bytes(&first), bytes(&second));
}

#[test]
fn unapproved_and_missing_cards_warn() {
    let inst = instance(7);
    let mut timecards = inst.timecards.clone();
    for c in &mut timecards {
        c.approved = false;
    }
    let res = compute_period(inst.period, &inst.employees, &timecards, &inst.rules);
    assert!(res
        .statements
        .iter()
        .all(|s| s.earnings[0].hours.is_none()));
    let hourly_active = inst
        .employees
        .iter()
        .filter(|e| {
            oracle::status_at(e, inst.period) == payroll_core::EmployeeStatus::Active
                && e.compensation_at(inst.period).is_hourly()
        })
        .count();
    let skipped = res.warnings.iter().filter(|w| w.contains("no approved time card")).count();
    assert_eq!(skipped, hourly_active);
}

proptest! {
    #[test]
    fn net_plus_withheld_equals_gross(seed in any::<u64>(), gross in 0i64..1_000_000_000) {
        let rules = random_rules(&mut ChaCha8Rng::seed_from_u64(seed), 5);
        if let Ok(b) = apply_rules(Money::ngn(gross), &rules) {
            let withheld: i64 = b.withheld.iter().map(|l| l.amount.amount_minor()).sum();
            prop_assert_eq!(b.net.amount_minor() + withheld, gross);
        }
    }

    #[test]
    fn employer_rules_never_change_net(
        seed in any::<u64>(),
        gross in 0i64..1_000_000_000,
        flat in any::<bool>(),
        value in 0i64..10_000_000,
    ) {
        let rules = random_rules(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        let extra = if flat {
            PayRule::flat("extra", "Extra", Payer::EmployerTax, Money::ngn(value))
        } else {
            PayRule::percent("extra", "Extra", Payer::EmployerTax, (value % 10_001) as u32)
        };
        let mut with_extra = rules.rules().to_vec();
        let pos = (value as usize) % (with_extra.len() + 1);
        with_extra.insert(pos, extra);
        let extended = RuleSet::new("x", with_extra).unwrap();
        let base = apply_rules(Money::ngn(gross), &rules).map(|b| b.net);
        let more = apply_rules(Money::ngn(gross), &extended).map(|b| b.net);
        prop_assert_eq!(base, more);
    }

    #[test]
    fn hourly_gross_is_linear(rate in 0i64..10_000_000, h1 in 0i64..1_000, h2 in 0i64..1_000) {
        let comp = CompensationModel::HourlyRate { rate: Money::ngn(rate) };
        let g = |h: i64| compute_gross(&comp, Some(QuarterHours::from_whole_hours(h))).unwrap().amount_minor();
        prop_assert_eq!(g(h1 + h2), g(h1) + g(h2));
    }

    #[test]
    fn effective_dating_matches_linear_scan(
        months in proptest::collection::vec(1u8..=12, 0..6),
        query in 1u8..=12,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut months = months;
        months.sort();
        let mut emp = Employee::new(
            EmployeeId::new("p").unwrap(),
            "P",
            payroll_core::testkit::random_compensation(&mut rng),
        ).unwrap();
        for m in months {
            let req = ChangeRequest {
                effective_period: PayPeriod::new(2022, m).unwrap(),
                description: "c".into(),
                update: Update::Compensation(payroll_core::testkit::random_compensation(&mut rng)),
            };
            emp = apply_employee_change(&emp, req).unwrap();
        }
        let p = PayPeriod::new(2022, query).unwrap();
        prop_assert_eq!(emp.compensation_at(p), oracle::compensation_at(&emp, p));
        prop_assert_eq!(emp.version, 1 + emp.changes.len() as u64);
    }
}
