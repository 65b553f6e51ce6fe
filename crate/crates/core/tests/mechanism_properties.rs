mod common;

use intersection_game::equilibrium::{classify, closed_form_equilibria, CaseLabel};
use intersection_game::mechanism::{
    run_direct_mechanism, table1_assign, verify_strategy_proofness, MechanismSource,
};
use intersection_game::payoff::expected_agent_cost;
use intersection_game::{fcfs_allocate, CostModel, Lottery, Rational};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allocation_is_the_weighted_fcfs_image(s in common::scenario()) {
        let out = match run_direct_mechanism(&s, CostModel::Quadratic, MechanismSource::Table1) {
            Ok(out) => out,
            Err(_) => return Ok(()), // off-grid assignment
        };
        let mut raw = Vec::new();
        for (p, r) in out.assigned.branches() {
            for (q, a) in fcfs_allocate(&s, *r).unwrap().branches() {
                raw.push((*p * *q, *a));
            }
        }
        prop_assert_eq!(&out.allocation, &Lottery::from_branches(raw));
        let total: Rational = out.allocation.branches().iter().map(|(p, _)| *p).sum();
        prop_assert_eq!(total, Rational::from_integer(1));
    }

    #[test]
    fn reported_violations_replay(s in common::scenario()) {
        let model = CostModel::Quadratic;
        let report = verify_strategy_proofness(&s, model, MechanismSource::TruthfulFcfs).unwrap();
        for v in &report.violations {
            let truthful = run_direct_mechanism(&s, model, MechanismSource::TruthfulFcfs).unwrap();
            let lie = s.with_profile(v.agent, v.misreport).unwrap();
            let deviating = run_direct_mechanism(&lie, model, MechanismSource::TruthfulFcfs).unwrap();
            prop_assert_eq!(expected_agent_cost(model, &truthful.allocation, &s, v.agent), v.truthful_cost);
            prop_assert_eq!(expected_agent_cost(model, &deviating.allocation, &s, v.agent), v.deviating_cost);
            prop_assert!(v.deviating_cost < v.truthful_cost);
        }
    }
}

#[test]
fn table_fires_for_every_scenario_with_matching_label() {
    for dt in [2, 4] {
        for s in common::all_scenarios(8, dt) {
            let t = table1_assign(&s);
            assert_eq!(t.label, classify(&s).label);
            let n = t.assigned.branches().len();
            assert!(n == 1 || n == 2, "{s}");
        }
    }
}

#[test]
fn second_family_pairs_share_one_allocation() {
    for dt in [2, 4] {
        for s in common::all_scenarios(10, dt) {
            let cf = closed_form_equilibria(&s);
            if cf.classification.label != CaseLabel::Lemma2 {
                continue;
            }
            let d1 = cf.classification.roles.lead_desired;
            let images: Vec<_> = cf
                .set
                .iter()
                .filter(|r| r.get(cf.classification.roles.lead) == d1)
                .map(|r| fcfs_allocate(&s, *r).unwrap())
                .collect();
            assert!(images.windows(2).all(|w| w[0] == w[1]), "{s}");
        }
    }
}

#[test]
fn no_conflict_passes_through_for_both_sources() {
    let s = intersection_game::Scenario::from_units(1, (0, 20), 4, (0, 4), (0, 10)).unwrap();
    for source in [MechanismSource::Table1, MechanismSource::OracleSelection] {
        let out = run_direct_mechanism(&s, CostModel::Quadratic, source).unwrap();
        assert_eq!(out.allocation.as_certain().unwrap().to_string(), "(4,10)");
        let sp = verify_strategy_proofness(&s, CostModel::Quadratic, source).unwrap();
        assert_eq!(sp.violation_count(), 0);
    }
}
