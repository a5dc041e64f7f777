mod common;

use common::{corpus, random_corpus};
use lrm::models::{
    build_cp, build_milp, export_cp, export_milp, CpModel, MCap, MilpModel, MilpOptions,
};
use lrm::search::sample_table;
use lrm::{evaluate, exact_enumerate, Error, PrefixTree, RewardMachine, TransitionTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

fn fig4() -> PrefixTree {
    PrefixTree::build(&corpus(&["b", "ab", "ac"])).unwrap()
}

#[test]
fn one_state_forces_every_node_into_state_zero() {
    let pt = fig4();
    let model = MilpModel::parse_lp(&export_milp(&pt, 1, false).unwrap()).unwrap();
    let rows: Vec<_> = model
        .constraints
        .iter()
        .filter(|c| c.family() == "(16)")
        .collect();
    assert_eq!(rows.len(), pt.len());
    for (n, c) in rows.iter().enumerate() {
        assert_eq!(c.terms, vec![(1.0, format!("x_{n}_0"))]);
        assert_eq!(c.rhs, 1.0);
    }
    let sub = model
        .substitute_and_score(&RewardMachine::single_state())
        .unwrap();
    assert!(sub.feasible);
    let cost = evaluate(&RewardMachine::single_state(), &pt).unwrap().total;
    assert!((sub.objective - cost).abs() < TOL);

    let cp = CpModel::parse(&export_cp(&pt, 1, false).unwrap()).unwrap();
    assert!(cp.domains.iter().all(|&(_, _, hi)| hi == 0));
    assert!(
        (cp.substitute_and_score(&RewardMachine::single_state())
            .unwrap()
            .objective
            - cost)
            .abs()
            < TOL
    );
}

#[test]
fn exports_round_trip_and_are_deterministic() {
    let pt = PrefixTree::build(&random_corpus(3, 3, 5, 8)).unwrap();
    for compressed in [false, true] {
        let pt = if compressed {
            PrefixTree::build(&random_corpus(3, 3, 5, 8).compressed()).unwrap()
        } else {
            pt.clone()
        };
        let built = build_milp(&pt, 3, compressed, &MilpOptions::default()).unwrap();
        let text = export_milp(&pt, 3, compressed).unwrap();
        assert_eq!(text, export_milp(&pt, 3, compressed).unwrap());
        let parsed = MilpModel::parse_lp(&text).unwrap();
        assert_eq!(parsed.num_constraints(), built.num_constraints());
        assert_eq!(parsed, built);
        assert_eq!(parsed.to_lp(), text);
        let declared = parsed.declared();
        for c in &parsed.constraints {
            assert!(
                c.terms.iter().all(|(_, v)| declared.contains(v.as_str())),
                "{}",
                c.name
            );
        }
        assert_eq!(
            parsed.constraints.iter().any(|c| c.family() == "(19)"),
            compressed
        );

        let cp_text = export_cp(&pt, 3, compressed).unwrap();
        assert_eq!(cp_text, export_cp(&pt, 3, compressed).unwrap());
        let cp = CpModel::parse(&cp_text).unwrap();
        assert_eq!(cp, build_cp(&pt, 3, compressed).unwrap());
        assert_eq!(cp.to_text(), cp_text);
        assert_eq!(cp_text.contains("if_then"), compressed);
    }
}

#[test]
fn substitution_matches_the_objective() {
    for (instance, compressed) in [(1u64, false), (2, false), (3, true), (4, true)] {
        let set = random_corpus(instance, 4, 6, 10);
        let set = if compressed { set.compressed() } else { set };
        let pt = PrefixTree::build(&set).unwrap();
        let milp = MilpModel::parse_lp(&export_milp(&pt, 3, compressed).unwrap()).unwrap();
        let cp = CpModel::parse(&export_cp(&pt, 3, compressed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(instance);
        for _ in 0..25 {
            let rm = sample_table(pt.sigma().len(), 3, compressed, &mut rng).to_rm(pt.sigma());
            let cost = evaluate(&rm, &pt).unwrap().total;
            let a = milp.substitute_and_score(&rm).unwrap();
            let b = cp.substitute_and_score(&rm).unwrap();
            assert!(a.feasible, "{:?}", a.violated);
            assert!(b.feasible, "{:?}", b.violated);
            assert!(
                (a.objective - cost).abs() < TOL,
                "milp {} vs {cost}",
                a.objective
            );
            assert!(
                (b.objective - cost).abs() < TOL,
                "cp {} vs {cost}",
                b.objective
            );
        }
    }
}

#[test]
fn closure_violations_are_reported_by_family() {
    let set = corpus(&["abab", "aab"]).compressed();
    let pt = PrefixTree::build(&set).unwrap();
    let (a, b) = (pt.sigma()[0].clone(), pt.sigma()[1].clone());
    let rm = RewardMachine::new(2)
        .unwrap()
        .with_transition(0, b.clone(), 1)
        .unwrap()
        .with_transition(1, b, 0)
        .unwrap();
    let milp = MilpModel::parse_lp(&export_milp(&pt, 2, true).unwrap()).unwrap();
    let sub = milp.substitute_and_score(&rm).unwrap();
    assert!(!sub.feasible);
    assert_eq!(sub.violated.as_deref(), Some("(19)"));
    let cp = CpModel::parse(&export_cp(&pt, 2, true).unwrap()).unwrap();
    assert_eq!(
        cp.substitute_and_score(&rm).unwrap().violated.as_deref(),
        Some("(29)")
    );
    let fine = RewardMachine::new(2)
        .unwrap()
        .with_transition(0, a, 1)
        .unwrap();
    assert!(milp.substitute_and_score(&fine).unwrap().feasible);
}

fn all_tables(u_max: usize, k: usize) -> Vec<TransitionTable> {
    let slots = u_max * k;
    let mut out = Vec::new();
    let total = (u_max + 1).pow(slots as u32);
    for mut i in 0..total {
        let mut t = TransitionTable::new(u_max, k).unwrap();
        for slot in 0..slots {
            let v = i % (u_max + 1);
            i /= u_max + 1;
            t.set_slot(
                slot,
                if v == u_max {
                    lrm::table::ABSENT
                } else {
                    v as u16
                },
            );
        }
        out.push(t);
    }
    out
}

#[test]
fn model_minimum_equals_the_exact_optimum() {
    for (instance, compressed) in [(21u64, false), (22, false), (23, true)] {
        let set = random_corpus(instance, 3, 3, 6);
        let set = if compressed { set.compressed() } else { set };
        let pt = PrefixTree::build(&set).unwrap();
        let exact = exact_enumerate(&pt, 2, compressed).unwrap();
        let milp = MilpModel::parse_lp(&export_milp(&pt, 2, compressed).unwrap()).unwrap();
        let cp = CpModel::parse(&export_cp(&pt, 2, compressed).unwrap()).unwrap();
        let mut best_milp = f64::INFINITY;
        let mut best_cp = f64::INFINITY;
        for t in all_tables(2, pt.sigma().len()) {
            let rm = t.to_rm(pt.sigma());
            let a = milp.substitute_and_score(&rm).unwrap();
            if a.feasible {
                best_milp = best_milp.min(a.objective);
            }
            let b = cp.substitute_and_score(&rm).unwrap();
            if b.feasible {
                best_cp = best_cp.min(b.objective);
            }
            assert_eq!(a.feasible, b.feasible);
            assert_eq!(a.feasible, !compressed || t.satisfies_closure());
        }
        assert!((best_milp - exact.cost).abs() < TOL);
        assert!((best_cp - exact.cost).abs() < TOL);
    }
}

#[test]
fn full_cardinality_range_is_refused_over_budget() {
    let pt = PrefixTree::build(&random_corpus(7, 4, 40, 30)).unwrap();
    let opts = MilpOptions {
        m_cap: MCap::Full,
        budget: 100,
    };
    match build_milp(&pt, 2, false, &opts) {
        Err(Error::Budget { needed, .. }) => assert_eq!(needed, 2 * 4 * 16),
        other => panic!("expected a budget refusal, got {other:?}"),
    }
    let small = MilpOptions {
        m_cap: MCap::Full,
        budget: 1_000_000,
    };
    let model = build_milp(&pt, 2, false, &small).unwrap();
    assert_eq!(model.meta.m_cap, Some(16));
}

#[test]
fn malformed_models_are_rejected() {
    let pt = fig4();
    let lp = export_milp(&pt, 2, false).unwrap();
    assert!(MilpModel::parse_lp("").is_err());
    assert!(MilpModel::parse_lp(&lp.replace("End\n", "")).is_err());
    assert!(MilpModel::parse_lp(&lp.replace(">= -", ">= x")).is_err());
    assert!(MilpModel::parse_lp(&lp.replace("\\ meta", "\\ nometa")).is_err());
    let cp = export_cp(&pt, 2, false).unwrap();
    assert!(CpModel::parse("").is_err());
    assert!(CpModel::parse(&cp.replace("= or(", "= and(")).is_err());
    assert!(CpModel::parse(&cp.replace("end\n", "")).is_err());
}
