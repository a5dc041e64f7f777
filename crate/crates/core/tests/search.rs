mod common;

use common::{corpus, random_corpus};
use lrm::search::{exact_enumerate_with_budget, SearchConfig};
use lrm::{evaluate, exact_enumerate, local_search, tabu_search, Error, PrefixTree, RewardMachine};

const TOL: f64 = 1e-9;

fn cfg(u_max: usize, t_max: usize, seed: u64) -> SearchConfig {
    SearchConfig {
        u_max,
        t_max,
        tabu_size: 20,
        seed,
        ..SearchConfig::default()
    }
}

#[test]
fn exact_with_one_state_is_the_single_state_cost() {
    let pt = PrefixTree::build(&corpus(&["abac", "acab", "bba"])).unwrap();
    let single = evaluate(&RewardMachine::single_state(), &pt).unwrap().total;
    let exact = exact_enumerate(&pt, 1, false).unwrap();
    assert!((exact.cost - single).abs() < TOL);
    assert_eq!(exact.rm, RewardMachine::single_state());

    let pt = PrefixTree::build(&corpus(&["ab"])).unwrap();
    assert_eq!(exact_enumerate(&pt, 1, false).unwrap().cost, 0.0);
}

#[test]
fn two_state_optimum_matches_hand_computation() {
    // The first `a` is followed by `b` or `c` in state 0, weight 2. The two
    // later `a` nodes predict `c` and `b`. With two states at most one of
    // them can move out of state 0, and the one left behind pays ln 2, so the
    // optimum is 3 ln 2 against 4 ln 2 for a single state.
    let pt = PrefixTree::build(&corpus(&["abac", "acab"])).unwrap();
    let exact = exact_enumerate(&pt, 2, false).unwrap();
    assert!((exact.cost - 3.0 * 2f64.ln()).abs() < TOL, "{}", exact.cost);
    let single = evaluate(&RewardMachine::single_state(), &pt).unwrap().total;
    assert!((single - 4.0 * 2f64.ln()).abs() < TOL);
    assert!((evaluate(&exact.rm, &pt).unwrap().total - exact.cost).abs() < TOL);

    let ls = (0..10)
        .map(|s| local_search(&pt, &cfg(2, 50, s)).unwrap().best_cost)
        .fold(f64::INFINITY, f64::min);
    let ts = (0..10)
        .map(|s| tabu_search(&pt, &cfg(2, 500, s)).unwrap().best_cost)
        .fold(f64::INFINITY, f64::min);
    assert!((ls - exact.cost).abs() < TOL);
    assert!((ts - exact.cost).abs() < TOL);
}

#[test]
fn searches_match_the_oracle_on_tiny_instances() {
    for instance in 0..8u64 {
        let set = random_corpus(instance, 3, 4, 6);
        let pt = PrefixTree::build(&set).unwrap();
        if pt.len() > 50 {
            continue;
        }
        let exact = exact_enumerate(&pt, 2, false).unwrap();
        let ls = (0..10)
            .map(|s| local_search(&pt, &cfg(2, 100, s)).unwrap().best_cost)
            .fold(f64::INFINITY, f64::min);
        let ts = (0..10)
            .map(|s| tabu_search(&pt, &cfg(2, 500, s)).unwrap().best_cost)
            .fold(f64::INFINITY, f64::min);
        assert!(
            (ls - exact.cost).abs() < TOL,
            "instance {instance}: ls {ls} vs exact {}",
            exact.cost
        );
        assert!(
            (ts - exact.cost).abs() < TOL,
            "instance {instance}: ts {ts} vs exact {}",
            exact.cost
        );
    }
}

#[test]
fn compressed_searches_match_the_compressed_oracle() {
    for instance in 10..14u64 {
        let set = random_corpus(instance, 3, 4, 7).compressed();
        let pt = PrefixTree::build(&set).unwrap();
        let exact = exact_enumerate(&pt, 2, true).unwrap();
        assert!(exact.rm.closure_violations().is_empty());
        let c = |s| SearchConfig {
            compressed_mode: true,
            ..cfg(2, 100, s)
        };
        let ls = (0..10)
            .map(|s| local_search(&pt, &c(s)).unwrap())
            .collect::<Vec<_>>();
        for r in &ls {
            assert!(r.best_rm.closure_violations().is_empty());
        }
        let best = ls.iter().map(|r| r.best_cost).fold(f64::INFINITY, f64::min);
        assert!((best - exact.cost).abs() < TOL);
    }
}

#[test]
fn compressed_tree_requires_compressed_mode() {
    let pt = PrefixTree::build(&corpus(&["abab"]).compressed()).unwrap();
    assert!(matches!(
        local_search(&pt, &cfg(2, 5, 0)),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        exact_enumerate(&pt, 2, false),
        Err(Error::Config(_))
    ));
}

#[test]
fn result_bookkeeping() {
    let pt = PrefixTree::build(&random_corpus(99, 4, 6, 12)).unwrap();
    for result in [
        local_search(&pt, &cfg(3, 40, 1)).unwrap(),
        tabu_search(&pt, &cfg(3, 40, 1)).unwrap(),
    ] {
        let recomputed = evaluate(&result.best_rm, &pt).unwrap().total;
        assert!((recomputed - result.best_cost).abs() < TOL);
        let bests: Vec<f64> = result.cost_trajectory.iter().map(|p| p.best_cost).collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*bests.last().unwrap(), result.best_cost);
        assert!(result
            .cost_trajectory
            .iter()
            .all(|p| p.current_cost >= p.best_cost));
        assert!(result.best_rm.num_states() <= 3);
    }
}

#[test]
fn zero_cost_corpus_is_solved_immediately() {
    let pt = PrefixTree::build(&corpus(&["abcd", "abcd"])).unwrap();
    let r = local_search(&pt, &cfg(4, 10, 3)).unwrap();
    assert_eq!(r.cost_trajectory[0].current_cost, 0.0);
    assert_eq!(r.best_cost, 0.0);
}

#[test]
fn searches_are_reproducible() {
    let pt = PrefixTree::build(&random_corpus(5, 4, 5, 10)).unwrap();
    assert_eq!(
        local_search(&pt, &cfg(3, 30, 7)).unwrap(),
        local_search(&pt, &cfg(3, 30, 7)).unwrap()
    );
    assert_eq!(
        tabu_search(&pt, &cfg(3, 30, 7)).unwrap(),
        tabu_search(&pt, &cfg(3, 30, 7)).unwrap()
    );
}

#[test]
fn best_cost_is_monotone_in_the_iteration_budget() {
    let pt = PrefixTree::build(&random_corpus(6, 4, 8, 10)).unwrap();
    for search in [local_search, tabu_search] {
        let costs: Vec<f64> = [1, 2, 5, 10, 20, 40]
            .iter()
            .map(|&t| search(&pt, &cfg(3, t, 11)).unwrap().best_cost)
            .collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0]), "{costs:?}");
    }
}

#[test]
fn exhausted_tabu_neighbourhood_restarts() {
    // Two states over one symbol: four tables, all of which fit in the list.
    let pt = PrefixTree::build(&corpus(&["aaa"])).unwrap();
    let r = tabu_search(
        &pt,
        &SearchConfig {
            tabu_size: 100,
            ..cfg(2, 20, 0)
        },
    )
    .unwrap();
    assert!(r.restarts >= 1);
    assert!(r.iterations_used > 20);
}

#[test]
fn tabu_of_size_one_may_revisit() {
    // With only the last solution tabu, two states over one symbol bounce
    // between tables without ever exhausting the neighbourhood.
    let pt = PrefixTree::build(&corpus(&["aaa"])).unwrap();
    let r = tabu_search(
        &pt,
        &SearchConfig {
            tabu_size: 1,
            ..cfg(2, 30, 0)
        },
    )
    .unwrap();
    assert_eq!(r.restarts, 0);
    assert!(r.iterations_used > 30);
}

#[test]
fn enumeration_refuses_over_budget() {
    let pt = PrefixTree::build(&corpus(&["abcd"])).unwrap();
    match exact_enumerate_with_budget(&pt, 3, false, 1000) {
        Err(Error::Budget { needed, budget, .. }) => {
            assert_eq!(needed, 4u128.pow(12));
            assert_eq!(budget, 1000);
        }
        other => panic!("expected a budget refusal, got {other:?}"),
    }
}

#[test]
fn progress_csv_has_one_row_per_point() {
    let pt = PrefixTree::build(&corpus(&["abac", "acab"])).unwrap();
    let r = local_search(&pt, &cfg(2, 10, 0)).unwrap();
    let mut buf = Vec::new();
    r.write_progress_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,current_cost,best_cost,restarts")
    );
    assert_eq!(lines.count(), r.cost_trajectory.len());
}
