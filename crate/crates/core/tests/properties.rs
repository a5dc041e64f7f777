//! Property tests for the invariants of traces, trees, machines and search.
#![allow(clippy::needless_range_loop)]

use lrm::search::{exact_enumerate, sample_random_rm};
use lrm::{evaluate, Alphabet, HighLevelObs, LabelledTrace, PrefixTree, RewardMachine, TraceSet};
use lrm::{local_search, tabu_search, SearchConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn alphabet() -> Alphabet {
    Alphabet::new(["p", "q", "r"]).unwrap()
}

fn obs(mask: u8) -> HighLevelObs {
    HighLevelObs::from_ids((0..3).filter(|i| mask & (1 << i) != 0))
}

/// Traces over the 8 subsets of three propositions, with small integer rewards.
fn corpus_strategy(max_traces: usize, max_len: usize, syms: u8) -> impl Strategy<Value = TraceSet> {
    prop::collection::vec(
        prop::collection::vec((0..syms, -2i8..=2), 1..=max_len),
        1..=max_traces,
    )
    .prop_map(|traces| {
        let traces = traces
            .into_iter()
            .map(|steps| {
                let o: Vec<_> = steps.iter().map(|&(m, _)| obs(m)).collect();
                let r: Vec<_> = steps.iter().skip(1).map(|&(_, r)| r as f64).collect();
                LabelledTrace::new(o, r).unwrap()
            })
            .collect();
        TraceSet::from_traces(alphabet(), traces).unwrap()
    })
}

fn rm_strategy(max_states: usize) -> impl Strategy<Value = RewardMachine> {
    (1..=max_states)
        .prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0u8..8, 0..n), 0..12)))
        .prop_map(|(n, edges)| {
            let mut rm = RewardMachine::new(n).unwrap();
            for (from, m, to) in edges {
                rm.set_transition(from, obs(m), to).unwrap();
            }
            rm
        })
}

/// Closure-respecting version: drops edges that break closure.
fn closed(mut rm: RewardMachine) -> RewardMachine {
    loop {
        let v = rm.closure_violations();
        let Some(v) = v.first() else { return rm };
        rm.remove_transition(v.from, &v.obs);
    }
}

/// The objective computed trace by trace, without a tree.
fn flat_cost(rm: &RewardMachine, corpus: &TraceSet) -> f64 {
    let n = rm.prediction_sets(corpus);
    let mut total = 0.0;
    for trace in corpus.traces() {
        let states = rm.run_trace(trace);
        for (&u, sigma) in states.iter().zip(trace.obs()).take(trace.len() - 1) {
            total += (n.get(u, sigma).unwrap().len() as f64).ln();
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tree_and_flat_objectives_agree(corpus in corpus_strategy(6, 8, 8), rm in rm_strategy(4)) {
        let tree = PrefixTree::build(&corpus).unwrap();
        let tree_cost = evaluate(&rm, &tree).unwrap().total;
        prop_assert!((tree_cost - flat_cost(&rm, &corpus)).abs() < 1e-9);
    }

    #[test]
    fn compressed_runs_visit_the_same_states(corpus in corpus_strategy(4, 12, 4), rm in rm_strategy(3)) {
        let rm = closed(rm);
        for trace in corpus.traces() {
            let raw = rm.run_trace(trace);
            let comp = trace.compress();
            let short = rm.run_trace(&comp);
            prop_assert_eq!(raw.last(), short.last());
            prop_assert_eq!((comp.total_reward() - trace.total_reward()).abs() < 1e-9, true);
            prop_assert_eq!(comp.compress(), comp.clone());
            // Every kept position maps to the state after its run.
            let mut k = 0;
            for (t, s) in trace.obs().iter().enumerate() {
                if t >= 2 && *s == trace.obs()[t - 1] {
                    prop_assert_eq!(raw[t], short[k]);
                } else {
                    if t > 0 { k += 1; }
                    prop_assert_eq!(raw[t], short[k]);
                }
            }
        }
    }

    #[test]
    fn prediction_sets_cover_the_corpus(corpus in corpus_strategy(6, 8, 8), rm in rm_strategy(4)) {
        let n = rm.prediction_sets(&corpus);
        for trace in corpus.traces() {
            let states = rm.run_trace(trace);
            for t in 0..trace.len() - 1 {
                prop_assert!(n.contains(states[t], &trace.obs()[t], &trace.obs()[t + 1]));
            }
        }
    }

    #[test]
    fn estimated_rewards_stay_in_range(corpus in corpus_strategy(6, 8, 8), rm in rm_strategy(4)) {
        let all: Vec<f64> = corpus.traces().iter().flat_map(|t| t.rewards().to_vec()).collect();
        let lo = all.iter().copied().fold(0.0, f64::min);
        let hi = all.iter().copied().fold(0.0, f64::max);
        for (_, r) in rm.estimate_delta_r(&corpus, 1e-6).unwrap() {
            prop_assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
        }
    }

    #[test]
    fn trace_order_does_not_matter(corpus in corpus_strategy(6, 8, 8), rm in rm_strategy(4)) {
        let mut reversed: Vec<_> = corpus.traces().to_vec();
        reversed.reverse();
        let other = TraceSet::from_traces(alphabet(), reversed).unwrap();
        let a = evaluate(&rm, &PrefixTree::build(&corpus).unwrap()).unwrap().total;
        let b = evaluate(&rm, &PrefixTree::build(&other).unwrap()).unwrap().total;
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn cost_is_non_negative_and_single_state_is_an_upper_bound_for_exact(corpus in corpus_strategy(4, 6, 3)) {
        let tree = PrefixTree::build(&corpus).unwrap();
        let single = evaluate(&RewardMachine::single_state(), &tree).unwrap().total;
        let exact = exact_enumerate(&tree, 2, false).unwrap();
        prop_assert!(exact.cost >= 0.0);
        prop_assert!(exact.cost <= single + 1e-9);
        prop_assert!((evaluate(&exact.rm, &tree).unwrap().total - exact.cost).abs() < 1e-9);
    }

    #[test]
    fn heuristics_never_beat_the_exact_minimum(corpus in corpus_strategy(4, 6, 3), seed in any::<u64>(), compressed in any::<bool>()) {
        let corpus = if compressed { corpus.compressed() } else { corpus };
        let tree = PrefixTree::build(&corpus).unwrap();
        let exact = exact_enumerate(&tree, 2, compressed).unwrap();
        let cfg = SearchConfig { u_max: 2, t_max: 20, tabu_size: 10, seed, compressed_mode: compressed, wall_clock_limit: None };
        for found in [local_search(&tree, &cfg).unwrap(), tabu_search(&tree, &cfg).unwrap()] {
            prop_assert!(exact.cost <= found.best_cost + 1e-9);
            prop_assert!((evaluate(&found.best_rm, &tree).unwrap().total - found.best_cost).abs() < 1e-9);
            if compressed {
                prop_assert!(found.best_rm.closure_violations().is_empty());
            }
        }
    }

    #[test]
    fn trace_files_round_trip(corpus in corpus_strategy(5, 6, 8), compress in any::<bool>()) {
        let corpus = if compress { corpus.compressed() } else { corpus };
        let text = corpus.to_jsonl_string();
        prop_assert_eq!(TraceSet::from_jsonl_str(&text).unwrap(), corpus);
    }

    #[test]
    fn machine_json_round_trips(rm in rm_strategy(4), corpus in corpus_strategy(3, 5, 8)) {
        let mut rm = rm;
        rm.fit_rewards(&corpus, 1e-6).unwrap();
        let (back, ab) = RewardMachine::from_json(&rm.to_json(&alphabet())).unwrap();
        prop_assert_eq!(&ab, &alphabet());
        prop_assert_eq!(back, rm);
    }

    #[test]
    fn sampled_machines_respect_closure_in_compressed_mode(seed in any::<u64>(), u_max in 1usize..6) {
        let sigma: Vec<_> = (0u8..8).map(obs).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rm = sample_random_rm(&sigma, u_max, true, &mut rng).unwrap();
        prop_assert!(rm.closure_violations().is_empty());
        prop_assert!(rm.num_states() <= u_max);
    }
}

#[test]
fn flat_cost_matches_a_hand_count() {
    // (p, q, p, r): after p comes q or r, so 2 ln 2.
    let t = LabelledTrace::new(vec![obs(1), obs(2), obs(1), obs(4)], vec![0.0; 3]).unwrap();
    let corpus = TraceSet::from_traces(alphabet(), vec![t]).unwrap();
    let cost = flat_cost(&RewardMachine::single_state(), &corpus);
    assert!((cost - 2.0 * 2f64.ln()).abs() < 1e-12);
}
