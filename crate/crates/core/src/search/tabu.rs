use std::collections::{HashSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_table, table_neighbours, Run, SearchConfig, SearchResult};
use crate::error::Result;
use crate::prefix_tree::PrefixTree;
use crate::table::TransitionTable;

/// FIFO list of the most recently visited solutions.
#[derive(Debug, Clone)]
pub struct TabuList {
    capacity: usize,
    queue: VecDeque<TransitionTable>,
    members: HashSet<TransitionTable>,
}

impl TabuList {
    pub fn new(capacity: usize) -> Self {
        TabuList {
            capacity: capacity.max(1),
            queue: VecDeque::new(),
            members: HashSet::new(),
        }
    }

    pub fn contains(&self, table: &TransitionTable) -> bool {
        self.members.contains(table)
    }

    /// Appends `table`, evicting the oldest entry when full.
    pub fn push(&mut self, table: TransitionTable) {
        if self.members.contains(&table) {
            return;
        }
        if self.queue.len() == self.capacity {
            if let Some(old) = self.queue.pop_front() {
                self.members.remove(&old);
            }
        }
        self.members.insert(table.clone());
        self.queue.push_back(table);
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

/// Tabu search with restarts.
///
/// The current machine is made tabu and the search moves to the cheapest
/// non-tabu neighbour, even when that is worse. When every neighbour is tabu
/// the current machine stays put, is found in the list, and a fresh random
/// machine is sampled.
///
/// A restart sample that is itself tabu is counted as an iteration, so that
/// instances whose whole space fits in the tabu list still terminate.
pub fn tabu_search(tree: &PrefixTree, cfg: &SearchConfig) -> Result<SearchResult> {
    let mut run = Run::new(tree, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let num_syms = tree.sigma().len();
    let mut tabu = TabuList::new(cfg.tabu_size);
    let mut t = 0;
    let mut samples = 0usize;
    while t <= cfg.t_max && !run.out_of_time() {
        let mut current = sample_table(num_syms, cfg.u_max, cfg.compressed_mode, &mut rng);
        let cost = run.cost(&current);
        samples += 1;
        run.offer(&current, cost);
        run.record(t, cost, samples - 1);
        if tabu.contains(&current) {
            t += 1;
            continue;
        }
        while t <= cfg.t_max && !tabu.contains(&current) && !run.out_of_time() {
            t += 1;
            tabu.push(current.clone());
            let candidates: Vec<TransitionTable> = table_neighbours(&current, cfg.compressed_mode)
                .into_iter()
                .filter(|n| !tabu.contains(n))
                .collect();
            let costs = run.costs(&candidates);
            let mut best = f64::INFINITY;
            let mut chosen = None;
            for (i, &c) in costs.iter().enumerate() {
                if c < best {
                    best = c;
                    chosen = Some(i);
                }
            }
            if let Some(i) = chosen {
                current = candidates
                    .into_iter()
                    .nth(i)
                    .expect("index from the same list");
                run.offer(&current, best);
                run.record(t, best, samples - 1);
            }
        }
    }
    Ok(run.finish(t, samples.saturating_sub(1)))
}
