//! Searching for low-cost reward machines: random sampling, the one-slot
//! neighbourhood, local search with restarts, tabu search and a brute-force
//! oracle for tiny instances.
//!
//! All searches work on [`TransitionTable`]s over the tree's observed
//! alphabet with exactly `u_max` states. Results are converted back into
//! [`RewardMachine`]s with unreachable states dropped.

mod exact;
mod local;
mod tabu;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objective::Evaluator;
use crate::obs::HighLevelObs;
use crate::prefix_tree::PrefixTree;
use crate::rm::RewardMachine;
use crate::table::{TransitionTable, ABSENT, MAX_STATES};

pub use exact::{
    exact_enumerate, exact_enumerate_with_budget, ExactResult, DEFAULT_ENUMERATION_BUDGET,
};
pub use local::local_search;
pub use tabu::{tabu_search, TabuList};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub u_max: usize,
    pub t_max: usize,
    /// Tabu list capacity; ignored by local search.
    pub tabu_size: usize,
    pub seed: u64,
    /// Only consider machines satisfying self-loop closure.
    pub compressed_mode: bool,
    pub wall_clock_limit: Option<Duration>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            u_max: 10,
            t_max: 100,
            tabu_size: 100,
            seed: 0,
            compressed_mode: false,
            wall_clock_limit: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.u_max == 0 || self.u_max > MAX_STATES {
            return Err(Error::Config(format!(
                "u_max must be in 1..={MAX_STATES}, got {}",
                self.u_max
            )));
        }
        if self.t_max == 0 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        if self.tabu_size == 0 {
            return Err(Error::Config("tabu_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// One row of the progress log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub current_cost: f64,
    pub best_cost: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_rm: RewardMachine,
    /// The best solution as searched, before unreachable states were dropped.
    pub best_table: TransitionTable,
    pub best_cost: f64,
    pub iterations_used: usize,
    /// Random restarts after the initial sample.
    pub restarts: usize,
    pub cost_trajectory: Vec<TrajectoryPoint>,
}

impl SearchResult {
    /// Writes the trajectory as CSV: `iteration,current_cost,best_cost,restarts`.
    pub fn write_progress_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,current_cost,best_cost,restarts")?;
        for p in &self.cost_trajectory {
            writeln!(
                out,
                "{},{},{},{}",
                p.iteration, p.current_cost, p.best_cost, p.restarts
            )?;
        }
        Ok(())
    }
}

/// Draws a table with `u_max` states over `num_syms` symbols.
///
/// Each slot independently picks a uniform target in `0..u_max`; picking the
/// slot's own state leaves it absent. In compressed mode the draw is repaired
/// so that it satisfies self-loop closure: for every symbol, states that are
/// entered on that symbol get their own slot for it cleared.
pub fn sample_table<R: Rng + ?Sized>(
    num_syms: usize,
    u_max: usize,
    compressed: bool,
    rng: &mut R,
) -> TransitionTable {
    let mut table = TransitionTable::new(u_max, num_syms).expect("u_max validated by caller");
    for u in 0..u_max {
        for s in 0..num_syms {
            let to = rng.gen_range(0..u_max);
            if to != u {
                table.set(u, s, Some(to));
            }
        }
    }
    if compressed {
        repair_closure(&mut table);
    }
    table
}

fn repair_closure(table: &mut TransitionTable) {
    let n = table.num_states();
    let mut entered = vec![false; n];
    for s in 0..table.num_syms() {
        entered.iter_mut().for_each(|e| *e = false);
        for u in 0..n {
            let to = table.next(u, s);
            if to != u {
                entered[to] = true;
            }
        }
        for (t, _) in entered.iter().enumerate().filter(|(_, &e)| e) {
            if table.get(t, s) != Some(t) {
                table.set(t, s, None);
            }
        }
    }
    debug_assert!(table.satisfies_closure());
}

/// Samples a random machine over `sigma`; see [`sample_table`].
pub fn sample_random_rm<R: Rng + ?Sized>(
    sigma: &[HighLevelObs],
    u_max: usize,
    compressed: bool,
    rng: &mut R,
) -> Result<RewardMachine> {
    if sigma.is_empty() {
        return Err(Error::Contract(
            "cannot sample over an empty alphabet".into(),
        ));
    }
    if u_max == 0 || u_max > MAX_STATES {
        return Err(Error::Config(format!(
            "u_max must be in 1..={MAX_STATES}, got {u_max}"
        )));
    }
    Ok(sample_table(sigma.len(), u_max, compressed, rng).to_rm(sigma))
}

/// Every table that changes the effective transition of exactly one slot.
///
/// A slot may move to any value in `{absent, 0..u_max}` whose effective
/// target differs from the current one. Neighbours are listed slot by slot,
/// values in canonical order. In compressed mode tables breaking closure are
/// skipped.
pub fn table_neighbours(table: &TransitionTable, compressed: bool) -> Vec<TransitionTable> {
    let n = table.num_states();
    let k = table.num_syms();
    let mut out = Vec::with_capacity(table.num_slots() * n);
    for u in 0..n {
        for s in 0..k {
            let current = table.next(u, s);
            let slot = table.slot_index(u, s);
            let original = table.slots()[slot];
            for value in std::iter::once(ABSENT).chain(0..n as u16) {
                let effective = if value == ABSENT { u } else { value as usize };
                if value == original || effective == current {
                    continue;
                }
                let mut next = table.clone();
                next.set_slot(slot, value);
                if !compressed || next.satisfies_closure() {
                    out.push(next);
                }
            }
        }
    }
    out
}

/// Machine-level neighbourhood. `rm` is padded to `u_max` states.
pub fn neighbours(
    rm: &RewardMachine,
    sigma: &[HighLevelObs],
    u_max: usize,
    compressed: bool,
) -> Result<Vec<RewardMachine>> {
    let table = TransitionTable::from_rm_padded(rm, sigma, u_max)?;
    Ok(table_neighbours(&table, compressed)
        .iter()
        .map(|t| t.to_rm(sigma))
        .collect())
}

/// Shared state for one search run.
pub(crate) struct Run<'a> {
    pub tree: &'a PrefixTree,
    pub cfg: &'a SearchConfig,
    pub evaluator: Evaluator,
    started: Instant,
    pub best: Option<(TransitionTable, f64)>,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl<'a> Run<'a> {
    pub fn new(tree: &'a PrefixTree, cfg: &'a SearchConfig) -> Result<Self> {
        cfg.validate()?;
        if tree.is_empty() {
            return Err(Error::Contract(
                "cannot search on an empty prefix tree".into(),
            ));
        }
        if tree.is_compressed() && !cfg.compressed_mode {
            return Err(Error::Config(
                "the tree was built from compressed traces; enable compressed_mode".into(),
            ));
        }
        Ok(Run {
            tree,
            cfg,
            evaluator: Evaluator::new(tree, cfg.u_max),
            started: Instant::now(),
            best: None,
            trajectory: Vec::new(),
        })
    }

    pub fn out_of_time(&self) -> bool {
        self.cfg
            .wall_clock_limit
            .is_some_and(|limit| self.started.elapsed() >= limit)
    }

    pub fn cost(&self, table: &TransitionTable) -> f64 {
        self.evaluator.cost(table, &mut self.evaluator.scratch())
    }

    /// Costs of `tables`, in order. Large batches are evaluated in parallel.
    pub fn costs(&self, tables: &[TransitionTable]) -> Vec<f64> {
        let work = tables.len() * self.tree.len();
        if work < 50_000 {
            let mut scratch = self.evaluator.scratch();
            tables
                .iter()
                .map(|t| self.evaluator.cost(t, &mut scratch))
                .collect()
        } else {
            tables
                .par_iter()
                .map_init(
                    || self.evaluator.scratch(),
                    |scratch, t| self.evaluator.cost(t, scratch),
                )
                .collect()
        }
    }

    pub fn offer(&mut self, table: &TransitionTable, cost: f64) {
        if self.best.as_ref().map_or(true, |(_, best)| cost < *best) {
            self.best = Some((table.clone(), cost));
        }
    }

    pub fn best_cost(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |(_, c)| *c)
    }

    pub fn record(&mut self, iteration: usize, current_cost: f64, restarts: usize) {
        let best_cost = self.best_cost();
        self.trajectory.push(TrajectoryPoint {
            iteration,
            current_cost,
            best_cost,
            restarts,
        });
    }

    pub fn finish(self, iterations_used: usize, restarts: usize) -> SearchResult {
        let (best_table, best_cost) = self.best.expect("a search evaluates at least one machine");
        SearchResult {
            best_rm: best_table.to_trimmed_rm(self.tree.sigma()),
            best_table,
            best_cost,
            iterations_used,
            restarts,
            cost_trajectory: self.trajectory,
        }
    }
}
