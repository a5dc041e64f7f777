//! The learning objective: weighted log prediction-set sizes over a prefix tree.
//!
//! State bookkeeping on the tree mirrors [`RewardMachine::run_trace`]: a node
//! at depth 1 holds the first observation `σ_0` and the initial state, and a
//! deeper node `n` holds `δ_u(state(p(n)), o(n))`. Node `n` predicts the
//! observations of its children from `(state(n), o(n))`, and that prediction
//! is scored `continuations(n) · ln |N_{state(n), o(n)}|`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::prefix_tree::{NodeId, PrefixTree, ROOT};
use crate::rm::{ClosureViolation, RewardMachine};
use crate::table::TransitionTable;

/// Objective value of one machine on one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct LrmCost {
    pub total: f64,
    pub per_node: Option<BTreeMap<NodeId, f64>>,
}

/// Returns every transition that breaks self-loop closure.
pub fn check_selfloop_closure(rm: &RewardMachine) -> Vec<ClosureViolation> {
    rm.closure_violations()
}

/// Evaluates `rm` on `tree`.
///
/// Fails if the machine mentions propositions the tree's alphabet lacks, or
/// if the tree was built from compressed traces and the machine breaks
/// self-loop closure.
pub fn evaluate(rm: &RewardMachine, tree: &PrefixTree) -> Result<LrmCost> {
    evaluate_impl(rm, tree, false)
}

/// Like [`evaluate`] but also reports each scored node's contribution.
pub fn evaluate_per_node(rm: &RewardMachine, tree: &PrefixTree) -> Result<LrmCost> {
    evaluate_impl(rm, tree, true)
}

fn evaluate_impl(rm: &RewardMachine, tree: &PrefixTree, per_node: bool) -> Result<LrmCost> {
    let alphabet = tree.alphabet();
    for (_, sigma) in rm.transitions().keys() {
        alphabet.check(sigma)?;
    }
    if tree.is_compressed() {
        if let Some(v) = rm.closure_violations().into_iter().next() {
            return Err(Error::ClosureViolation {
                from: v.from,
                obs: alphabet.display(&v.obs),
                to: v.to,
            });
        }
    }
    let table = TransitionTable::from_rm(rm, tree.sigma())?;
    let evaluator = Evaluator::new(tree, table.num_states());
    let mut scratch = evaluator.scratch();
    if per_node {
        let contributions = evaluator.contributions(&table, &mut scratch);
        let total = contributions
            .iter()
            .map(|(_, c)| c)
            .fold(0.0, |acc, c| acc + c);
        Ok(LrmCost {
            total,
            per_node: Some(contributions.into_iter().collect()),
        })
    } else {
        Ok(LrmCost {
            total: evaluator.cost(&table, &mut scratch),
            per_node: None,
        })
    }
}

/// Precomputed, flattened view of a prefix tree for fast repeated evaluation
/// of transition tables with a fixed number of states.
#[derive(Debug, Clone)]
pub struct Evaluator {
    num_states: usize,
    num_syms: usize,
    words: usize,
    /// Parent of each node, `usize::MAX` for depth-1 nodes and the root.
    parent: Vec<usize>,
    sym: Vec<usize>,
    /// Inner nodes with their continuation weights.
    scored: Vec<(usize, f64)>,
    /// Bit set of child symbols for each scored node, `words` words each.
    child_masks: Vec<u64>,
    ln: Vec<f64>,
}

/// Reusable buffers for [`Evaluator::cost`].
#[derive(Debug, Clone)]
pub struct Scratch {
    states: Vec<u32>,
    sets: Vec<u64>,
}

impl Evaluator {
    pub fn new(tree: &PrefixTree, num_states: usize) -> Self {
        let num_syms = tree.sigma().len();
        let words = num_syms.div_ceil(64).max(1);
        let mut parent = Vec::with_capacity(tree.len());
        let mut sym = Vec::with_capacity(tree.len());
        for node in tree.nodes() {
            parent.push(match node.parent {
                Some(p) if p != ROOT => p,
                _ => usize::MAX,
            });
            sym.push(node.sym.unwrap_or(0));
        }
        let mut scored = Vec::new();
        let mut child_masks = Vec::new();
        for n in tree.inner_nodes() {
            let node = tree.node(n);
            scored.push((n, node.continuations as f64));
            let mut mask = vec![0u64; words];
            for &c in node.children.values() {
                let s = sym[c];
                mask[s / 64] |= 1 << (s % 64);
            }
            child_masks.extend(mask);
        }
        let ln = (0..=num_syms)
            .map(|k| if k == 0 { 0.0 } else { (k as f64).ln() })
            .collect();
        Evaluator {
            num_states,
            num_syms,
            words,
            parent,
            sym,
            scored,
            child_masks,
            ln,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_syms(&self) -> usize {
        self.num_syms
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            states: vec![0; self.parent.len()],
            sets: vec![0; self.num_states * self.num_syms * self.words],
        }
    }

    fn propagate(&self, table: &TransitionTable, scratch: &mut Scratch) {
        debug_assert_eq!(table.num_states(), self.num_states);
        debug_assert_eq!(table.num_syms(), self.num_syms);
        let states = &mut scratch.states;
        for n in 1..self.parent.len() {
            let p = self.parent[n];
            states[n] = if p == usize::MAX {
                0
            } else {
                table.next(states[p] as usize, self.sym[n]) as u32
            };
        }
        scratch.sets.iter_mut().for_each(|w| *w = 0);
        for (i, &(n, _)) in self.scored.iter().enumerate() {
            let key = (states[n] as usize * self.num_syms + self.sym[n]) * self.words;
            let mask = &self.child_masks[i * self.words..(i + 1) * self.words];
            for (dst, src) in scratch.sets[key..key + self.words].iter_mut().zip(mask) {
                *dst |= src;
            }
        }
    }

    fn set_size(&self, scratch: &Scratch, n: usize) -> usize {
        let key = (scratch.states[n] as usize * self.num_syms + self.sym[n]) * self.words;
        scratch.sets[key..key + self.words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Objective value of `table`.
    pub fn cost(&self, table: &TransitionTable, scratch: &mut Scratch) -> f64 {
        self.propagate(table, scratch);
        self.scored
            .iter()
            .map(|&(n, w)| w * self.ln[self.set_size(scratch, n)])
            .fold(0.0, |acc, c| acc + c)
    }

    /// Per-node contributions, in node order.
    pub fn contributions(
        &self,
        table: &TransitionTable,
        scratch: &mut Scratch,
    ) -> Vec<(NodeId, f64)> {
        self.propagate(table, scratch);
        self.scored
            .iter()
            .map(|&(n, w)| (n, w * self.ln[self.set_size(scratch, n)]))
            .collect()
    }

    /// RM state assigned to every node (0 for the root).
    pub fn node_states(&self, table: &TransitionTable) -> Vec<usize> {
        let mut scratch = self.scratch();
        self.propagate(table, &mut scratch);
        scratch.states.iter().map(|&s| s as usize).collect()
    }
}
