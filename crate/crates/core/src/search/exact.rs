use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::objective::Evaluator;
use crate::prefix_tree::PrefixTree;
use crate::rm::RewardMachine;
use crate::table::{TransitionTable, ABSENT, MAX_STATES};

/// Largest number of assignments [`exact_enumerate`] will visit.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

const BLOCK: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub rm: RewardMachine,
    pub table: TransitionTable,
    pub cost: f64,
    /// Assignments that were actually scored (after closure filtering).
    pub evaluated: u64,
}

/// Brute-force minimum over every transition table with `u_max` states,
/// using [`DEFAULT_ENUMERATION_BUDGET`].
pub fn exact_enumerate(tree: &PrefixTree, u_max: usize, compressed: bool) -> Result<ExactResult> {
    exact_enumerate_with_budget(tree, u_max, compressed, DEFAULT_ENUMERATION_BUDGET)
}

/// Scores every assignment of every slot to absent or one of the `u_max`
/// states, skipping tables that break closure in compressed mode. Ties go to
/// the first table in canonical order. Refuses instances with more than
/// `budget` assignments.
pub fn exact_enumerate_with_budget(
    tree: &PrefixTree,
    u_max: usize,
    compressed: bool,
    budget: u128,
) -> Result<ExactResult> {
    if u_max == 0 || u_max > MAX_STATES {
        return Err(Error::Config(format!(
            "u_max must be in 1..={MAX_STATES}, got {u_max}"
        )));
    }
    if tree.is_compressed() && !compressed {
        return Err(Error::Config(
            "the tree was built from compressed traces; enable compressed mode".into(),
        ));
    }
    let num_syms = tree.sigma().len();
    let slots = u_max * num_syms;
    let radix = u_max as u128 + 1;
    let total = u32::try_from(slots)
        .ok()
        .and_then(|s| radix.checked_pow(s))
        .unwrap_or(u128::MAX);
    if total > budget {
        return Err(Error::Budget {
            what: format!("enumerating {u_max}-state machines over {num_syms} symbols"),
            needed: total,
            budget,
        });
    }
    let total = total as u64;
    let evaluator = Evaluator::new(tree, u_max);
    let blocks = total.div_ceil(BLOCK);
    let (cost, index, evaluated) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(total);
            let mut table = decode(start, u_max, num_syms);
            let mut scratch = evaluator.scratch();
            let mut best = (f64::INFINITY, u64::MAX, 0u64);
            for i in start..end {
                if i > start {
                    increment(&mut table, u_max);
                }
                if compressed && !table.satisfies_closure() {
                    continue;
                }
                best.2 += 1;
                let c = evaluator.cost(&table, &mut scratch);
                if c < best.0 {
                    best.0 = c;
                    best.1 = i;
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX, 0),
            |a, b| {
                let evaluated = a.2 + b.2;
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    (b.0, b.1, evaluated)
                } else {
                    (a.0, a.1, evaluated)
                }
            },
        );
    // The all-absent table always satisfies closure, so something was scored.
    let table = decode(index, u_max, num_syms);
    Ok(ExactResult {
        rm: table.to_trimmed_rm(tree.sigma()),
        table,
        cost,
        evaluated,
    })
}

fn digit_value(d: u64) -> u16 {
    if d == 0 {
        ABSENT
    } else {
        (d - 1) as u16
    }
}

fn value_digit(v: u16) -> u64 {
    if v == ABSENT {
        0
    } else {
        v as u64 + 1
    }
}

/// Table number `index` in canonical order; slot 0 is the most significant digit.
fn decode(mut index: u64, u_max: usize, num_syms: usize) -> TransitionTable {
    let mut table = TransitionTable::new(u_max, num_syms).expect("u_max validated");
    let radix = u_max as u64 + 1;
    for slot in (0..table.num_slots()).rev() {
        table.set_slot(slot, digit_value(index % radix));
        index /= radix;
    }
    table
}

fn increment(table: &mut TransitionTable, u_max: usize) {
    for slot in (0..table.num_slots()).rev() {
        let d = value_digit(table.slots()[slot]) + 1;
        if d <= u_max as u64 {
            table.set_slot(slot, digit_value(d));
            return;
        }
        table.set_slot(slot, ABSENT);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoding_follows_canonical_order() {
        let mut prev = decode(0, 2, 2);
        let mut t = prev.clone();
        for i in 1..81 {
            increment(&mut t, 2);
            assert_eq!(t, decode(i, 2, 2));
            assert!(prev < t);
            prev = t.clone();
        }
    }
}
