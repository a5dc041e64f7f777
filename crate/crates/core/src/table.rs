//! Dense transition tables over an observed alphabet, the representation the
//! search works on.

use crate::error::{Error, Result};
use crate::obs::HighLevelObs;
use crate::rm::{RewardMachine, StateId};

/// Slot value for "no explicit transition" (self-loop).
pub const ABSENT: u16 = u16::MAX;

/// Largest supported `u_max`.
pub const MAX_STATES: usize = ABSENT as usize;

/// Transition map of a machine with `num_states` states over `num_syms`
/// observed symbols. Slot `u * num_syms + s` holds the explicit target of
/// `(u, s)` or [`ABSENT`].
///
/// The slot vector doubles as the canonical serialisation: two tables are the
/// same solution iff their slots are equal. Tables are ordered
/// lexicographically by slot, with `ABSENT` before every explicit target;
/// this is the canonical enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionTable {
    num_states: usize,
    num_syms: usize,
    slots: Vec<u16>,
}

impl TransitionTable {
    pub fn new(num_states: usize, num_syms: usize) -> Result<Self> {
        if num_states == 0 || num_states > MAX_STATES {
            return Err(Error::Config(format!(
                "number of states must be in 1..={MAX_STATES}, got {num_states}"
            )));
        }
        Ok(TransitionTable {
            num_states,
            num_syms,
            slots: vec![ABSENT; num_states * num_syms],
        })
    }

    /// Projects a machine onto `sigma`. Transitions on observations outside
    /// `sigma` are dropped.
    pub fn from_rm(rm: &RewardMachine, sigma: &[HighLevelObs]) -> Result<Self> {
        Self::from_rm_padded(rm, sigma, rm.num_states())
    }

    /// Like [`TransitionTable::from_rm`] but with `num_states` states, which
    /// must be at least the machine's.
    pub fn from_rm_padded(
        rm: &RewardMachine,
        sigma: &[HighLevelObs],
        num_states: usize,
    ) -> Result<Self> {
        if rm.num_states() > num_states {
            return Err(Error::Contract(format!(
                "machine has {} states, at most {num_states} allowed",
                rm.num_states()
            )));
        }
        let mut table = TransitionTable::new(num_states, sigma.len())?;
        for (&(u, ref obs), &to) in rm.transitions() {
            if let Ok(s) = sigma.binary_search(obs) {
                table.set(u, s, Some(to));
            }
        }
        Ok(table)
    }

    /// Expands back into a reward machine with `num_states` states and no rewards.
    pub fn to_rm(&self, sigma: &[HighLevelObs]) -> RewardMachine {
        let mut rm = RewardMachine::new(self.num_states).expect("table has at least one state");
        for u in 0..self.num_states {
            for (s, obs) in sigma.iter().enumerate().take(self.num_syms) {
                if let Some(to) = self.get(u, s) {
                    rm.set_transition(u, obs.clone(), to)
                        .expect("table targets are in range");
                }
            }
        }
        rm
    }

    /// Expands into a machine holding only the states reachable from the
    /// initial state, renumbered in breadth-first order, without explicit
    /// self-loops. Runs are unchanged up to the renaming.
    pub fn to_trimmed_rm(&self, sigma: &[HighLevelObs]) -> RewardMachine {
        let mut id = vec![usize::MAX; self.num_states];
        let mut order = vec![0];
        id[0] = 0;
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            for s in 0..self.num_syms {
                let to = self.next(u, s);
                if id[to] == usize::MAX {
                    id[to] = order.len();
                    order.push(to);
                }
            }
            i += 1;
        }
        let mut rm = RewardMachine::new(order.len()).expect("initial state is reachable");
        for &u in &order {
            for (s, obs) in sigma.iter().enumerate().take(self.num_syms) {
                let to = self.next(u, s);
                if to != u {
                    rm.set_transition(id[u], obs.clone(), id[to])
                        .expect("renumbered targets are in range");
                }
            }
        }
        rm
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_syms(&self) -> usize {
        self.num_syms
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[u16] {
        &self.slots
    }

    #[inline]
    pub fn slot_index(&self, u: StateId, s: usize) -> usize {
        u * self.num_syms + s
    }

    pub fn get(&self, u: StateId, s: usize) -> Option<StateId> {
        match self.slots[self.slot_index(u, s)] {
            ABSENT => None,
            to => Some(to as StateId),
        }
    }

    pub fn set(&mut self, u: StateId, s: usize, to: Option<StateId>) {
        let i = self.slot_index(u, s);
        self.slots[i] = to.map_or(ABSENT, |t| t as u16);
    }

    pub fn set_slot(&mut self, slot: usize, value: u16) {
        self.slots[slot] = value;
    }

    /// Effective transition, self-loop when absent.
    #[inline]
    pub fn next(&self, u: usize, s: usize) -> usize {
        match self.slots[u * self.num_syms + s] {
            ABSENT => u,
            to => to as usize,
        }
    }

    /// Whether every explicit `(u, s) → u'` has `u'` staying put on `s`.
    pub fn satisfies_closure(&self) -> bool {
        (0..self.num_states).all(|u| {
            (0..self.num_syms).all(|s| {
                let to = self.next(u, s);
                self.next(to, s) == to
            })
        })
    }
}

impl TransitionTable {
    fn order_key(v: u16) -> u32 {
        if v == ABSENT {
            0
        } else {
            v as u32 + 1
        }
    }
}

impl Ord for TransitionTable {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num_states, self.num_syms)
            .cmp(&(other.num_states, other.num_syms))
            .then_with(|| {
                self.slots
                    .iter()
                    .map(|&v| Self::order_key(v))
                    .cmp(other.slots.iter().map(|&v| Self::order_key(v)))
            })
    }
}

impl PartialOrd for TransitionTable {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_reward_machine() {
        let sigma = vec![HighLevelObs::from_ids([0]), HighLevelObs::from_ids([1])];
        let mut table = TransitionTable::new(3, 2).unwrap();
        table.set(0, 1, Some(2));
        table.set(2, 0, Some(2));
        let rm = table.to_rm(&sigma);
        assert_eq!(rm.transitions().len(), 2);
        assert_eq!(TransitionTable::from_rm(&rm, &sigma).unwrap(), table);
        assert_eq!(table.next(1, 1), 1);
        assert_eq!(table.next(0, 1), 2);
    }

    #[test]
    fn trimming_drops_unreachable_states_and_self_loops() {
        let sigma = vec![HighLevelObs::from_ids([0]), HighLevelObs::from_ids([1])];
        let mut table = TransitionTable::new(4, 2).unwrap();
        table.set(0, 1, Some(3));
        table.set(3, 0, Some(3));
        table.set(2, 0, Some(1));
        let rm = table.to_trimmed_rm(&sigma);
        assert_eq!(rm.num_states(), 2);
        assert_eq!(rm.transitions().len(), 1);
        let obs = [sigma[0].clone(), sigma[1].clone(), sigma[0].clone()];
        assert_eq!(rm.run_obs(&obs), vec![0, 1, 1]);
    }

    #[test]
    fn closure_check() {
        let mut table = TransitionTable::new(2, 1).unwrap();
        table.set(0, 0, Some(1));
        assert!(table.satisfies_closure());
        table.set(1, 0, Some(0));
        assert!(!table.satisfies_closure());
        table.set(1, 0, Some(1));
        assert!(table.satisfies_closure());
    }

    #[test]
    fn absent_sorts_first() {
        let absent = TransitionTable::new(2, 1).unwrap();
        let mut zero = absent.clone();
        zero.set(0, 0, Some(0));
        let mut one = absent.clone();
        one.set(0, 0, Some(1));
        assert!(absent < zero && zero < one);
    }

    #[test]
    fn rejects_empty_machines() {
        assert!(TransitionTable::new(0, 3).is_err());
    }
}
