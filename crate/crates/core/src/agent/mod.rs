//! Tabular Q-learning over `(observation, RM state)` pairs and the joint
//! loop that relearns the reward machine while the policy trains.

mod joint;

use std::collections::HashMap;
use std::hash::Hash;

use rand::Rng;

use crate::envs::Observation;
use crate::obs::HighLevelObs;
use crate::rm::{PredictionSets, RewardMachine, StateId};

pub use joint::{
    run_joint_loop, run_policy, write_reward_csv, Adoption, LoopConfig, LoopResult, RewardLogRow,
    SearchMethod, REWARD_LOG_HEADER,
};

/// Interned observation handle.
pub type ObsId = usize;

/// Q-values keyed by `(observation, RM state, action)`. Unseen keys read as
/// the default value.
#[derive(Debug, Clone)]
pub struct QTable<O = Observation> {
    num_actions: usize,
    default_row: Vec<f64>,
    ids: HashMap<O, ObsId>,
    rows: HashMap<(ObsId, StateId), usize>,
    values: Vec<f64>,
}

impl<O: Hash + Eq + Clone> QTable<O> {
    pub fn new(num_actions: usize) -> Self {
        Self::with_default(num_actions, 0.0)
    }

    pub fn with_default(num_actions: usize, default: f64) -> Self {
        QTable {
            num_actions,
            default_row: vec![default; num_actions],
            ids: HashMap::new(),
            rows: HashMap::new(),
            values: Vec::new(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Handle for `o`. Handles survive [`QTable::clear`].
    pub fn intern(&mut self, o: &O) -> ObsId {
        if let Some(&id) = self.ids.get(o) {
            return id;
        }
        let id = self.ids.len();
        self.ids.insert(o.clone(), id);
        id
    }

    /// Existing handle for `o`, if any.
    pub fn id(&self, o: &O) -> Option<ObsId> {
        self.ids.get(o).copied()
    }

    pub fn values(&self, o: ObsId, u: StateId) -> &[f64] {
        match self.rows.get(&(o, u)) {
            Some(&r) => &self.values[r..r + self.num_actions],
            None => &self.default_row,
        }
    }

    pub fn values_mut(&mut self, o: ObsId, u: StateId) -> &mut [f64] {
        let next = self.values.len();
        let r = *self.rows.entry((o, u)).or_insert(next);
        if r == next {
            self.values.extend_from_slice(&self.default_row);
        }
        &mut self.values[r..r + self.num_actions]
    }

    pub fn get(&self, o: ObsId, u: StateId, a: usize) -> f64 {
        self.values(o, u)[a]
    }

    pub fn max(&self, o: ObsId, u: StateId) -> f64 {
        self.values(o, u)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest action id among the maximisers.
    pub fn argmax(&self, o: ObsId, u: StateId) -> usize {
        let row = self.values(o, u);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    /// Forgets every value, keeping observation handles.
    pub fn clear(&mut self) {
        self.rows.clear();
        self.values.clear();
    }

    /// Number of stored `(observation, state)` rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// ε-greedy choice with ties going to the lowest action id.
pub fn select_action<O: Hash + Eq + Clone, R: Rng + ?Sized>(
    q: &QTable<O>,
    o: ObsId,
    u: StateId,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    if epsilon > 0.0 && rng.gen_bool(epsilon.min(1.0)) {
        rng.gen_range(0..q.num_actions())
    } else {
        q.argmax(o, u)
    }
}

/// One Q-learning step towards `r + γ max Q(o', u', ·)`, or `r` when `done`.
#[allow(clippy::too_many_arguments)]
pub fn q_update<O: Hash + Eq + Clone>(
    q: &mut QTable<O>,
    o: ObsId,
    u: StateId,
    a: usize,
    r: f64,
    o2: ObsId,
    u2: StateId,
    gamma: f64,
    alpha: f64,
    done: bool,
) {
    let target = if done { r } else { r + gamma * q.max(o2, u2) };
    let cell = &mut q.values_mut(o, u)[a];
    *cell += alpha * (target - *cell);
}

/// One environment step seen from every RM state.
#[derive(Debug, Clone, Copy)]
pub struct Experience<'a> {
    pub o: ObsId,
    pub sigma: &'a HighLevelObs,
    pub a: usize,
    pub o2: ObsId,
    pub sigma2: &'a HighLevelObs,
    pub done: bool,
}

/// Whether `σ'` after `(u, σ)` is consistent with the prediction sets.
///
/// With `repeats_allowed` (compressed corpora, which never record a repeat)
/// staying on the same observation always counts as witnessed.
pub fn witnessed(
    n: &PredictionSets,
    u: StateId,
    sigma: &HighLevelObs,
    sigma2: &HighLevelObs,
    repeats_allowed: bool,
) -> bool {
    (repeats_allowed && sigma == sigma2) || n.contains(u, sigma, sigma2)
}

/// Counterfactual update of every RM state that could have produced the
/// experience: states `u` with `σ' ∈ N_{u,σ}` are updated with reward
/// `δ_r(u, σ')` towards `δ_u(u, σ')`; all other states are left alone.
/// Returns the number of states updated.
pub fn qrm_update<O: Hash + Eq + Clone>(
    q: &mut QTable<O>,
    rm: &RewardMachine,
    n: &PredictionSets,
    exp: Experience<'_>,
    gamma: f64,
    alpha: f64,
    repeats_allowed: bool,
) -> usize {
    let mut updated = 0;
    for u in 0..rm.num_states() {
        if !witnessed(n, u, exp.sigma, exp.sigma2, repeats_allowed) {
            continue;
        }
        let u2 = rm.transition(u, exp.sigma2).expect("state in range");
        let r = rm.reward(u, exp.sigma2);
        q_update(q, exp.o, u, exp.a, r, exp.o2, u2, gamma, alpha, exp.done);
        updated += 1;
    }
    updated
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_ties_pick_lowest_action() {
        let mut q: QTable<u32> = QTable::new(4);
        let o = q.intern(&0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&q, o, 0, 0.0, &mut rng), 0);
        q.values_mut(o, 0)[1] = 1.0;
        assert_eq!(select_action(&q, o, 0, 0.0, &mut rng), 1);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q: QTable<u32> = QTable::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0; 4];
        for _ in 0..8000 {
            counts[select_action(&q, 0, 0, 1.0, &mut rng)] += 1;
        }
        assert!(
            counts.iter().all(|&c| (1800..2200).contains(&c)),
            "{counts:?}"
        );
    }

    #[test]
    fn q_update_edge_cases() {
        let mut q: QTable<u32> = QTable::new(4);
        let (o, o2) = (q.intern(&0), q.intern(&1));
        q.values_mut(o2, 0)[2] = 5.0;
        q_update(&mut q, o, 0, 1, 1.0, o2, 0, 0.9, 0.0, false);
        assert_eq!(q.get(o, 0, 1), 0.0);
        q_update(&mut q, o, 0, 1, 1.0, o2, 0, 0.9, 1.0, true);
        assert_eq!(q.get(o, 0, 1), 1.0);
        q_update(&mut q, o, 0, 3, 1.0, o2, 0, 0.9, 1.0, false);
        let once = q.get(o, 0, 3);
        q_update(&mut q, o, 0, 3, 1.0, o2, 0, 0.9, 1.0, false);
        assert_eq!(q.get(o, 0, 3), once);
        assert!((once - 5.5).abs() < 1e-12);
        q.clear();
        assert!(q.is_empty());
        assert_eq!(q.intern(&1), o2);
    }
}
