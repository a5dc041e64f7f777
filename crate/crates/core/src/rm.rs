//! Reward machines: representation, execution, prediction sets and reward
//! estimation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obs::{Alphabet, HighLevelObs};
use crate::traces::{LabelledTrace, TraceSet};

pub type StateId = usize;

/// The initial state `u0`.
pub const INITIAL: StateId = 0;

/// Default smoothing constant in the reward estimate.
pub const DEFAULT_REWARD_EPSILON: f64 = 1e-6;

/// A deterministic reward machine.
///
/// The transition map is partial; a missing `(state, obs)` key behaves as a
/// self-loop. An explicit self-loop is still a distinct entry of the map,
/// which matters for the search neighbourhood but not for execution.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMachine {
    num_states: usize,
    transitions: BTreeMap<(StateId, HighLevelObs), StateId>,
    rewards: BTreeMap<(StateId, HighLevelObs), f64>,
}

/// A `(from, obs, to)` triple breaking self-loop closure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureViolation {
    pub from: StateId,
    pub obs: HighLevelObs,
    pub to: StateId,
}

impl RewardMachine {
    pub fn new(num_states: usize) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::Contract(
                "a reward machine has at least one state".into(),
            ));
        }
        Ok(RewardMachine {
            num_states,
            transitions: BTreeMap::new(),
            rewards: BTreeMap::new(),
        })
    }

    pub fn single_state() -> Self {
        RewardMachine {
            num_states: 1,
            transitions: BTreeMap::new(),
            rewards: BTreeMap::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        INITIAL
    }

    pub fn transitions(&self) -> &BTreeMap<(StateId, HighLevelObs), StateId> {
        &self.transitions
    }

    pub fn rewards(&self) -> &BTreeMap<(StateId, HighLevelObs), f64> {
        &self.rewards
    }

    fn check_state(&self, u: StateId) -> Result<()> {
        if u >= self.num_states {
            return Err(Error::Contract(format!(
                "state {u} out of range (machine has {} states)",
                self.num_states
            )));
        }
        Ok(())
    }

    /// Sets `δ_u(from, obs) = to` explicitly.
    pub fn set_transition(&mut self, from: StateId, obs: HighLevelObs, to: StateId) -> Result<()> {
        self.check_state(from)?;
        self.check_state(to)?;
        self.transitions.insert((from, obs), to);
        Ok(())
    }

    pub fn with_transition(
        mut self,
        from: StateId,
        obs: HighLevelObs,
        to: StateId,
    ) -> Result<Self> {
        self.set_transition(from, obs, to)?;
        Ok(self)
    }

    pub fn remove_transition(&mut self, from: StateId, obs: &HighLevelObs) -> Option<StateId> {
        self.transitions.remove(&(from, obs.clone()))
    }

    /// `δ_u(u, σ)`, with self-loops for missing keys.
    pub fn transition(&self, u: StateId, sigma: &HighLevelObs) -> Result<StateId> {
        self.check_state(u)?;
        Ok(self.step(u, sigma))
    }

    #[inline]
    fn step(&self, u: StateId, sigma: &HighLevelObs) -> StateId {
        // Cloning a one-word SmallVec is a copy; BTreeMap lookups need an owned tuple.
        self.transitions
            .get(&(u, sigma.clone()))
            .copied()
            .unwrap_or(u)
    }

    /// `δ_r(u, σ)`; zero for pairs that carry no reward entry.
    pub fn reward(&self, u: StateId, sigma: &HighLevelObs) -> f64 {
        self.rewards
            .get(&(u, sigma.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn set_rewards(&mut self, rewards: BTreeMap<(StateId, HighLevelObs), f64>) -> Result<()> {
        for &(u, _) in rewards.keys() {
            self.check_state(u)?;
        }
        self.rewards = rewards;
        Ok(())
    }

    /// RM states along a trace: `x_0 = u0` and `x_t = δ_u(x_{t-1}, σ_t)`.
    /// The initial observation does not drive a transition.
    pub fn run_trace(&self, trace: &LabelledTrace) -> Vec<StateId> {
        self.run_obs(trace.obs())
    }

    pub fn run_obs(&self, obs: &[HighLevelObs]) -> Vec<StateId> {
        let mut states = Vec::with_capacity(obs.len());
        let mut u = INITIAL;
        for (t, sigma) in obs.iter().enumerate() {
            if t > 0 {
                u = self.step(u, sigma);
            }
            states.push(u);
        }
        states
    }

    /// Every stored transition `(u, σ) → u'` whose target does not stay in
    /// `u'` on `σ`. Empty iff the machine is usable with compressed traces.
    pub fn closure_violations(&self) -> Vec<ClosureViolation> {
        self.transitions
            .iter()
            .filter(|((_, sigma), &to)| self.step(to, sigma) != to)
            .map(|(&(from, ref sigma), &to)| ClosureViolation {
                from,
                obs: sigma.clone(),
                to,
            })
            .collect()
    }

    /// `N_{u,σ}` over a corpus: for every consecutive pair `(σ_t, σ_{t+1})`,
    /// `σ_{t+1}` joins the set keyed by `(x_t, σ_t)`.
    pub fn prediction_sets(&self, corpus: &TraceSet) -> PredictionSets {
        let mut sets = PredictionSets::default();
        for trace in corpus.traces() {
            let states = self.run_trace(trace);
            for (t, pair) in trace.obs().windows(2).enumerate() {
                let key = (states[t], pair[0].clone());
                *sets.counts.entry(key.clone()).or_default() += 1;
                sets.entries.entry(key).or_default().insert(pair[1].clone());
            }
        }
        sets
    }

    /// Empirical reward estimate: the mean reward of the steps that leave
    /// state `u` on observing `σ`, shrunk by `epsilon` in the denominator.
    /// Pairs never witnessed are absent (and read as zero).
    pub fn estimate_delta_r(
        &self,
        corpus: &TraceSet,
        epsilon: f64,
    ) -> Result<BTreeMap<(StateId, HighLevelObs), f64>> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::Contract(format!(
                "reward smoothing constant must be positive, got {epsilon}"
            )));
        }
        let mut acc: BTreeMap<(StateId, HighLevelObs), (f64, u64)> = BTreeMap::new();
        for trace in corpus.traces() {
            let states = self.run_trace(trace);
            for (t, r) in trace.rewards().iter().enumerate() {
                let entry = acc
                    .entry((states[t], trace.obs()[t + 1].clone()))
                    .or_default();
                entry.0 += r;
                entry.1 += 1;
            }
        }
        Ok(acc
            .into_iter()
            .map(|(k, (sum, n))| (k, sum / (n as f64 + epsilon)))
            .collect())
    }

    /// Re-estimates `δ_r` from `corpus` in place.
    pub fn fit_rewards(&mut self, corpus: &TraceSet, epsilon: f64) -> Result<()> {
        self.rewards = self.estimate_delta_r(corpus, epsilon)?;
        Ok(())
    }

    /// Graphviz rendering. Node `i` is state `u_i`; the initial state is drawn
    /// with a double border. Parallel transitions share one edge whose label
    /// lists `<observation, reward>` pairs separated by `;`.
    pub fn to_dot(&self, alphabet: &Alphabet) -> String {
        let mut edges: BTreeMap<(StateId, StateId), Vec<String>> = BTreeMap::new();
        for (&(from, ref sigma), &to) in &self.transitions {
            let label = format!(
                "<{}, {}>",
                alphabet.display(sigma),
                fmt_reward(self.reward(from, sigma))
            );
            edges.entry((from, to)).or_default().push(label);
        }
        for (&(u, ref sigma), &r) in &self.rewards {
            if r != 0.0 && !self.transitions.contains_key(&(u, sigma.clone())) {
                let label = format!("<{}, {}>", alphabet.display(sigma), fmt_reward(r));
                edges.entry((u, u)).or_default().push(label);
            }
        }

        let mut out =
            String::from("digraph reward_machine {\n    rankdir=LR;\n    node [shape=circle];\n");
        for u in 0..self.num_states {
            if u == INITIAL {
                let _ = writeln!(out, "    {u} [label=\"u{u}\", peripheries=2];");
            } else {
                let _ = writeln!(out, "    {u} [label=\"u{u}\"];");
            }
        }
        for ((from, to), labels) in edges {
            let _ = writeln!(out, "    {from} -> {to} [label=\"{}\"];", labels.join("; "));
        }
        out.push_str("}\n");
        out
    }

    /// Canonical JSON: transitions and rewards sorted by state, then by the
    /// sorted proposition names of the observation.
    pub fn to_json(&self, alphabet: &Alphabet) -> String {
        self.to_json_with_meta(alphabet, None)
    }

    /// [`RewardMachine::to_json`] with a free-form `meta` object attached.
    /// The parser accepts and ignores it.
    pub fn to_json_with_meta(
        &self,
        alphabet: &Alphabet,
        meta: Option<&serde_json::Value>,
    ) -> String {
        let mut transitions: Vec<TransitionRecord> = self
            .transitions
            .iter()
            .map(|(&(from, ref sigma), &to)| TransitionRecord {
                from,
                obs: alphabet.sorted_names(sigma),
                to,
            })
            .collect();
        transitions.sort_by(|a, b| (a.from, &a.obs).cmp(&(b.from, &b.obs)));
        let mut rewards: Vec<RewardRecord> = self
            .rewards
            .iter()
            .map(|(&(state, ref sigma), &reward)| RewardRecord {
                state,
                obs: alphabet.sorted_names(sigma),
                reward,
            })
            .collect();
        rewards.sort_by(|a, b| (a.state, &a.obs).cmp(&(b.state, &b.obs)));
        let doc = RmDocument {
            propositions: alphabet.names().map(str::to_owned).collect(),
            num_states: self.num_states,
            initial: INITIAL,
            transitions,
            rewards,
            meta: meta.cloned(),
        };
        serde_json::to_string_pretty(&doc).expect("plain data always serialises")
    }

    /// Parses the canonical JSON form, returning the machine and its alphabet.
    pub fn from_json(text: &str) -> Result<(RewardMachine, Alphabet)> {
        let doc: RmDocument = serde_json::from_str(text)?;
        let alphabet = Alphabet::new(doc.propositions)?;
        if doc.initial != INITIAL {
            return Err(Error::Contract(format!(
                "initial state must be {INITIAL}, got {}",
                doc.initial
            )));
        }
        let mut rm = RewardMachine::new(doc.num_states)?;
        for t in doc.transitions {
            let sigma = alphabet.obs(&t.obs)?;
            if rm.transitions.contains_key(&(t.from, sigma.clone())) {
                return Err(Error::Contract(format!(
                    "duplicate transition from state {} on {:?}",
                    t.from, t.obs
                )));
            }
            rm.set_transition(t.from, sigma, t.to)?;
        }
        let mut rewards = BTreeMap::new();
        for r in doc.rewards {
            if !r.reward.is_finite() {
                return Err(Error::Contract(format!("non-finite reward {}", r.reward)));
            }
            rm.check_state(r.state)?;
            if rewards
                .insert((r.state, alphabet.obs(&r.obs)?), r.reward)
                .is_some()
            {
                return Err(Error::Contract(format!(
                    "duplicate reward for state {} on {:?}",
                    r.state, r.obs
                )));
            }
        }
        rm.rewards = rewards;
        Ok((rm, alphabet))
    }
}

fn fmt_reward(r: f64) -> String {
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r:.4}")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionRecord {
    from: StateId,
    obs: Vec<String>,
    to: StateId,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardRecord {
    state: StateId,
    obs: Vec<String>,
    reward: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RmDocument {
    propositions: Vec<String>,
    num_states: usize,
    initial: StateId,
    transitions: Vec<TransitionRecord>,
    #[serde(default)]
    rewards: Vec<RewardRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

/// `N_{u,σ}` for every witnessed `(u, σ)`, with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSets {
    pub entries: BTreeMap<(StateId, HighLevelObs), BTreeSet<HighLevelObs>>,
    pub counts: BTreeMap<(StateId, HighLevelObs), u64>,
}

impl PredictionSets {
    pub fn get(&self, u: StateId, sigma: &HighLevelObs) -> Option<&BTreeSet<HighLevelObs>> {
        self.entries.get(&(u, sigma.clone()))
    }

    /// Whether `next ∈ N_{u,σ}`.
    pub fn contains(&self, u: StateId, sigma: &HighLevelObs, next: &HighLevelObs) -> bool {
        self.get(u, sigma).is_some_and(|set| set.contains(next))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b", "c"]).unwrap()
    }

    fn corpus(words: &[&str]) -> TraceSet {
        corpus_with_rewards(words.iter().map(|w| (*w, vec![0.0; w.len() - 1])).collect())
    }

    fn corpus_with_rewards(items: Vec<(&str, Vec<f64>)>) -> TraceSet {
        let ab = ab();
        let traces = items
            .into_iter()
            .map(|(w, r)| {
                let obs = w
                    .chars()
                    .map(|c| ab.obs([c.to_string()]).unwrap())
                    .collect();
                LabelledTrace::new(obs, r).unwrap()
            })
            .collect();
        TraceSet::from_traces(ab, traces).unwrap()
    }

    fn o(name: &str) -> HighLevelObs {
        ab().obs([name]).unwrap()
    }

    #[test]
    fn missing_transition_is_a_self_loop() {
        let rm = RewardMachine::new(3).unwrap();
        assert_eq!(rm.transition(2, &o("a")).unwrap(), 2);
        assert_eq!(
            RewardMachine::single_state()
                .transition(0, &o("b"))
                .unwrap(),
            0
        );
        assert!(matches!(rm.transition(3, &o("a")), Err(Error::Contract(_))));
    }

    #[test]
    fn run_trace_ignores_initial_observation() {
        let rm = RewardMachine::new(2)
            .unwrap()
            .with_transition(0, o("a"), 1)
            .unwrap();
        let t = &corpus(&["ab"]).traces()[0].clone();
        assert_eq!(rm.run_trace(t), vec![0, 0]);
        let t = &corpus(&["ba"]).traces()[0].clone();
        assert_eq!(rm.run_trace(t), vec![0, 1]);
        let single = RewardMachine::single_state();
        assert_eq!(
            single.run_trace(&corpus(&["abcab"]).traces()[0]),
            vec![0; 5]
        );
    }

    #[test]
    fn prediction_sets_by_enumeration() {
        let rm = RewardMachine::single_state();
        let n = rm.prediction_sets(&corpus(&["abab"]));
        assert_eq!(n.entries.len(), 2);
        assert_eq!(n.get(0, &o("a")).unwrap(), &BTreeSet::from([o("b")]));
        assert_eq!(n.get(0, &o("b")).unwrap(), &BTreeSet::from([o("a")]));
        assert_eq!(n.counts[&(0, o("a"))], 2);

        let n = rm.prediction_sets(&corpus(&["abac"]));
        assert_eq!(
            n.get(0, &o("a")).unwrap(),
            &BTreeSet::from([o("b"), o("c")])
        );
        assert_eq!(n.get(0, &o("b")).unwrap(), &BTreeSet::from([o("a")]));
        assert!(n.get(0, &o("c")).is_none());

        assert!(rm.prediction_sets(&corpus(&["a", "b"])).is_empty());
    }

    #[test]
    fn reward_estimates_follow_the_smoothed_mean() {
        let rm = RewardMachine::single_state();
        let zero = rm.estimate_delta_r(&corpus(&["abcab"]), 1e-6).unwrap();
        assert!(zero.values().all(|&r| r == 0.0));

        let once = rm
            .estimate_delta_r(&corpus_with_rewards(vec![("ab", vec![1.0])]), 1e-6)
            .unwrap();
        assert_eq!(once[&(0, o("b"))], 1.0 / (1.0 + 1e-6));

        let thrice = corpus_with_rewards(vec![("abcbab", vec![1.0, 0.0, 1.0, 0.0, 0.0])]);
        let est = rm.estimate_delta_r(&thrice, 1e-6).unwrap();
        assert_eq!(est[&(0, o("b"))], 2.0 / (3.0 + 1e-6));
        assert!(rm.estimate_delta_r(&thrice, 0.0).is_err());
    }

    #[test]
    fn closure_violations_follow_the_definition() {
        let only_loops = RewardMachine::new(2)
            .unwrap()
            .with_transition(1, o("a"), 1)
            .unwrap();
        assert!(only_loops.closure_violations().is_empty());
        let into = RewardMachine::new(2)
            .unwrap()
            .with_transition(0, o("a"), 1)
            .unwrap();
        assert!(into.closure_violations().is_empty());
        let back = into.clone().with_transition(1, o("a"), 0).unwrap();
        assert_eq!(back.closure_violations().len(), 2);
        let back = into.with_transition(1, o("a"), 0).unwrap();
        assert!(back.closure_violations().contains(&ClosureViolation {
            from: 0,
            obs: o("a"),
            to: 1
        }));
    }

    #[test]
    fn dot_output() {
        let single = RewardMachine::single_state().to_dot(&ab());
        assert!(single.starts_with("digraph"));
        assert!(single.contains("0 [label=\"u0\", peripheries=2]"));
        assert!(!single.contains("->"));

        let rm = RewardMachine::new(2)
            .unwrap()
            .with_transition(0, o("a"), 1)
            .unwrap();
        assert!(rm.to_dot(&ab()).contains("0 -> 1 [label=\"<{a}, 0>\"]"));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mut rm = RewardMachine::new(2)
            .unwrap()
            .with_transition(1, o("b"), 0)
            .unwrap();
        rm.set_transition(0, ab().obs(["c", "a"]).unwrap(), 1)
            .unwrap();
        rm.set_rewards(BTreeMap::from([((1, o("b")), 0.5)]))
            .unwrap();
        let text = rm.to_json(&ab());
        let (back, alphabet) = RewardMachine::from_json(&text).unwrap();
        assert_eq!(back, rm);
        assert_eq!(alphabet, ab());
        assert_eq!(back.to_json(&alphabet), text);

        let bad = text.replace("\"to\": 0", "\"to\": 5");
        assert!(RewardMachine::from_json(&bad).is_err());
        assert!(RewardMachine::from_json("{}").is_err());
    }
}
