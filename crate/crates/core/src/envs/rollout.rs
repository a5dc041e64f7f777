//! Random-policy rollouts recorded as labelled traces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{Domain, Env};
use crate::traces::{LabelledTrace, TraceSet};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutStats {
    pub steps: usize,
    /// Total reward of every episode, including a final cut-off one.
    pub episode_rewards: Vec<f64>,
}

impl RolloutStats {
    pub fn mean_episode_reward(&self) -> f64 {
        if self.episode_rewards.is_empty() {
            0.0
        } else {
            self.episode_rewards.iter().sum::<f64>() / self.episode_rewards.len() as f64
        }
    }
}

/// Runs a uniformly random policy for `steps` environment steps and records
/// one trace per episode. The last episode is cut off when the step budget
/// runs out. Episode seeds and actions are drawn from one stream seeded by
/// `seed`.
pub fn collect_random_traces(domain: Domain, steps: usize, seed: u64) -> (TraceSet, RolloutStats) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = Env::new(domain);
    let mut set = TraceSet::new(domain.alphabet());
    set.set_meta(json!({ "domain": domain.name(), "steps": steps, "seed": seed }));
    let mut stats = RolloutStats {
        steps,
        ..Default::default()
    };
    let mut remaining = steps;
    while remaining > 0 {
        let obs = env.reset(rng.gen());
        let mut trace = LabelledTrace::start(env.label(None, &obs));
        let mut prev = obs;
        let mut total = 0.0;
        while remaining > 0 {
            let action = rng.gen_range(0..env.num_actions());
            let step = env.step(action).expect("random actions are valid");
            remaining -= 1;
            let sigma = env.label(Some((&prev, action)), &step.obs);
            trace
                .push(step.reward, sigma)
                .expect("raw traces are extendable");
            total += step.reward;
            prev = step.obs;
            if step.done {
                break;
            }
        }
        set.push(trace).expect("labels use the domain alphabet");
        stats.episode_rewards.push(total);
    }
    (set, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_gives_empty_corpus() {
        let (set, stats) = collect_random_traces(Domain::Cookie, 0, 1);
        assert!(set.is_empty());
        assert!(stats.episode_rewards.is_empty());
    }

    #[test]
    fn rollouts_are_episode_delimited_and_deterministic() {
        let (a, sa) = collect_random_traces(Domain::Symbol, 3000, 9);
        let (b, _) = collect_random_traces(Domain::Symbol, 3000, 9);
        assert_eq!(a, b);
        assert_eq!(a.num_observations(), 3000 + a.len());
        assert!(a.len() >= 6);
        for (trace, r) in a.traces().iter().zip(&sa.episode_rewards) {
            assert_eq!(trace.total_reward(), *r);
        }
    }
}
