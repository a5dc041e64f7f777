//! The joint loop: warm up on random traces, learn a machine, then train a
//! policy and relearn the machine whenever it mispredicts.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{q_update, qrm_update, select_action, witnessed, Experience, QTable};
use crate::envs::{collect_random_traces, Domain, Env, Observation};
use crate::error::{Error, Result};
use crate::objective::evaluate;
use crate::prefix_tree::PrefixTree;
use crate::rm::{PredictionSets, RewardMachine, DEFAULT_REWARD_EPSILON};
use crate::search::{local_search, tabu_search, SearchConfig};
use crate::traces::{LabelledTrace, TraceSet};

pub const REWARD_LOG_HEADER: &str = "step,window_reward,relearns,rm_cost";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    #[default]
    Ls,
    Ts,
}

#[derive(Debug, Clone)]
pub struct LoopConfig {
    /// Random-policy warm-up steps.
    pub t_w: usize,
    /// Training steps after the warm-up.
    pub t_train: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// Value of unseen Q entries. Optimistic values drive exploration.
    pub q_init: f64,
    pub method: SearchMethod,
    /// Also carries `u_max` and whether traces are compressed.
    pub search: SearchConfig,
    pub qrm: bool,
    /// Maximum number of relearn attempts.
    pub relearn_budget: usize,
    pub seed: u64,
    /// Use this machine and never relearn.
    pub fixed_rm: Option<RewardMachine>,
    /// Steps per reward-log row.
    pub log_every: usize,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            t_w: 200_000,
            t_train: 2_000_000,
            epsilon: 0.1,
            gamma: 0.9,
            alpha: 0.1,
            q_init: 1.0,
            method: SearchMethod::Ls,
            search: SearchConfig {
                compressed_mode: true,
                ..SearchConfig::default()
            },
            qrm: true,
            relearn_budget: 1000,
            seed: 0,
            fixed_rm: None,
            log_every: 10_000,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must be in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must be in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !self.q_init.is_finite() {
            return Err(Error::Config(format!(
                "q_init must be finite, got {}",
                self.q_init
            )));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be positive".into()));
        }
        if let Some(rm) = &self.fixed_rm {
            if self.search.compressed_mode && !rm.closure_violations().is_empty() {
                return Err(Error::Config(
                    "fixed machine breaks self-loop closure in compressed mode".into(),
                ));
            }
        }
        self.search.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardLogRow {
    pub step: usize,
    /// Environment reward collected since the previous row.
    pub window_reward: f64,
    /// Relearn attempts so far.
    pub relearns: usize,
    pub rm_cost: f64,
}

/// A relearn that replaced the machine. Both costs are on the corpus at
/// that moment.
#[derive(Debug, Clone, PartialEq)]
pub struct Adoption {
    pub step: usize,
    pub previous_cost: f64,
    pub new_cost: f64,
}

#[derive(Debug, Clone)]
pub struct LoopResult {
    pub rm: RewardMachine,
    pub q: QTable<Observation>,
    pub log: Vec<RewardLogRow>,
    pub relearns: usize,
    /// Cost of the initial machine on the warm-up corpus.
    pub initial_cost: f64,
    /// Every machine change, in order.
    pub adoptions: Vec<Adoption>,
    /// Environment reward of every training episode, including episodes
    /// cut short by a machine change.
    pub episode_rewards: Vec<f64>,
    pub corpus: TraceSet,
}

impl LoopResult {
    pub fn write_reward_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_reward_csv(&self.log, out)
    }
}

pub fn write_reward_csv<W: Write>(rows: &[RewardLogRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REWARD_LOG_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.step, r.window_reward, r.relearns, r.rm_cost
        )?;
    }
    Ok(())
}

struct Learner<'a> {
    cfg: &'a LoopConfig,
    attempts: u64,
}

impl Learner<'_> {
    /// Best machine for `corpus`, also considering `current`, with its cost.
    fn learn(
        &mut self,
        corpus: &TraceSet,
        current: Option<&RewardMachine>,
    ) -> Result<(RewardMachine, f64)> {
        let tree = PrefixTree::build(corpus)?;
        if tree.is_empty() {
            return Ok((
                current.cloned().unwrap_or_else(RewardMachine::single_state),
                0.0,
            ));
        }
        let search = SearchConfig {
            seed: self.cfg.search.seed.wrapping_add(self.attempts),
            ..self.cfg.search.clone()
        };
        self.attempts += 1;
        let found = match self.cfg.method {
            SearchMethod::Ls => local_search(&tree, &search)?,
            SearchMethod::Ts => tabu_search(&tree, &search)?,
        };
        let (mut rm, mut cost) = (found.best_rm, found.best_cost);
        if let Some(cur) = current {
            let c = evaluate(cur, &tree)?.total;
            if c <= cost {
                rm = cur.clone();
                cost = c;
            }
        }
        Ok((rm, cost))
    }
}

fn prepare(rm: &mut RewardMachine, corpus: &TraceSet) -> Result<PredictionSets> {
    rm.fit_rewards(corpus, DEFAULT_REWARD_EPSILON)?;
    Ok(rm.prediction_sets(corpus))
}

/// Runs warm-up, initial learning and `t_train` training steps.
pub fn run_joint_loop(domain: Domain, cfg: &LoopConfig) -> Result<LoopResult> {
    cfg.validate()?;
    let compressed = cfg.search.compressed_mode;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (warm, _) = collect_random_traces(domain, cfg.t_w, rng.gen());
    let mut corpus = if compressed { warm.compressed() } else { warm };
    let mut learner = Learner { cfg, attempts: 0 };
    let (mut rm, mut cost) = match &cfg.fixed_rm {
        Some(rm) => {
            let tree = PrefixTree::build(&corpus)?;
            let cost = if tree.is_empty() {
                0.0
            } else {
                evaluate(rm, &tree)?.total
            };
            (rm.clone(), cost)
        }
        None => learner.learn(&corpus, None)?,
    };
    let mut n = prepare(&mut rm, &corpus)?;
    let initial_cost = cost;
    let mut adoptions = Vec::new();

    let mut env = Env::new(domain);
    let mut q = QTable::with_default(env.num_actions(), cfg.q_init);
    let mut log = Vec::new();
    let mut episode_rewards = Vec::new();
    let mut relearns = 0usize;
    let mut warned = false;
    let mut window = 0.0;
    let mut step = 0usize;

    while step < cfg.t_train {
        let mut obs = env.reset(rng.gen());
        let mut o = q.intern(&obs);
        let mut sigma = env.label(None, &obs);
        let mut u = rm.initial();
        let mut episode = LabelledTrace::start(sigma.clone());
        let mut stored_at: Option<usize> = None;
        let mut total = 0.0;
        loop {
            let a = select_action(&q, o, u, cfg.epsilon, &mut rng);
            let out = env.step(a)?;
            step += 1;
            let sigma2 = env.label(Some((&obs, a)), &out.obs);
            let u2 = rm.transition(u, &sigma2)?;
            let o2 = q.intern(&out.obs);
            episode.push(out.reward, sigma2.clone())?;
            total += out.reward;
            window += out.reward;
            let mut done = out.done;

            if cfg.qrm {
                let exp = Experience {
                    o,
                    sigma: &sigma,
                    a,
                    o2,
                    sigma2: &sigma2,
                    done,
                };
                qrm_update(&mut q, &rm, &n, exp, cfg.gamma, cfg.alpha, compressed);
                // The state actually visited learns from its own experience
                // even when the corpus has not witnessed it yet.
                if !witnessed(&n, u, &sigma, &sigma2, compressed) {
                    q_update(
                        &mut q, o, u, a, out.reward, o2, u2, cfg.gamma, cfg.alpha, done,
                    );
                }
            } else {
                q_update(
                    &mut q, o, u, a, out.reward, o2, u2, cfg.gamma, cfg.alpha, done,
                );
            }

            if cfg.fixed_rm.is_none() && !witnessed(&n, u, &sigma, &sigma2, compressed) {
                if relearns < cfg.relearn_budget {
                    relearns += 1;
                    let trace = if compressed {
                        episode.compress()
                    } else {
                        episode.clone()
                    };
                    match stored_at {
                        Some(i) => corpus.replace(i, trace)?,
                        None => {
                            corpus.push(trace)?;
                            stored_at = Some(corpus.len() - 1);
                        }
                    }
                    let tree_cost = {
                        let tree = PrefixTree::build(&corpus)?;
                        evaluate(&rm, &tree)?.total
                    };
                    let (candidate, c) = learner.learn(&corpus, Some(&rm))?;
                    if c < tree_cost {
                        log::debug!(
                            "step {step}: adopted machine with {} states, cost {c} < {tree_cost}",
                            candidate.num_states()
                        );
                        rm = candidate;
                        cost = c;
                        adoptions.push(Adoption {
                            step,
                            previous_cost: tree_cost,
                            new_cost: c,
                        });
                        q.clear();
                        done = true;
                    } else {
                        cost = tree_cost;
                    }
                    n = prepare(&mut rm, &corpus)?;
                } else if !warned {
                    log::warn!("relearn budget of {} exhausted at step {step}; keeping the current machine", cfg.relearn_budget);
                    warned = true;
                }
            }

            if step % cfg.log_every == 0 {
                log.push(RewardLogRow {
                    step,
                    window_reward: window,
                    relearns,
                    rm_cost: cost,
                });
                window = 0.0;
            }
            if done || step >= cfg.t_train {
                break;
            }
            if step % 997 == 0 {
                debug_assert_eq!(
                    rm.run_trace(&episode).last().copied(),
                    Some(u2),
                    "RM state drifted from the episode trace"
                );
            }
            obs = out.obs;
            o = o2;
            sigma = sigma2;
            u = u2;
        }
        episode_rewards.push(total);
    }

    Ok(LoopResult {
        rm,
        q,
        log,
        relearns,
        initial_cost,
        adoptions,
        episode_rewards,
        corpus,
    })
}

/// Plays `episodes` episodes with a fixed Q-table and machine, without
/// learning, and returns each episode's reward. Observations the table has
/// never seen read as all-default values.
pub fn run_policy(
    domain: Domain,
    rm: &RewardMachine,
    q: &QTable<Observation>,
    episodes: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = Env::new(domain);
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(rng.gen());
        let mut u = rm.initial();
        let mut total = 0.0;
        loop {
            let o = q.id(&obs).unwrap_or(usize::MAX);
            let a = select_action(q, o, u, epsilon, &mut rng);
            let step = env.step(a)?;
            u = rm.transition(u, &env.label(Some((&obs, a)), &step.obs))?;
            total += step.reward;
            obs = step.obs;
            if step.done {
                break;
            }
        }
        out.push(total);
    }
    Ok(out)
}
