//! Learning reward machines from labelled traces.
//!
//! The crate covers the whole pipeline: high-level observations and trace
//! corpora, prefix trees, the prediction-set objective, local and tabu search
//! over transition tables, MILP and CP model export, grid-world environments
//! and a tabular Q-learning agent that relearns its machine online.

pub mod agent;
pub mod envs;
pub mod error;
pub mod models;
pub mod objective;
pub mod obs;
pub mod prefix_tree;
pub mod rm;
pub mod search;
pub mod table;
pub mod traces;

pub use error::{Error, Result};
pub use objective::{check_selfloop_closure, evaluate, evaluate_per_node, Evaluator, LrmCost};
pub use obs::{Alphabet, HighLevelObs, Proposition};
pub use prefix_tree::{NodeId, PrefixTree, PtNode, ROOT};
pub use rm::{ClosureViolation, PredictionSets, RewardMachine, StateId, INITIAL};
pub use search::{exact_enumerate, local_search, tabu_search, SearchConfig, SearchResult};
pub use table::TransitionTable;
pub use traces::{label_trace, LabelledTrace, RawStep, TraceSet};
