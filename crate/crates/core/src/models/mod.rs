//! Exporting an instance as a mixed-integer linear program (LP text format)
//! or a constraint programming model (a small line-oriented text format),
//! reading the exports back, and checking a machine against them by
//! substitution.
//!
//! Both exports follow the objective's state bookkeeping: the root and the
//! depth-1 nodes are fixed to the initial state, deeper nodes follow the
//! transition on their own observation, and a node's prediction weight is the
//! number of traces that continue past it.

mod cp;
mod milp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::obs::{Alphabet, HighLevelObs};
use crate::prefix_tree::PrefixTree;

pub use cp::{build_cp, export_cp, CpModel, CpObjectiveTerm, XExpr};
pub use milp::{
    build_milp, export_milp, LinearConstraint, MCap, MilpModel, MilpOptions, Relation, TreeNode,
};

/// Default cap on the number of `y` variables and transition rows an
/// export may produce.
pub const DEFAULT_MODEL_BUDGET: u128 = 10_000_000;

/// Outcome of substituting a machine into an exported model.
#[derive(Debug, Clone, PartialEq)]
pub struct Substitution {
    pub feasible: bool,
    /// Id of the first violated constraint family, e.g. `"(19)"`.
    pub violated: Option<String>,
    pub objective: f64,
}

/// Instance description stored in export headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    pub format: String,
    pub propositions: Vec<String>,
    /// The observed alphabet, one list of true propositions per symbol index.
    pub symbols: Vec<Vec<String>>,
    pub u_max: usize,
    /// Tree size including the root.
    pub nodes: usize,
    pub compressed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_k: Option<f64>,
}

impl ModelMeta {
    fn new(format: &str, tree: &PrefixTree, u_max: usize, compressed: bool) -> Self {
        let alphabet = tree.alphabet();
        ModelMeta {
            format: format.into(),
            propositions: alphabet.names().map(str::to_owned).collect(),
            symbols: tree
                .sigma()
                .iter()
                .map(|o| alphabet.sorted_names(o))
                .collect(),
            u_max,
            nodes: tree.len(),
            compressed,
            m_cap: None,
            log_k: None,
        }
    }

    /// Rebuilds the observed alphabet so machines can be projected onto it.
    pub fn sigma(&self) -> Result<Vec<HighLevelObs>> {
        let alphabet = Alphabet::new(self.propositions.iter().cloned())?;
        let sigma = self
            .symbols
            .iter()
            .map(|names| alphabet.obs(names))
            .collect::<Result<Vec<_>>>()?;
        if sigma.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract(
                "model symbols are not in canonical order".into(),
            ));
        }
        Ok(sigma)
    }

    fn validate(&self, format: &str) -> Result<()> {
        if self.format != format {
            return Err(Error::parse(
                0,
                format!("expected a {format} model, found {}", self.format),
            ));
        }
        if self.u_max == 0 || self.u_max > crate::table::MAX_STATES {
            return Err(Error::parse(0, format!("bad u_max {}", self.u_max)));
        }
        if self.nodes == 0 {
            return Err(Error::parse(0, "a model needs at least the root node"));
        }
        self.sigma().map_err(|e| Error::parse(0, e.to_string()))?;
        Ok(())
    }
}

fn check_instance(tree: &PrefixTree, u_max: usize, compressed: bool) -> Result<()> {
    if u_max == 0 || u_max > crate::table::MAX_STATES {
        return Err(Error::Config(format!(
            "u_max must be in 1..={}, got {u_max}",
            crate::table::MAX_STATES
        )));
    }
    if tree.is_empty() {
        return Err(Error::Contract(
            "cannot export a model for an empty prefix tree".into(),
        ));
    }
    if tree.is_compressed() && !compressed {
        return Err(Error::Config(
            "the tree was built from compressed traces; enable compressed mode".into(),
        ));
    }
    Ok(())
}

/// Splits `name` as `prefix_a_b_...` into exactly `count` indices.
fn indices(name: &str, prefix: &str, count: usize) -> Option<Vec<usize>> {
    let rest = name.strip_prefix(prefix)?.strip_prefix('_')?;
    let parts: Vec<usize> = rest
        .split('_')
        .map(|p| p.parse().ok())
        .collect::<Option<_>>()?;
    (parts.len() == count).then_some(parts)
}

/// Shortest decimal text that parses back to the same value.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}
