//! Prefix trees merging a trace corpus into one trie.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::obs::{Alphabet, HighLevelObs};
use crate::traces::TraceSet;

pub type NodeId = usize;

pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct PtNode {
    /// `p(n)`; `None` only for the root.
    pub parent: Option<NodeId>,
    /// `o(n)`, the observation on the edge from the parent; `None` for the root.
    pub obs: Option<HighLevelObs>,
    /// Index of `obs` in the tree's observed alphabet.
    pub sym: Option<usize>,
    /// Number of observations on the path from the root (the prefix length).
    pub depth: usize,
    /// `C(n)`.
    pub children: BTreeMap<HighLevelObs, NodeId>,
    /// Number of traces whose prefix passes through this node, including the
    /// traces that end here.
    pub weight: u64,
    /// Number of traces that continue past this node. This is the counter the
    /// construction increments on every step and the weight of this node's
    /// prediction in the objective.
    pub continuations: u64,
}

impl PtNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Trie over a corpus. Node ids are dense and assigned in insertion order,
/// so every parent id is smaller than its children's.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixTree {
    alphabet: Alphabet,
    nodes: Vec<PtNode>,
    sigma: Vec<HighLevelObs>,
    compressed: bool,
}

impl PrefixTree {
    /// Builds the tree for a corpus. All traces must share one compression flag.
    pub fn build(corpus: &TraceSet) -> Result<Self> {
        let compressed = match corpus.compression() {
            Some(flag) => flag,
            None if corpus.is_empty() => false,
            None => {
                return Err(Error::Config(
                    "corpus mixes compressed and uncompressed traces".into(),
                ))
            }
        };
        let mut nodes = vec![PtNode {
            parent: None,
            obs: None,
            sym: None,
            depth: 0,
            children: BTreeMap::new(),
            weight: 0,
            continuations: 0,
        }];
        for trace in corpus.traces() {
            let mut node = ROOT;
            nodes[ROOT].weight += 1;
            for sigma in trace.obs() {
                nodes[node].continuations += 1;
                let next = match nodes[node].children.get(sigma) {
                    Some(&child) => child,
                    None => {
                        let child = nodes.len();
                        let depth = nodes[node].depth + 1;
                        nodes.push(PtNode {
                            parent: Some(node),
                            obs: Some(sigma.clone()),
                            sym: None,
                            depth,
                            children: BTreeMap::new(),
                            weight: 0,
                            continuations: 0,
                        });
                        nodes[node].children.insert(sigma.clone(), child);
                        child
                    }
                };
                nodes[next].weight += 1;
                node = next;
            }
        }

        let mut sigma: Vec<HighLevelObs> = nodes.iter().filter_map(|n| n.obs.clone()).collect();
        sigma.sort();
        sigma.dedup();
        let index: HashMap<&HighLevelObs, usize> =
            sigma.iter().enumerate().map(|(i, o)| (o, i)).collect();
        let syms: Vec<Option<usize>> = nodes
            .iter()
            .map(|n| n.obs.as_ref().map(|o| index[o]))
            .collect();
        for (node, sym) in nodes.iter_mut().zip(syms) {
            node.sym = sym;
        }
        Ok(PrefixTree {
            alphabet: corpus.alphabet().clone(),
            nodes,
            sigma,
            compressed,
        })
    }

    /// The proposition alphabet of the source corpus.
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn nodes(&self) -> &[PtNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &PtNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &PtNode {
        &self.nodes[ROOT]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    /// The observed alphabet Σ: every observation occurring in the corpus, sorted.
    pub fn sigma(&self) -> &[HighLevelObs] {
        &self.sigma
    }

    pub fn sym_of(&self, obs: &HighLevelObs) -> Option<usize> {
        self.sigma.binary_search(obs).ok()
    }

    pub fn is_compressed(&self) -> bool {
        self.compressed
    }

    pub fn num_traces(&self) -> u64 {
        self.nodes[ROOT].weight
    }

    /// Nodes with at least one child (`S_in`).
    pub fn inner_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..self.nodes.len()).filter(|&n| !self.nodes[n].is_leaf())
    }

    /// The observations spelled by the path from the root to `id`.
    pub fn prefix(&self, id: NodeId) -> Vec<HighLevelObs> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some(parent) = self.nodes[cur].parent {
            path.push(
                self.nodes[cur]
                    .obs
                    .clone()
                    .expect("non-root node has an observation"),
            );
            cur = parent;
        }
        path.reverse();
        path
    }
}
