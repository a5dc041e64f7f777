//! The CP model as line-oriented text.
//!
//! ```text
//! # meta {...}                                   instance description (JSON)
//! var d_U_S in 0..H                              decision variable, domain 0..=H
//! x_N = 0                                        root and depth-1 nodes
//! x_N = d[x_P][S]                                node state from its parent's
//! p_U_S_T = or(x_N == U, x_M == U, ...)          T may follow S in state U
//! y_U_S = sum(p_U_S_T, ...)                      prediction set size
//! if_then(d_U_S == V, d_V_S == V)                closure (compressed mode only)
//! minimize
//!  + W * log(y[x_N][S])                          one objective term per line
//! end
//! ```
//!
//! Other lines starting with `#` are comments. `log` is the natural log.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{check_instance, fmt_num, indices, ModelMeta, Substitution};
use crate::error::{Error, Result};
use crate::prefix_tree::{PrefixTree, ROOT};
use crate::rm::RewardMachine;
use crate::table::TransitionTable;

const FORMAT: &str = "lrm-cp";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XExpr {
    Initial,
    /// `d[x_parent][sym]`
    Step {
        parent: usize,
        sym: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpObjectiveTerm {
    pub weight: f64,
    pub node: usize,
    pub sym: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpModel {
    pub meta: ModelMeta,
    /// `(u, s, hi)`: `d_{u,s} ∈ 0..=hi`.
    pub domains: Vec<(usize, usize, usize)>,
    /// Node expressions in definition order.
    pub x: Vec<(usize, XExpr)>,
    /// `((u, s, t), nodes)`: `p_{u,s,t}` is true iff some listed node is in state `u`.
    pub p: Vec<((usize, usize, usize), Vec<usize>)>,
    /// `((u, s), ts)`: `y_{u,s} = Σ_t p_{u,s,t}`.
    pub y: Vec<((usize, usize), Vec<usize>)>,
    /// `(u, s, v)`: if `d_{u,s} = v` then `d_{v,s} = v`.
    pub if_then: Vec<(usize, usize, usize)>,
    pub objective: Vec<CpObjectiveTerm>,
}

/// Builds the CP model for `tree`; closure lines are included iff `compressed`.
#[allow(clippy::needless_range_loop)]
pub fn build_cp(tree: &PrefixTree, u_max: usize, compressed: bool) -> Result<CpModel> {
    check_instance(tree, u_max, compressed)?;
    let k = tree.sigma().len();
    let meta = ModelMeta::new(FORMAT, tree, u_max, compressed);
    let domains = (0..u_max)
        .flat_map(|u| (0..k).map(move |s| (u, s, u_max - 1)))
        .collect();
    let mut x = Vec::with_capacity(tree.len());
    for (n, node) in tree.nodes().iter().enumerate() {
        let expr = match node.parent {
            None => XExpr::Initial,
            Some(ROOT) => XExpr::Initial,
            Some(parent) => XExpr::Step {
                parent,
                sym: node.sym.expect("non-root node"),
            },
        };
        x.push((n, expr));
    }
    // S(σ, σ'): inner nodes on σ with a child on σ'.
    let mut occurrences: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); k]; k];
    for n in tree.inner_nodes() {
        let s = tree.node(n).sym.expect("non-root node");
        for &c in tree.node(n).children.values() {
            occurrences[s][tree.node(c).sym.expect("non-root node")].push(n);
        }
    }
    let mut p = Vec::new();
    let mut y = Vec::new();
    for u in 0..u_max {
        for s in 0..k {
            let ts: Vec<usize> = (0..k).filter(|&t| !occurrences[s][t].is_empty()).collect();
            for &t in &ts {
                p.push(((u, s, t), occurrences[s][t].clone()));
            }
            y.push(((u, s), ts));
        }
    }
    let mut if_then = Vec::new();
    if compressed {
        for u in 0..u_max {
            for v in (0..u_max).filter(|&v| v != u) {
                for s in 0..k {
                    if_then.push((u, s, v));
                }
            }
        }
    }
    let objective = tree
        .inner_nodes()
        .map(|n| {
            let node = tree.node(n);
            CpObjectiveTerm {
                weight: node.continuations as f64,
                node: n,
                sym: node.sym.expect("non-root node"),
            }
        })
        .collect();
    Ok(CpModel {
        meta,
        domains,
        x,
        p,
        y,
        if_then,
        objective,
    })
}

/// [`build_cp`] rendered as text.
pub fn export_cp(tree: &PrefixTree, u_max: usize, compressed: bool) -> Result<String> {
    Ok(build_cp(tree, u_max, compressed)?.to_text())
}

impl CpModel {
    pub fn num_constraints(&self) -> usize {
        self.if_then.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# lrm-cp: learning a reward machine from a prefix tree\n");
        let _ = writeln!(
            out,
            "# meta {}",
            serde_json::to_string(&self.meta).expect("meta serialises")
        );
        for &(u, s, hi) in &self.domains {
            let _ = writeln!(out, "var d_{u}_{s} in 0..{hi}");
        }
        for &(n, expr) in &self.x {
            match expr {
                XExpr::Initial => {
                    let _ = writeln!(out, "x_{n} = 0");
                }
                XExpr::Step { parent, sym } => {
                    let _ = writeln!(out, "x_{n} = d[x_{parent}][{sym}]");
                }
            }
        }
        for ((u, s, t), nodes) in &self.p {
            let args: Vec<String> = nodes.iter().map(|n| format!("x_{n} == {u}")).collect();
            let _ = writeln!(out, "p_{u}_{s}_{t} = or({})", args.join(", "));
        }
        for ((u, s), ts) in &self.y {
            let args: Vec<String> = ts.iter().map(|t| format!("p_{u}_{s}_{t}")).collect();
            let _ = writeln!(out, "y_{u}_{s} = sum({})", args.join(", "));
        }
        for &(u, s, v) in &self.if_then {
            let _ = writeln!(out, "if_then(d_{u}_{s} == {v}, d_{v}_{s} == {v})");
        }
        out.push_str("minimize\n");
        for term in &self.objective {
            let _ = writeln!(
                out,
                " + {} * log(y[x_{}][{}])",
                fmt_num(term.weight),
                term.node,
                term.sym
            );
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<CpModel> {
        let mut meta: Option<ModelMeta> = None;
        let mut model = CpModel {
            meta: ModelMeta {
                format: String::new(),
                propositions: Vec::new(),
                symbols: Vec::new(),
                u_max: 0,
                nodes: 0,
                compressed: false,
                m_cap: None,
                log_k: None,
            },
            domains: Vec::new(),
            x: Vec::new(),
            p: Vec::new(),
            y: Vec::new(),
            if_then: Vec::new(),
            objective: Vec::new(),
        };
        let mut in_objective = false;
        let mut ended = false;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            let err = |msg: String| Error::parse(lineno, msg);
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(json) = comment.trim().strip_prefix("meta ") {
                    meta = Some(
                        serde_json::from_str(json).map_err(|e| err(format!("bad meta: {e}")))?,
                    );
                }
                continue;
            }
            if ended {
                return Err(err(format!("text after `end`: `{line}`")));
            }
            if line == "minimize" {
                in_objective = true;
                continue;
            }
            if line == "end" {
                ended = true;
                continue;
            }
            if in_objective {
                model.objective.push(
                    parse_objective_term(line)
                        .ok_or_else(|| err(format!("bad objective term `{line}`")))?,
                );
                continue;
            }
            if let Some(rest) = line.strip_prefix("var ") {
                let (name, range) = rest
                    .split_once(" in ")
                    .ok_or_else(|| err(format!("bad variable `{line}`")))?;
                let us = indices(name.trim(), "d", 2)
                    .ok_or_else(|| err(format!("bad variable name `{name}`")))?;
                let (lo, hi) = range
                    .trim()
                    .split_once("..")
                    .ok_or_else(|| err(format!("bad domain `{range}`")))?;
                if lo.trim() != "0" {
                    return Err(err(format!("domains start at 0, found `{lo}`")));
                }
                let hi = hi
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad domain bound `{hi}`")))?;
                model.domains.push((us[0], us[1], hi));
            } else if let Some(args) = line
                .strip_prefix("if_then(")
                .and_then(|r| r.strip_suffix(')'))
            {
                let (a, b) = args
                    .split_once(',')
                    .ok_or_else(|| err(format!("bad if_then `{line}`")))?;
                let (d1, v1) =
                    parse_eq(a, "d", 2).ok_or_else(|| err(format!("bad condition `{a}`")))?;
                let (d2, v2) =
                    parse_eq(b, "d", 2).ok_or_else(|| err(format!("bad consequence `{b}`")))?;
                if d1[1] != d2[1] || v1 != v2 || d2[0] != v1 {
                    return Err(err(format!(
                        "if_then is not a closure constraint: `{line}`"
                    )));
                }
                model.if_then.push((d1[0], d1[1], v1));
            } else {
                let (lhs, rhs) = line
                    .split_once(" = ")
                    .ok_or_else(|| err(format!("unrecognised line `{line}`")))?;
                let (lhs, rhs) = (lhs.trim(), rhs.trim());
                if let Some(n) = indices(lhs, "x", 1) {
                    let expr = if rhs == "0" {
                        XExpr::Initial
                    } else {
                        parse_step(rhs)
                            .ok_or_else(|| err(format!("bad node expression `{rhs}`")))?
                    };
                    model.x.push((n[0], expr));
                } else if let Some(ust) = indices(lhs, "p", 3) {
                    let args = call_args(rhs, "or")
                        .ok_or_else(|| err(format!("bad or-expression `{rhs}`")))?;
                    let mut nodes = Vec::new();
                    for a in args {
                        let (n, u) = parse_eq(a, "x", 1)
                            .ok_or_else(|| err(format!("bad or-argument `{a}`")))?;
                        if u != ust[0] {
                            return Err(err(format!("`{a}` tests a state other than {}", ust[0])));
                        }
                        nodes.push(n[0]);
                    }
                    model.p.push(((ust[0], ust[1], ust[2]), nodes));
                } else if let Some(us) = indices(lhs, "y", 2) {
                    let args =
                        call_args(rhs, "sum").ok_or_else(|| err(format!("bad sum `{rhs}`")))?;
                    let mut ts = Vec::new();
                    for a in args {
                        match indices(a.trim(), "p", 3) {
                            Some(ust) if ust[0] == us[0] && ust[1] == us[1] => ts.push(ust[2]),
                            _ => return Err(err(format!("bad sum argument `{a}`"))),
                        }
                    }
                    model.y.push(((us[0], us[1]), ts));
                } else {
                    return Err(err(format!("unrecognised definition `{lhs}`")));
                }
            }
        }
        if !ended {
            return Err(Error::parse(text.lines().count(), "missing `end`"));
        }
        model.meta = meta.ok_or_else(|| Error::parse(0, "missing `# meta` header"))?;
        model.meta.validate(FORMAT)?;
        Ok(model)
    }

    /// Fixes `d` from `rm`, evaluates every expression and the objective, and
    /// checks the domains and closure constraints.
    pub fn substitute_and_score(&self, rm: &RewardMachine) -> Result<Substitution> {
        let sigma = self.meta.sigma()?;
        let table = TransitionTable::from_rm_padded(rm, &sigma, self.meta.u_max)?;
        let k = sigma.len();
        let d = |u: usize, s: usize| -> Result<usize> {
            if u < table.num_states() && s < k {
                Ok(table.next(u, s))
            } else {
                Err(Error::Contract(format!("d_{u}_{s} is out of range")))
            }
        };
        let mut violated = None;
        for &(u, s, hi) in &self.domains {
            if d(u, s)? > hi {
                violated = Some("(31)".to_string());
                break;
            }
        }
        let mut x: HashMap<usize, usize> = HashMap::new();
        for &(n, expr) in &self.x {
            let value = match expr {
                XExpr::Initial => 0,
                XExpr::Step { parent, sym } => {
                    let xp = *x.get(&parent).ok_or_else(|| {
                        Error::Contract(format!("x_{n} uses undefined x_{parent}"))
                    })?;
                    d(xp, sym)?
                }
            };
            x.insert(n, value);
        }
        let mut p: HashMap<(usize, usize, usize), usize> = HashMap::new();
        for (key, nodes) in &self.p {
            let mut any = false;
            for n in nodes {
                any |= *x
                    .get(n)
                    .ok_or_else(|| Error::Contract(format!("p uses undefined x_{n}")))?
                    == key.0;
            }
            p.insert(*key, usize::from(any));
        }
        let mut y: HashMap<(usize, usize), usize> = HashMap::new();
        for &((u, s), ref ts) in &self.y {
            let mut total = 0;
            for &t in ts {
                total += *p.get(&(u, s, t)).ok_or_else(|| {
                    Error::Contract(format!("y_{u}_{s} uses undefined p_{u}_{s}_{t}"))
                })?;
            }
            y.insert((u, s), total);
        }
        if violated.is_none() {
            for &(u, s, v) in &self.if_then {
                if d(u, s)? == v && d(v, s)? != v {
                    violated = Some("(29)".to_string());
                    break;
                }
            }
        }
        let mut objective = 0.0;
        for term in &self.objective {
            let xn = *x.get(&term.node).ok_or_else(|| {
                Error::Contract(format!("objective uses undefined x_{}", term.node))
            })?;
            let size = y.get(&(xn, term.sym)).copied().unwrap_or(0);
            if size == 0 {
                return Err(Error::Contract(format!(
                    "log of an empty prediction set at node {}",
                    term.node
                )));
            }
            objective += term.weight * (size as f64).ln();
        }
        Ok(Substitution {
            feasible: violated.is_none(),
            violated,
            objective,
        })
    }
}

/// `name == value` with `name` of the form `prefix_i_j..`.
fn parse_eq(text: &str, prefix: &str, count: usize) -> Option<(Vec<usize>, usize)> {
    let (name, value) = text.trim().split_once("==")?;
    Some((
        indices(name.trim(), prefix, count)?,
        value.trim().parse().ok()?,
    ))
}

fn call_args<'a>(text: &'a str, func: &str) -> Option<Vec<&'a str>> {
    let inner = text
        .strip_prefix(func)?
        .strip_prefix('(')?
        .strip_suffix(')')?;
    if inner.trim().is_empty() {
        return Some(Vec::new());
    }
    Some(inner.split(',').collect())
}

/// `d[x_P][S]`
fn parse_step(text: &str) -> Option<XExpr> {
    let rest = text.strip_prefix("d[")?;
    let (xp, rest) = rest.split_once("][")?;
    let sym = rest.strip_suffix(']')?;
    Some(XExpr::Step {
        parent: indices(xp, "x", 1)?[0],
        sym: sym.parse().ok()?,
    })
}

/// `+ W * log(y[x_N][S])`
fn parse_objective_term(line: &str) -> Option<CpObjectiveTerm> {
    let rest = line.strip_prefix('+')?.trim();
    let (w, call) = rest.split_once('*')?;
    let weight: f64 = w.trim().parse().ok().filter(|v: &f64| v.is_finite())?;
    let inner = call.trim().strip_prefix("log(y[")?.strip_suffix("])")?;
    let (xn, sym) = inner.split_once("][")?;
    Some(CpObjectiveTerm {
        weight,
        node: indices(xn, "x", 1)?[0],
        sym: sym.parse().ok()?,
    })
}
