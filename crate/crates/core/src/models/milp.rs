//! The MILP model in LP text format.
//!
//! Variables: `x_n_u` (node `n` is in state `u`), `d_u_s_v` (`δ(u, s) = v`),
//! `p_u_s_t` (symbol `t` may follow `s` in state `u`), `y_u_s_m`
//! (`|N_{u,s}| = m`) and the continuous `z_n` (log-loss of node `n`).
//! Constraint names start with `cNN_`, where `NN` is the constraint family.
//!
//! The header comments carry the instance: a `\ meta` line with JSON and one
//! `\ node <id> <parent> <sym> <continuations>` line per tree node (`-` for
//! the root's missing fields). Solvers ignore them; the parser uses them to
//! derive the assignment implied by a machine.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use super::{check_instance, fmt_num, ModelMeta, Substitution, DEFAULT_MODEL_BUDGET};
use crate::error::{Error, Result};
use crate::prefix_tree::{PrefixTree, ROOT};
use crate::rm::RewardMachine;
use crate::table::TransitionTable;

const FORMAT: &str = "lrm-milp";
const WRAP: usize = 200;

/// Range of the cardinality index `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MCap {
    /// `m ≤ |Σ|`, which every prediction set satisfies.
    #[default]
    Distinct,
    /// `m ≤ 2^|Σ|`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOptions {
    pub m_cap: MCap,
    /// Refuse exports with more `y` variables or transition rows than this.
    pub budget: u128,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            m_cap: MCap::Distinct,
            budget: DEFAULT_MODEL_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn as_str(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    fn parse(tok: &str) -> Option<Self> {
        match tok {
            "<=" | "=<" | "<" => Some(Relation::Le),
            ">=" | "=>" | ">" => Some(Relation::Ge),
            "=" => Some(Relation::Eq),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    /// Constraint family, e.g. `"(11)"` for `c11_n3_u0`.
    pub fn family(&self) -> String {
        let digits: String = self
            .name
            .trim_start_matches('c')
            .chars()
            .take_while(char::is_ascii_digit)
            .collect();
        format!("({digits})")
    }

    fn holds(&self, lhs: f64) -> bool {
        let tol = 1e-9 * (1.0 + self.rhs.abs());
        match self.relation {
            Relation::Le => lhs <= self.rhs + tol,
            Relation::Ge => lhs >= self.rhs - tol,
            Relation::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// Tree node as recorded in the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub sym: Option<usize>,
    pub continuations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub meta: ModelMeta,
    pub nodes: Vec<TreeNode>,
    pub objective: Vec<(f64, String)>,
    pub constraints: Vec<LinearConstraint>,
    pub binaries: Vec<String>,
    /// Continuous variables, all bounded below by zero.
    pub continuous: Vec<String>,
}

/// Builds the MILP for `tree` with `u_max` states; closure rows are
/// included iff `compressed`.
#[allow(clippy::needless_range_loop)] // node ids name the variables
pub fn build_milp(
    tree: &PrefixTree,
    u_max: usize,
    compressed: bool,
    opts: &MilpOptions,
) -> Result<MilpModel> {
    check_instance(tree, u_max, compressed)?;
    let k = tree.sigma().len();
    let m_cap: u128 = match opts.m_cap {
        MCap::Distinct => k as u128,
        MCap::Full => 1u128
            .checked_shl(k as u32)
            .filter(|_| k < 127)
            .unwrap_or(u128::MAX),
    };
    let y_count = (u_max as u128)
        .saturating_mul(k as u128)
        .saturating_mul(m_cap);
    if y_count > opts.budget {
        return Err(Error::Budget {
            what: "MILP cardinality variables".into(),
            needed: y_count,
            budget: opts.budget,
        });
    }
    let rows = (tree.len() as u128).saturating_mul((u_max * u_max) as u128);
    if rows > opts.budget {
        return Err(Error::Budget {
            what: "MILP transition rows".into(),
            needed: rows,
            budget: opts.budget,
        });
    }
    let m_cap = m_cap as usize;
    let log_k = k as f64 * std::f64::consts::LN_2;
    let mut meta = ModelMeta::new(FORMAT, tree, u_max, compressed);
    meta.m_cap = Some(m_cap);
    meta.log_k = Some(log_k);

    let nodes: Vec<TreeNode> = tree
        .nodes()
        .iter()
        .map(|n| TreeNode {
            parent: n.parent,
            sym: n.sym,
            continuations: n.continuations,
        })
        .collect();
    let ln: Vec<f64> = (0..=m_cap)
        .map(|m| if m <= 1 { 0.0 } else { (m as f64).ln() })
        .collect();
    let x = |n: usize, u: usize| format!("x_{n}_{u}");
    let d = |u: usize, s: usize, v: usize| format!("d_{u}_{s}_{v}");
    let p = |u: usize, s: usize, t: usize| format!("p_{u}_{s}_{t}");
    let y = |u: usize, s: usize, m: usize| format!("y_{u}_{s}_{m}");
    let z = |n: usize| format!("z_{n}");
    let mut cons = Vec::new();
    let mut push = |name: String, terms: Vec<(f64, String)>, relation, rhs| {
        cons.push(LinearConstraint {
            name,
            terms,
            relation,
            rhs,
        });
    };

    for n in 1..nodes.len() {
        let s = nodes[n].sym.expect("non-root node");
        for u in 0..u_max {
            let mut terms = vec![(1.0, z(n))];
            terms.extend((2..=m_cap).map(|m| (-ln[m], y(u, s, m))));
            terms.push((-log_k, x(n, u)));
            push(format!("c11_n{n}_u{u}"), terms, Relation::Ge, -log_k);
        }
    }
    for u in 0..u_max {
        for s in 0..k {
            push(
                format!("c12_u{u}_s{s}"),
                (1..=m_cap).map(|m| (1.0, y(u, s, m))).collect(),
                Relation::Eq,
                1.0,
            );
        }
    }
    for u in 0..u_max {
        for s in 0..k {
            let mut terms: Vec<_> = (0..k).map(|t| (1.0, p(u, s, t))).collect();
            terms.extend((1..=m_cap).map(|m| (-(m as f64), y(u, s, m))));
            push(format!("c13_u{u}_s{s}"), terms, Relation::Eq, 0.0);
        }
    }
    for n in tree.inner_nodes() {
        let s = nodes[n].sym.expect("non-root node");
        for u in 0..u_max {
            for &c in tree.node(n).children.values() {
                let t = nodes[c].sym.expect("non-root node");
                push(
                    format!("c14_n{n}_u{u}_c{c}"),
                    vec![(1.0, p(u, s, t)), (-1.0, x(n, u))],
                    Relation::Ge,
                    0.0,
                );
            }
        }
    }
    for u in 0..u_max {
        for s in 0..k {
            push(
                format!("c15_u{u}_s{s}"),
                (0..u_max).map(|v| (1.0, d(u, s, v))).collect(),
                Relation::Eq,
                1.0,
            );
        }
    }
    for n in 0..nodes.len() {
        push(
            format!("c16_n{n}"),
            (0..u_max).map(|u| (1.0, x(n, u))).collect(),
            Relation::Eq,
            1.0,
        );
    }
    push(
        format!("c17_n{ROOT}"),
        vec![(1.0, x(ROOT, 0))],
        Relation::Eq,
        1.0,
    );
    for n in 1..nodes.len() {
        if nodes[n].parent == Some(ROOT) {
            push(format!("c17_n{n}"), vec![(1.0, x(n, 0))], Relation::Eq, 1.0);
        }
    }
    for n in 1..nodes.len() {
        let parent = nodes[n].parent.expect("non-root node");
        if parent == ROOT {
            continue;
        }
        let s = nodes[n].sym.expect("non-root node");
        for u in 0..u_max {
            for v in 0..u_max {
                push(
                    format!("c18_n{n}_u{u}_v{v}"),
                    vec![(1.0, x(parent, u)), (1.0, x(n, v)), (-1.0, d(u, s, v))],
                    Relation::Le,
                    1.0,
                );
            }
        }
    }
    if compressed {
        for u in 0..u_max {
            for v in (0..u_max).filter(|&v| v != u) {
                for s in 0..k {
                    push(
                        format!("c19_u{u}_v{v}_s{s}"),
                        vec![(1.0, d(u, s, v)), (-1.0, d(v, s, v))],
                        Relation::Le,
                        0.0,
                    );
                }
            }
        }
    }

    let mut objective: Vec<(f64, String)> = (1..nodes.len())
        .filter(|&n| nodes[n].continuations > 0)
        .map(|n| (nodes[n].continuations as f64, z(n)))
        .collect();
    if objective.is_empty() {
        objective.push((0.0, z(1)));
    }
    let mut binaries = Vec::new();
    binaries.extend((0..nodes.len()).flat_map(|n| (0..u_max).map(move |u| x(n, u))));
    for u in 0..u_max {
        for s in 0..k {
            binaries.extend((0..u_max).map(|v| d(u, s, v)));
        }
    }
    for u in 0..u_max {
        for s in 0..k {
            binaries.extend((0..k).map(|t| p(u, s, t)));
        }
    }
    for u in 0..u_max {
        for s in 0..k {
            binaries.extend((1..=m_cap).map(|m| y(u, s, m)));
        }
    }
    let continuous = (1..nodes.len()).map(z).collect();
    Ok(MilpModel {
        meta,
        nodes,
        objective,
        constraints: cons,
        binaries,
        continuous,
    })
}

/// [`build_milp`] with default options, rendered as LP text.
pub fn export_milp(tree: &PrefixTree, u_max: usize, compressed: bool) -> Result<String> {
    Ok(build_milp(tree, u_max, compressed, &MilpOptions::default())?.to_lp())
}

fn write_terms(out: &mut String, line_start: usize, terms: &[(f64, String)]) -> usize {
    let mut start = line_start;
    for (c, v) in terms {
        if out.len() - start > WRAP {
            out.push_str("\n   ");
            start = out.len() - 3;
        }
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {v}", fmt_num(c.abs()));
    }
    start
}

impl MilpModel {
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Renders the model in LP text format.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ lrm-milp: learning a reward machine from a prefix tree\n");
        let _ = writeln!(
            out,
            "\\ meta {}",
            serde_json::to_string(&self.meta).expect("meta serialises")
        );
        for (id, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
            let sym = n.sym.map_or("-".to_string(), |s| s.to_string());
            let _ = writeln!(out, "\\ node {id} {parent} {sym} {}", n.continuations);
        }
        out.push_str("Minimize\n obj:");
        let start = out.len() - 5;
        write_terms(&mut out, start, &self.objective);
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let start = out.len();
            let _ = write!(out, " {}:", c.name);
            let start = write_terms(&mut out, start, &c.terms);
            if out.len() - start > WRAP {
                out.push_str("\n   ");
            }
            let _ = writeln!(out, " {} {}", c.relation.as_str(), fmt_num(c.rhs));
        }
        out.push_str("Bounds\n");
        for v in &self.continuous {
            let _ = writeln!(out, " {v} >= 0");
        }
        out.push_str("Binaries\n");
        for chunk in self.binaries.chunks(10) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
        out.push_str("End\n");
        out
    }

    /// Parses LP text produced by [`MilpModel::to_lp`].
    pub fn parse_lp(text: &str) -> Result<MilpModel> {
        #[derive(PartialEq, Clone, Copy)]
        enum Section {
            Preamble,
            Objective,
            Constraints,
            Bounds,
            Binaries,
            End,
        }
        let mut section = Section::Preamble;
        let mut meta: Option<ModelMeta> = None;
        let mut nodes = Vec::new();
        let mut obj_tokens: Vec<(usize, String)> = Vec::new();
        let mut con_tokens: Vec<(usize, String)> = Vec::new();
        let mut continuous = Vec::new();
        let mut binaries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('\\') {
                let comment = comment.trim();
                if let Some(json) = comment.strip_prefix("meta ") {
                    meta = Some(
                        serde_json::from_str(json)
                            .map_err(|e| Error::parse(lineno, format!("bad meta: {e}")))?,
                    );
                } else if let Some(rest) = comment.strip_prefix("node ") {
                    nodes.push(parse_node(rest, nodes.len()).map_err(|m| Error::parse(lineno, m))?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let next = match line.to_ascii_lowercase().as_str() {
                "minimize" | "minimise" | "min" => Some(Section::Objective),
                "subject to" | "st" | "s.t." => Some(Section::Constraints),
                "bounds" => Some(Section::Bounds),
                "binaries" | "binary" | "bin" => Some(Section::Binaries),
                "end" => Some(Section::End),
                _ => None,
            };
            if let Some(next) = next {
                section = next;
                continue;
            }
            let tokens = line.split_whitespace().map(|t| (lineno, t.to_string()));
            match section {
                Section::Objective => obj_tokens.extend(tokens),
                Section::Constraints => con_tokens.extend(tokens),
                Section::Bounds => {
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    match parts.as_slice() {
                        [v, ">=", "0"] => continuous.push(v.to_string()),
                        _ => {
                            return Err(Error::parse(lineno, format!("unsupported bound `{line}`")))
                        }
                    }
                }
                Section::Binaries => binaries.extend(line.split_whitespace().map(str::to_owned)),
                Section::Preamble | Section::End => {
                    return Err(Error::parse(
                        lineno,
                        format!("unexpected text `{line}` outside a section"),
                    ))
                }
            }
        }
        if section != Section::End {
            return Err(Error::parse(text.lines().count(), "missing `End`"));
        }
        let meta = meta.ok_or_else(|| Error::parse(0, "missing `\\ meta` header"))?;
        meta.validate(FORMAT)?;
        if nodes.len() != meta.nodes {
            return Err(Error::parse(
                0,
                format!(
                    "header declares {} nodes, found {}",
                    meta.nodes,
                    nodes.len()
                ),
            ));
        }
        let m_cap = meta
            .m_cap
            .ok_or_else(|| Error::parse(0, "meta lacks m_cap"))?;
        if m_cap < meta.symbols.len() {
            return Err(Error::parse(0, "m_cap is smaller than the alphabet"));
        }
        for (id, n) in nodes.iter().enumerate().skip(1) {
            match (n.parent, n.sym) {
                (Some(p), Some(s)) if p < id && s < meta.symbols.len() => {}
                _ => {
                    return Err(Error::parse(
                        0,
                        format!("node {id} has a bad parent or symbol"),
                    ))
                }
            }
        }

        let mut obj_iter = obj_tokens.into_iter().peekable();
        match obj_iter.next() {
            Some((_, label)) if label.ends_with(':') => {}
            Some((l, t)) => {
                return Err(Error::parse(
                    l,
                    format!("expected objective label, found `{t}`"),
                ))
            }
            None => return Err(Error::parse(0, "empty objective")),
        }
        let (objective, rest) = parse_terms(&mut obj_iter)?;
        if let Some((l, t)) = rest {
            return Err(Error::parse(l, format!("unexpected `{t}` in objective")));
        }

        let mut constraints = Vec::new();
        let mut it = con_tokens.into_iter().peekable();
        while let Some((l, label)) = it.next() {
            let name = label
                .strip_suffix(':')
                .filter(|n| !n.is_empty())
                .ok_or_else(|| {
                    Error::parse(l, format!("expected constraint name, found `{label}`"))
                })?
                .to_string();
            let (terms, rel) = parse_terms(&mut it)?;
            let (l, rel) =
                rel.ok_or_else(|| Error::parse(l, format!("constraint {name} has no relation")))?;
            let relation = Relation::parse(&rel)
                .ok_or_else(|| Error::parse(l, format!("expected relation, found `{rel}`")))?;
            let (l, rhs) = it.next().ok_or_else(|| {
                Error::parse(l, format!("constraint {name} has no right-hand side"))
            })?;
            let rhs = parse_number(&rhs)
                .ok_or_else(|| Error::parse(l, format!("bad right-hand side `{rhs}`")))?;
            constraints.push(LinearConstraint {
                name,
                terms,
                relation,
                rhs,
            });
        }
        Ok(MilpModel {
            meta,
            nodes,
            objective,
            constraints,
            binaries,
            continuous,
        })
    }

    /// Every variable name the model declares.
    pub fn declared(&self) -> BTreeSet<&str> {
        self.binaries
            .iter()
            .chain(&self.continuous)
            .map(String::as_str)
            .collect()
    }

    /// Fixes every variable to the value implied by `rm`, checks all
    /// constraints and evaluates the objective.
    pub fn substitute_and_score(&self, rm: &RewardMachine) -> Result<Substitution> {
        let values = self.assignment(rm)?;
        let value = |v: &str| {
            values
                .get(v)
                .copied()
                .ok_or_else(|| Error::Contract(format!("model references undeclared variable {v}")))
        };
        let mut violated = None;
        for v in &self.continuous {
            if value(v)? < 0.0 {
                violated = Some("(24)".to_string());
                break;
            }
        }
        if violated.is_none() {
            for c in &self.constraints {
                let lhs = c
                    .terms
                    .iter()
                    .map(|(k, v)| Ok(k * value(v)?))
                    .sum::<Result<f64>>()?;
                if !c.holds(lhs) {
                    violated = Some(c.family());
                    break;
                }
            }
        }
        let objective = self
            .objective
            .iter()
            .map(|(k, v)| Ok(k * value(v)?))
            .sum::<Result<f64>>()?;
        Ok(Substitution {
            feasible: violated.is_none(),
            violated,
            objective,
        })
    }

    fn assignment(&self, rm: &RewardMachine) -> Result<HashMap<String, f64>> {
        let meta = &self.meta;
        let sigma = meta.sigma()?;
        let (u_max, k) = (meta.u_max, sigma.len());
        let m_cap = meta.m_cap.unwrap_or(k);
        let table = TransitionTable::from_rm_padded(rm, &sigma, u_max)?;
        let mut state = vec![0usize; self.nodes.len()];
        let mut sets = vec![BTreeSet::new(); u_max * k];
        for (n, node) in self.nodes.iter().enumerate().skip(1) {
            let parent = node.parent.expect("validated");
            let sym = node.sym.expect("validated");
            state[n] = if parent == ROOT {
                0
            } else {
                table.next(state[parent], sym)
            };
            if parent != ROOT {
                let psym = self.nodes[parent].sym.expect("validated");
                sets[state[parent] * k + psym].insert(sym);
            }
        }
        let size = |u: usize, s: usize| sets[u * k + s].len().max(1);
        let mut values = HashMap::new();
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        for (n, &st) in state.iter().enumerate() {
            for u in 0..u_max {
                values.insert(format!("x_{n}_{u}"), flag(st == u));
            }
        }
        for u in 0..u_max {
            for s in 0..k {
                for v in 0..u_max {
                    values.insert(format!("d_{u}_{s}_{v}"), flag(table.next(u, s) == v));
                }
                let set = &sets[u * k + s];
                for t in 0..k {
                    values.insert(
                        format!("p_{u}_{s}_{t}"),
                        flag(set.contains(&t) || (set.is_empty() && t == 0)),
                    );
                }
                for m in 1..=m_cap {
                    values.insert(format!("y_{u}_{s}_{m}"), flag(size(u, s) == m));
                }
            }
        }
        for (n, node) in self.nodes.iter().enumerate().skip(1) {
            let s = node.sym.expect("validated");
            values.insert(format!("z_{n}"), (size(state[n], s) as f64).ln());
        }
        Ok(values)
    }
}

fn parse_node(rest: &str, expected_id: usize) -> std::result::Result<TreeNode, String> {
    let parts: Vec<&str> = rest.split_whitespace().collect();
    let [id, parent, sym, cont] = parts.as_slice() else {
        return Err(format!("bad node line `{rest}`"));
    };
    let opt = |t: &str| -> std::result::Result<Option<usize>, String> {
        if t == "-" {
            Ok(None)
        } else {
            t.parse().map(Some).map_err(|_| format!("bad index `{t}`"))
        }
    };
    let id: usize = id.parse().map_err(|_| format!("bad node id `{id}`"))?;
    if id != expected_id {
        return Err(format!("node {id} out of order, expected {expected_id}"));
    }
    let node = TreeNode {
        parent: opt(parent)?,
        sym: opt(sym)?,
        continuations: cont.parse().map_err(|_| format!("bad count `{cont}`"))?,
    };
    if (id == ROOT) != node.parent.is_none() || node.parent.is_none() != node.sym.is_none() {
        return Err(format!("node {id} has inconsistent parent and symbol"));
    }
    Ok(node)
}

fn parse_number(tok: &str) -> Option<f64> {
    tok.parse::<f64>().ok().filter(|v| v.is_finite())
}

type Tokens = std::iter::Peekable<std::vec::IntoIter<(usize, String)>>;

/// Reads `± [coef] var` terms until a relation token or the end.
#[allow(clippy::type_complexity)]
fn parse_terms(it: &mut Tokens) -> Result<(Vec<(f64, String)>, Option<(usize, String)>)> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for (l, tok) in it.by_ref() {
        if Relation::parse(&tok).is_some() {
            if coef.is_some() {
                return Err(Error::parse(l, "coefficient without a variable"));
            }
            return Ok((terms, Some((l, tok))));
        }
        match tok.as_str() {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Some(v) = parse_number(&tok) {
                    if coef.is_some() {
                        return Err(Error::parse(l, "two coefficients in a row"));
                    }
                    coef = Some(v);
                } else if tok.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    && !tok.ends_with(':')
                {
                    terms.push((sign * coef.take().unwrap_or(1.0), tok));
                    sign = 1.0;
                } else {
                    return Err(Error::parse(l, format!("unexpected token `{tok}`")));
                }
            }
        }
    }
    if coef.is_some() {
        return Err(Error::parse(0, "coefficient without a variable"));
    }
    Ok((terms, None))
}
