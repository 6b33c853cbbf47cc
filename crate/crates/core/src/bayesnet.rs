// SPDX-License-Identifier: Apache-2.0

//! Bayesian-network structure learning over binary variables.
//!
//! Structures are scored with BIC (Laplace-smoothed log-likelihood minus
//! `0.5 * ln(N)` per free parameter) and searched by greedy hill climbing
//! from the empty graph over single-arc additions, deletions and reversals.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::evm::{occurrence_vector, OpcodeSequence};
use crate::{Error, Result};

/// Relative tolerance under which two score deltas count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    variable_names: Vec<String>,
    /// Column-major storage, one entry per row.
    columns: Vec<Vec<u8>>,
    n_rows: usize,
}

impl BinaryDataset {
    pub fn new(variable_names: Vec<String>, rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let unique: BTreeSet<&String> = variable_names.iter().collect();
        if unique.len() != variable_names.len() {
            return Err(Error::Schema("duplicate variable names".into()));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); variable_names.len()];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != variable_names.len() {
                return Err(Error::Schema(format!(
                    "row {r} has {} entries for {} variables",
                    row.len(),
                    variable_names.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::Schema(format!("row {r} column {c} is {v}, expected 0 or 1")));
                }
                columns[c].push(v);
            }
        }
        Ok(BinaryDataset { variable_names, columns, n_rows: rows.len() })
    }

    /// Opcode occurrence matrix over `vocabulary`.
    pub fn from_sequences<'a>(
        seqs: impl IntoIterator<Item = &'a OpcodeSequence>,
        vocabulary: &[String],
    ) -> Result<Self> {
        let rows: Vec<Vec<u8>> = seqs.into_iter().map(|s| occurrence_vector(s, vocabulary)).collect();
        Self::new(vocabulary.to_vec(), &rows)
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn column(&self, i: usize) -> &[u8] {
        &self.columns[i]
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|n| n == name)
    }

    /// BIC contribution of one node given its parents.
    pub fn family_score(&self, node: usize, parents: &[usize]) -> f64 {
        let n_configs = 1usize << parents.len();
        let mut counts = vec![[0u32; 2]; n_configs];
        let child = &self.columns[node];
        for r in 0..self.n_rows {
            let cfg = parents
                .iter()
                .enumerate()
                .fold(0usize, |acc, (b, &p)| acc | ((self.columns[p][r] as usize) << b));
            counts[cfg][child[r] as usize] += 1;
        }
        let mut loglik = 0.0;
        for [n0, n1] in counts {
            let total = f64::from(n0 + n1) + 2.0;
            for n in [n0, n1] {
                if n > 0 {
                    loglik += f64::from(n) * ((f64::from(n) + 1.0) / total).ln();
                }
            }
        }
        loglik - 0.5 * (self.n_rows as f64).ln() * n_configs as f64
    }
}

/// A directed acyclic graph over named variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dag {
    pub nodes: Vec<String>,
    /// `(parent, child)` pairs.
    pub arcs: Vec<(String, String)>,
}

impl Dag {
    pub fn empty(nodes: Vec<String>) -> Self {
        Dag { nodes, arcs: Vec::new() }
    }

    pub fn with_arcs(nodes: Vec<String>, arcs: &[(&str, &str)]) -> Self {
        Dag { nodes, arcs: arcs.iter().map(|(p, c)| (p.to_string(), c.to_string())).collect() }
    }

    pub fn arc_set(&self) -> BTreeSet<(String, String)> {
        self.arcs.iter().cloned().collect()
    }

    /// Unordered arc endpoints.
    pub fn skeleton(&self) -> BTreeSet<(String, String)> {
        self.arcs
            .iter()
            .map(|(p, c)| if p <= c { (p.clone(), c.clone()) } else { (c.clone(), p.clone()) })
            .collect()
    }

    pub fn parents_of(&self, node: &str) -> Vec<&str> {
        self.arcs.iter().filter(|(_, c)| c == node).map(|(p, _)| p.as_str()).collect()
    }

    /// Checks the structural invariants: known nodes, no self-loops, no duplicates, no cycles.
    pub fn validate(&self) -> Result<()> {
        let index: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut seen = BTreeSet::new();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut children = vec![Vec::new(); self.nodes.len()];
        for (p, c) in &self.arcs {
            let (Some(&pi), Some(&ci)) = (index.get(p.as_str()), index.get(c.as_str())) else {
                return Err(Error::Schema(format!("arc {p}->{c} references an unknown node")));
            };
            if pi == ci {
                return Err(Error::Schema(format!("self-loop on {p}")));
            }
            if !seen.insert((pi, ci)) {
                return Err(Error::Schema(format!("duplicate arc {p}->{c}")));
            }
            indegree[ci] += 1;
            children[pi].push(ci);
        }
        let mut queue: Vec<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(n) = queue.pop() {
            visited += 1;
            for &c in &children[n] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if visited != self.nodes.len() {
            return Err(Error::Schema("graph contains a cycle".into()));
        }
        Ok(())
    }

    pub fn is_acyclic(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph opcodes {\n");
        for n in &self.nodes {
            let _ = writeln!(out, "  \"{n}\" [label=\"{n}\"];");
        }
        for (p, c) in &self.arcs {
            let _ = writeln!(out, "  \"{p}\" -> \"{c}\";");
        }
        out.push_str("}\n");
        out
    }

    pub fn arcs_csv(&self) -> String {
        let mut out = String::from("parent,child\n");
        for (p, c) in &self.arcs {
            let _ = writeln!(out, "{p},{c}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureConfig {
    pub max_parents: usize,
    /// Kept for configuration compatibility; the search itself is deterministic.
    pub rng_seed: u64,
    /// `None` means `10 * n_vars^2`.
    pub max_iterations: Option<usize>,
    /// Unused with BIC scoring.
    pub equivalent_sample_size: Option<f64>,
    /// Vocabulary size used when building occurrence variables from opcodes.
    pub top_k: usize,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig { max_parents: 3, rng_seed: 0, max_iterations: None, equivalent_sample_size: None, top_k: 30 }
    }
}

fn parent_indices(data: &BinaryDataset, dag: &Dag) -> Result<Vec<Vec<usize>>> {
    if dag.nodes != data.variable_names {
        return Err(Error::Schema("DAG nodes differ from dataset variables".into()));
    }
    dag.validate()?;
    let mut parents = vec![Vec::new(); data.n_vars()];
    for (p, c) in &dag.arcs {
        let pi = data.index_of(p).expect("validated");
        let ci = data.index_of(c).expect("validated");
        parents[ci].push(pi);
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    Ok(parents)
}

/// Total BIC score: the sum of every node's family score.
pub fn bic_score(data: &BinaryDataset, dag: &Dag) -> Result<f64> {
    let parents = parent_indices(data, dag)?;
    Ok(parents.iter().enumerate().map(|(i, ps)| data.family_score(i, ps)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum MoveKind {
    Add,
    Delete,
    Reverse,
}

#[derive(Debug, Clone, Copy)]
struct Move {
    kind: MoveKind,
    from: usize,
    to: usize,
    delta: f64,
}

struct Search<'a> {
    data: &'a BinaryDataset,
    parents: Vec<Vec<usize>>,
    family: Vec<f64>,
    cache: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> Search<'a> {
    fn family_with(&mut self, node: usize, parents: Vec<usize>) -> f64 {
        let data = self.data;
        *self.cache.entry((node, parents)).or_insert_with_key(|(n, ps)| data.family_score(*n, ps))
    }

    fn has_arc(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(&from)
    }

    /// Is there a directed path `from -> ... -> to`, ignoring the arc `skip` if given?
    fn reaches(&self, from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
        let n = self.parents.len();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                if skip != Some((p, c)) {
                    children[p].push(c);
                }
            }
        }
        let mut stack = vec![from];
        let mut seen = vec![false; n];
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            if !std::mem::replace(&mut seen[x], true) {
                stack.extend(&children[x]);
            }
        }
        false
    }

    fn candidates(&mut self, max_parents: usize) -> Vec<Move> {
        let n = self.parents.len();
        let mut moves = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if from == to {
                    continue;
                }
                if self.has_arc(from, to) {
                    let mut without: Vec<usize> = self.parents[to].iter().copied().filter(|&p| p != from).collect();
                    without.sort_unstable();
                    let del = self.family_with(to, without.clone()) - self.family[to];
                    moves.push(Move { kind: MoveKind::Delete, from, to, delta: del });

                    if self.parents[from].len() < max_parents && !self.reaches(from, to, Some((from, to))) {
                        let mut with: Vec<usize> = self.parents[from].clone();
                        with.push(to);
                        with.sort_unstable();
                        let delta = del + self.family_with(from, with) - self.family[from];
                        moves.push(Move { kind: MoveKind::Reverse, from, to, delta });
                    }
                } else if !self.has_arc(to, from)
                    && self.parents[to].len() < max_parents
                    && !self.reaches(to, from, None)
                {
                    let mut with = self.parents[to].clone();
                    with.push(from);
                    with.sort_unstable();
                    let delta = self.family_with(to, with) - self.family[to];
                    moves.push(Move { kind: MoveKind::Add, from, to, delta });
                }
            }
        }
        moves
    }

    fn apply(&mut self, m: Move) {
        let remove = |ps: &mut Vec<usize>, x: usize| ps.retain(|&p| p != x);
        match m.kind {
            MoveKind::Add => self.parents[m.to].push(m.from),
            MoveKind::Delete => remove(&mut self.parents[m.to], m.from),
            MoveKind::Reverse => {
                remove(&mut self.parents[m.to], m.from);
                self.parents[m.from].push(m.to);
            }
        }
        for node in [m.from, m.to] {
            self.parents[node].sort_unstable();
            let ps = self.parents[node].clone();
            self.family[node] = self.family_with(node, ps);
        }
    }
}

/// Sequence of accepted moves, for inspecting a search.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchTrace {
    /// Total score after each accepted move, starting with the empty graph.
    pub scores: Vec<f64>,
}

pub fn learn_structure(data: &BinaryDataset, cfg: &StructureConfig) -> Dag {
    learn_structure_traced(data, cfg).0
}

/// Greedy hill climbing from the empty graph.
///
/// Each step takes the single add/delete/reverse move with the largest
/// strict score improvement. Moves whose improvements tie (within a relative
/// 1e-9) are ordered by the resulting arc's `(parent, child)` names, then by
/// move kind, so the result does not depend on column order.
pub fn learn_structure_traced(data: &BinaryDataset, cfg: &StructureConfig) -> (Dag, SearchTrace) {
    let n = data.n_vars();
    let mut search = Search {
        data,
        parents: vec![Vec::new(); n],
        family: (0..n).map(|i| data.family_score(i, &[])).collect(),
        cache: HashMap::new(),
    };
    let mut trace = SearchTrace { scores: vec![search.family.iter().sum()] };
    let max_iter = cfg.max_iterations.unwrap_or(10 * n * n);
    let names = &data.variable_names;

    for _ in 0..max_iter {
        let moves = search.candidates(cfg.max_parents);
        let Some(best) = moves.iter().map(|m| m.delta).reduce(f64::max) else { break };
        let current: f64 = search.family.iter().sum();
        let tol = TIE_TOLERANCE * current.abs().max(1.0);
        if best <= tol {
            break;
        }
        let key = |m: &Move| {
            let (p, c) = match m.kind {
                MoveKind::Reverse => (m.to, m.from),
                _ => (m.from, m.to),
            };
            (names[p].as_str(), names[c].as_str(), m.kind)
        };
        let chosen = moves
            .iter()
            .filter(|m| m.delta >= best - tol)
            .min_by(|a, b| key(a).cmp(&key(b)))
            .copied()
            .expect("best move exists");
        search.apply(chosen);
        trace.scores.push(search.family.iter().sum());
    }

    let mut arcs: Vec<(String, String)> = search
        .parents
        .iter()
        .enumerate()
        .flat_map(|(c, ps)| ps.iter().map(move |&p| (names[p].clone(), names[c].clone())))
        .collect();
    arcs.sort();
    (Dag { nodes: names.clone(), arcs }, trace)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DagDiff {
    pub added: BTreeSet<(String, String)>,
    pub removed: BTreeSet<(String, String)>,
    /// Arcs as oriented in the first graph.
    pub reversed: BTreeSet<(String, String)>,
}

impl DagDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.reversed.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("arc,status\n");
        for (set, status) in [(&self.added, "added"), (&self.removed, "removed"), (&self.reversed, "reversed")] {
            for (p, c) in set {
                let _ = writeln!(out, "{p}->{c},{status}");
            }
        }
        out
    }
}

/// Arc-level differences going from `a` to `b`.
pub fn dag_diff(a: &Dag, b: &Dag) -> Result<DagDiff> {
    let na: BTreeSet<&String> = a.nodes.iter().collect();
    let nb: BTreeSet<&String> = b.nodes.iter().collect();
    if na != nb {
        return Err(Error::Schema("DAGs are over different node sets".into()));
    }
    let sa = a.arc_set();
    let sb = b.arc_set();
    let reversed: BTreeSet<(String, String)> =
        sa.iter().filter(|(p, c)| sb.contains(&(c.clone(), p.clone()))).cloned().collect();
    let added = sb
        .iter()
        .filter(|arc| !sa.contains(*arc) && !reversed.contains(&(arc.1.clone(), arc.0.clone())))
        .cloned()
        .collect();
    let removed = sa.iter().filter(|arc| !sb.contains(*arc) && !reversed.contains(*arc)).cloned().collect();
    Ok(DagDiff { added, removed, reversed })
}
