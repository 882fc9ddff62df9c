//! Access graphs: partially ordered hierarchies of security classes.
//!
//! An edge `from -> to` means `to ⪯ from`, i.e. users of `from` may derive the
//! key of `to`. The order is reflexive, so every class can access itself.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::prng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("cycle detected: {}", join(.0))]
    CycleDetected(Vec<ClassId>),
    #[error("self-loop on class {0}")]
    SelfLoop(ClassId),
    #[error("edge {0} -> {1} references an unknown class")]
    DanglingEdge(ClassId, ClassId),
    #[error("duplicate class label {0}")]
    DuplicateLabel(ClassId),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(ClassId, ClassId),
    #[error("invalid class label {0:?}: labels must be non-empty and contain no ':'")]
    InvalidLabel(String),
    #[error("graph has no classes")]
    EmptyGraph,
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("class {0} appears more than once in the sequence")]
    DuplicateInSequence(ClassId),
    #[error("empty class sequence")]
    EmptySequence,
    #[error("graph document: {0}")]
    Parse(String),
}

fn join(ids: &[ClassId]) -> String {
    ids.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" -> ")
}

/// Label of a security class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(String);

impl ClassId {
    pub fn new(label: impl Into<String>) -> Result<Self, GraphError> {
        let label = label.into();
        if label.is_empty() || label.contains(':') {
            return Err(GraphError::InvalidLabel(label));
        }
        Ok(ClassId(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered list of distinct classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSequence(pub Vec<ClassId>);

impl ClassSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ClassId> {
        self.0.iter()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.0.iter().map(ClassId::as_str).collect()
    }
}

impl fmt::Display for ClassSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.labels().join(","))
    }
}

pub fn validate_graph(classes: &[ClassId], edges: &[(ClassId, ClassId)]) -> Result<(), GraphError> {
    if classes.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mut index = HashMap::with_capacity(classes.len());
    for (i, c) in classes.iter().enumerate() {
        if c.0.is_empty() || c.0.contains(':') {
            return Err(GraphError::InvalidLabel(c.0.clone()));
        }
        if index.insert(c, i).is_some() {
            return Err(GraphError::DuplicateLabel(c.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    let mut succ = vec![Vec::new(); classes.len()];
    for (from, to) in edges {
        if from == to {
            return Err(GraphError::SelfLoop(from.clone()));
        }
        let (Some(&f), Some(&t)) = (index.get(from), index.get(to)) else {
            return Err(GraphError::DanglingEdge(from.clone(), to.clone()));
        };
        if !seen.insert((f, t)) {
            return Err(GraphError::DuplicateEdge(from.clone(), to.clone()));
        }
        succ[f].push(t);
    }
    if let Some(cycle) = find_cycle(&succ) {
        return Err(GraphError::CycleDetected(
            cycle.into_iter().map(|i| classes[i].clone()).collect(),
        ));
    }
    Ok(())
}

/// Iterative three-colour DFS; returns a closed walk `v0 -> ... -> v0` if any.
fn find_cycle(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let n = succ.len();
    let mut colour = vec![WHITE; n];
    let mut parent = vec![usize::MAX; n];
    for root in 0..n {
        if colour[root] != WHITE {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        colour[root] = GREY;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = succ[v].get(*next) {
                *next += 1;
                match colour[w] {
                    WHITE => {
                        colour[w] = GREY;
                        parent[w] = v;
                        stack.push((w, 0));
                    }
                    GREY => {
                        // back edge v -> w: follow parents from v up to w
                        let mut cycle = vec![v];
                        let mut x = v;
                        while x != w {
                            x = parent[x];
                            cycle.push(x);
                        }
                        cycle.reverse();
                        cycle.push(w);
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                colour[v] = BLACK;
                stack.pop();
            }
        }
    }
    None
}

/// A validated access graph with its reachability relation precomputed.
#[derive(Debug, Clone)]
pub struct AccessGraph {
    classes: Vec<ClassId>,
    edges: Vec<(ClassId, ClassId)>,
    index: HashMap<ClassId, usize>,
    succ: Vec<Vec<usize>>,
    // reach[v][u] <=> u ⪯ v
    reach: Vec<Vec<bool>>,
}

impl PartialEq for AccessGraph {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes && self.edges == other.edges
    }
}

impl AccessGraph {
    pub fn new(classes: Vec<ClassId>, edges: Vec<(ClassId, ClassId)>) -> Result<Self, GraphError> {
        validate_graph(&classes, &edges)?;
        let index: HashMap<ClassId, usize> =
            classes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let mut succ = vec![Vec::new(); classes.len()];
        for (f, t) in &edges {
            succ[index[f]].push(index[t]);
        }
        let n = classes.len();
        let mut reach = vec![vec![false; n]; n];
        for (v, row) in reach.iter_mut().enumerate() {
            let mut stack = vec![v];
            row[v] = true;
            while let Some(x) = stack.pop() {
                for &y in &succ[x] {
                    if !row[y] {
                        row[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        Ok(AccessGraph { classes, edges, index, succ, reach })
    }

    /// Builds a graph from string labels; convenient for fixtures and bindings.
    pub fn from_labels(classes: &[&str], edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let classes = classes.iter().map(|c| ClassId::new(*c)).collect::<Result<_, _>>()?;
        let edges = edges
            .iter()
            .map(|(f, t)| Ok((ClassId::new(*f)?, ClassId::new(*t)?)))
            .collect::<Result<_, GraphError>>()?;
        AccessGraph::new(classes, edges)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        validate_graph(&self.classes, &self.edges)
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn edges(&self) -> &[(ClassId, ClassId)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, label: &str) -> Result<&ClassId, GraphError> {
        self.classes
            .iter()
            .find(|c| c.as_str() == label)
            .ok_or_else(|| GraphError::UnknownClass(label.to_string()))
    }

    pub fn contains(&self, c: &ClassId) -> bool {
        self.index.contains_key(c)
    }

    fn idx(&self, c: &ClassId) -> Result<usize, GraphError> {
        self.index.get(c).copied().ok_or_else(|| GraphError::UnknownClass(c.0.clone()))
    }

    /// `u ⪯ v`: can users of `v` access the data of `u`?
    pub fn can_access(&self, v: &ClassId, u: &ClassId) -> Result<bool, GraphError> {
        Ok(self.reach[self.idx(v)?][self.idx(u)?])
    }

    /// `A_v`: `v` and every class reachable from it.
    pub fn accessible_set(&self, v: &ClassId) -> Result<BTreeSet<ClassId>, GraphError> {
        let row = &self.reach[self.idx(v)?];
        Ok(self.select(|i| row[i]))
    }

    /// `F_u`: classes that cannot access `u`.
    pub fn forbidden_set(&self, u: &ClassId) -> Result<BTreeSet<ClassId>, GraphError> {
        let ui = self.idx(u)?;
        Ok(self.select(|v| !self.reach[v][ui]))
    }

    /// `C_u`: classes other than `u` that can access `u`.
    pub fn ancestor_set(&self, u: &ClassId) -> Result<BTreeSet<ClassId>, GraphError> {
        let ui = self.idx(u)?;
        Ok(self.select(|v| v != ui && self.reach[v][ui]))
    }

    fn select(&self, keep: impl Fn(usize) -> bool) -> BTreeSet<ClassId> {
        (0..self.classes.len()).filter(|&i| keep(i)).map(|i| self.classes[i].clone()).collect()
    }

    /// Whether `{u}`, `F_u` and `C_u` partition the class set.
    pub fn partition_check(&self, u: &ClassId) -> Result<bool, GraphError> {
        let forbidden = self.forbidden_set(u)?;
        let ancestors = self.ancestor_set(u)?;
        let disjoint = !forbidden.contains(u)
            && !ancestors.contains(u)
            && forbidden.is_disjoint(&ancestors);
        let mut union = forbidden;
        union.extend(ancestors);
        union.insert(u.clone());
        let all: BTreeSet<ClassId> = self.classes.iter().cloned().collect();
        Ok(disjoint && union == all)
    }

    /// Kahn's algorithm, always releasing the lexicographically smallest ready label.
    pub fn topological_sort(&self) -> ClassSequence {
        let all: Vec<usize> = (0..self.classes.len()).collect();
        self.sort_subset(&all)
    }

    /// Topological sort of the subgraph induced by `subset`.
    pub fn topological_sort_of(&self, subset: &BTreeSet<ClassId>) -> Result<ClassSequence, GraphError> {
        let idx = subset.iter().map(|c| self.idx(c)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.sort_subset(&idx))
    }

    fn sort_subset(&self, subset: &[usize]) -> ClassSequence {
        let member: BTreeSet<usize> = subset.iter().copied().collect();
        let mut indegree: BTreeMap<usize, usize> = member.iter().map(|&v| (v, 0)).collect();
        for &v in &member {
            for w in &self.succ[v] {
                if let Some(d) = indegree.get_mut(w) {
                    *d += 1;
                }
            }
        }
        let mut ready: BTreeSet<(&ClassId, usize)> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| (&self.classes[v], v))
            .collect();
        let mut out = Vec::with_capacity(member.len());
        while let Some(first) = ready.pop_first() {
            let v = first.1;
            out.push(self.classes[v].clone());
            for w in &self.succ[v] {
                if let Some(d) = indegree.get_mut(w) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert((&self.classes[*w], *w));
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), member.len(), "validated graphs are acyclic");
        ClassSequence(out)
    }

    /// Every earlier element must lie in the forbidden set of each later one.
    pub fn is_well_ordered(&self, seq: &ClassSequence) -> Result<bool, GraphError> {
        if seq.is_empty() {
            return Err(GraphError::EmptySequence);
        }
        let mut seen = BTreeSet::new();
        let mut idx = Vec::with_capacity(seq.len());
        for c in seq.iter() {
            idx.push(self.idx(c)?);
            if !seen.insert(c) {
                return Err(GraphError::DuplicateInSequence(c.clone()));
            }
        }
        for (j, &uj) in idx.iter().enumerate() {
            // u_i ∈ F_{u_j}  <=>  u_j ∉ A_{u_i}
            if idx[..j].iter().any(|&ui| self.reach[ui][uj]) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Reverse of the topological sort; always well ordered.
    pub fn well_ordered_all(&self) -> ClassSequence {
        let mut seq = self.topological_sort();
        seq.0.reverse();
        seq
    }

    /// `rev(topo(F_u)) ++ (u) ++ rev(topo(C_u))`: the enumeration of all classes
    /// that places `u` right after its forbidden set.
    pub fn theorem_sequence(&self, u: &ClassId) -> Result<ClassSequence, GraphError> {
        let mut forbidden = self.topological_sort_of(&self.forbidden_set(u)?)?.0;
        forbidden.reverse();
        let mut ancestors = self.topological_sort_of(&self.ancestor_set(u)?)?.0;
        ancestors.reverse();
        forbidden.push(u.clone());
        forbidden.extend(ancestors);
        Ok(ClassSequence(forbidden))
    }

    pub fn from_json(doc: &Json) -> Result<Self, GraphError> {
        let parse = |m: &str| GraphError::Parse(m.to_string());
        let obj = doc.as_object().ok_or_else(|| parse("expected a JSON object"))?;
        let classes = obj
            .get("classes")
            .and_then(Json::as_array)
            .ok_or_else(|| parse("missing \"classes\" array"))?
            .iter()
            .map(|c| c.as_str().ok_or_else(|| parse("class labels must be strings")).and_then(ClassId::new))
            .collect::<Result<Vec<_>, _>>()?;
        let edges = match obj.get("edges") {
            None => Vec::new(),
            Some(e) => e
                .as_array()
                .ok_or_else(|| parse("\"edges\" must be an array"))?
                .iter()
                .map(|pair| match pair.as_array().map(Vec::as_slice) {
                    Some([Json::String(f), Json::String(t)]) => Ok((ClassId::new(f.as_str())?, ClassId::new(t.as_str())?)),
                    _ => Err(parse("each edge must be a [from, to] pair of labels")),
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        AccessGraph::new(classes, edges)
    }

    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let doc: Json = serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        AccessGraph::from_json(&doc)
    }

    pub fn to_json(&self) -> Json {
        json!({
            "classes": self.classes.iter().map(ClassId::as_str).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|(f, t)| [f.as_str(), t.as_str()]).collect::<Vec<_>>(),
        })
    }
}

/// Graph shapes used by fixtures, corpora and the bindings.
pub mod shapes {
    use super::*;

    /// `c0 -> c1 -> ... -> c{n-1}`; `c0` is the top class.
    pub fn chain(n: usize) -> AccessGraph {
        let classes: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
        let edges: Vec<(String, String)> =
            (1..n).map(|i| (classes[i - 1].clone(), classes[i].clone())).collect();
        build(&classes, &edges)
    }

    /// `r -> a, r -> b, a -> c, b -> c`.
    pub fn diamond() -> AccessGraph {
        AccessGraph::from_labels(&["r", "a", "b", "c"], &[("r", "a"), ("r", "b"), ("a", "c"), ("b", "c")])
            .expect("diamond is a valid DAG")
    }

    /// Complete binary tree with `n` nodes in heap order, root `n0`.
    pub fn binary_tree(n: usize) -> AccessGraph {
        let classes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let edges: Vec<(String, String)> =
            (1..n).map(|i| (classes[(i - 1) / 2].clone(), classes[i].clone())).collect();
        build(&classes, &edges)
    }

    pub fn antichain(n: usize) -> AccessGraph {
        let classes: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        build(&classes, &[])
    }

    /// Random DAG on `n` classes: a random permutation fixes the order and each
    /// forward pair becomes an edge with probability 1/2.
    pub fn random_dag(n: usize, seed: u64) -> AccessGraph {
        let mut rng = SplitMix64::new(seed);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
        let classes: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.coin() {
                    edges.push((classes[order[i]].clone(), classes[order[j]].clone()));
                }
            }
        }
        build(&classes, &edges)
    }

    fn build(classes: &[String], edges: &[(String, String)]) -> AccessGraph {
        let c: Vec<&str> = classes.iter().map(String::as_str).collect();
        let e: Vec<(&str, &str)> = edges.iter().map(|(f, t)| (f.as_str(), t.as_str())).collect();
        AccessGraph::from_labels(&c, &e).expect("generated shapes are valid DAGs")
    }
}
