//! Test-side oracles, written independently of the library internals: entropy
//! by grouping outcomes and summing `-p log2 p`, independence by checking the
//! product rule on every cell of the marginal grid, reachability by DFS.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use hkas_core::{AccessGraph, JointDistribution, Rational, Value, VarId};

type Cell = Vec<Value>;

fn columns(d: &JointDistribution, vars: &[VarId]) -> Vec<usize> {
    let all = d.variables();
    let mut cols: Vec<usize> = vars.iter().map(|v| all.iter().position(|w| w == v).expect("known variable")).collect();
    cols.sort_unstable();
    cols.dedup();
    cols
}

fn group(d: &JointDistribution, vars: &[VarId]) -> HashMap<Cell, Rational> {
    let cols = columns(d, vars);
    let mut out: HashMap<Cell, Rational> = HashMap::new();
    for (values, p) in d.outcomes() {
        let cell: Cell = cols.iter().map(|&c| values[c].clone()).collect();
        let slot = out.entry(cell).or_insert_with(Rational::zero);
        *slot += p;
    }
    out
}

/// Number of distinct cells of `vars` with positive probability.
pub fn support(d: &JointDistribution, vars: &[VarId]) -> usize {
    group(d, vars).len()
}

/// `H(vars)` in bits; the empty set has entropy 0.
pub fn h(d: &JointDistribution, vars: &[VarId]) -> f64 {
    if vars.is_empty() {
        return 0.0;
    }
    group(d, vars)
        .values()
        .map(|p| {
            let x = p.to_f64();
            -x * x.log2()
        })
        .sum()
}

/// `H(a | b) = H(a ∪ b) − H(b)`.
pub fn h_given(d: &JointDistribution, a: &[VarId], b: &[VarId]) -> f64 {
    let joint: Vec<VarId> = a.iter().chain(b).cloned().collect();
    h(d, &joint) - h(d, b)
}

/// Exact: `p(x, y) = p(x) p(y)` on every cell of the product of marginal supports.
pub fn independent(d: &JointDistribution, a: &[VarId], b: &[VarId]) -> bool {
    let (pa, pb) = (group(d, a), group(d, b));
    let ab: Vec<VarId> = a.iter().chain(b).cloned().collect();
    let (ca, cb, cab) = (columns(d, a), columns(d, b), columns(d, &ab));
    let pab = group(d, &ab);
    for (x, px) in &pa {
        for (y, py) in &pb {
            // rebuild the joint cell in sorted column order
            let mut cell = Vec::with_capacity(cab.len());
            for c in &cab {
                if let Some(i) = ca.iter().position(|k| k == c) {
                    cell.push(x[i].clone());
                } else {
                    let i = cb.iter().position(|k| k == c).expect("column of b");
                    cell.push(y[i].clone());
                }
            }
            let joint = pab.get(&cell).cloned().unwrap_or_else(Rational::zero);
            if joint != px.clone() * py.clone() {
                return false;
            }
        }
    }
    true
}

/// Exact mutual independence via the pairwise-prefix chain: group `i` is
/// independent of the union of groups `0..i` for every `i`.
pub fn mutually_independent(d: &JointDistribution, groups: &[Vec<VarId>]) -> bool {
    let mut prefix: Vec<VarId> = Vec::new();
    for g in groups {
        if !prefix.is_empty() && !independent(d, g, &prefix) {
            return false;
        }
        prefix.extend(g.iter().cloned());
    }
    true
}

/// Exact: every cell of `given` maps to exactly one cell of `target`.
pub fn determined(d: &JointDistribution, target: &[VarId], given: &[VarId]) -> bool {
    let joint: Vec<VarId> = target.iter().chain(given).cloned().collect();
    group(d, &joint).len() == group(d, given).len()
}

/// Reflexive reachability sets by DFS over the edge list.
pub fn reach(g: &AccessGraph) -> BTreeMap<String, BTreeSet<String>> {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (f, t) in g.edges() {
        succ.entry(f.as_str()).or_default().push(t.as_str());
    }
    g.classes()
        .iter()
        .map(|c| {
            let mut seen = BTreeSet::new();
            let mut stack = vec![c.as_str()];
            while let Some(v) = stack.pop() {
                if seen.insert(v.to_string()) {
                    stack.extend(succ.get(v).into_iter().flatten());
                }
            }
            (c.as_str().to_string(), seen)
        })
        .collect()
}

/// `u_i ∈ F_{u_j}` for all `i < j`, i.e. no earlier class reaches a later one.
pub fn well_ordered(reach: &BTreeMap<String, BTreeSet<String>>, seq: &[&str]) -> bool {
    (0..seq.len()).all(|j| (0..j).all(|i| !reach[seq[i]].contains(seq[j])))
}

pub fn keys(labels: &[&str]) -> Vec<VarId> {
    labels.iter().map(|l| VarId::key(*l)).collect()
}

pub fn secrets(labels: &[&str]) -> Vec<VarId> {
    labels.iter().map(|l| VarId::secret(*l)).collect()
}
