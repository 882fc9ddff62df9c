//! Fixture schemes: the direct-storage construction, deliberately broken
//! variants of it, and seeded random key laws with correct secrets.
//!
//! Every construction sets `S_u` to the tuple `[[v, k_v], ...]` over `v ∈ A_u`
//! sorted by label, so correctness holds by construction.

use thiserror::Error;

use crate::graph::{AccessGraph, ClassId, GraphError};
use crate::info::{InfoError, JointDistribution, Value, VarId};
use crate::prng::SplitMix64;
use crate::rational::Rational;
use crate::scheme::{key_var, max_support, secret_var, Scheme, SchemeError};

/// Largest weight drawn for a key tuple in the perturbed branch.
pub const MAX_WEIGHT: u64 = 64;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("key space size q = {0} must be at least 2")]
    InvalidQ(u64),
    #[error("support of {size} outcomes exceeds the limit of {limit}")]
    SupportTooLarge { size: String, limit: usize },
    #[error("{leaker} cannot leak the key of {target}: it is not in the forbidden set of {target}")]
    InvalidLeak { target: ClassId, leaker: ClassId },
    #[error("correlated classes must be distinct, got {0} twice")]
    SameClass(ClassId),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Info(#[from] InfoError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenKind {
    Trivial,
    Leaky { target: ClassId, leaker: ClassId },
    Correlated { u: ClassId, w: ClassId },
    RandomCorrect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub q: u64,
    pub seed: u64,
}

pub fn generate(g: &AccessGraph, spec: &GenSpec) -> Result<Scheme, GenError> {
    match &spec.kind {
        GenKind::Trivial => gen_trivial(g, spec.q),
        GenKind::Leaky { target, leaker } => gen_leaky(g, spec.q, target, leaker),
        GenKind::Correlated { u, w } => gen_correlated(g, spec.q, u, w),
        GenKind::RandomCorrect => gen_random_correct(g, spec.q, spec.seed),
    }
}

/// Independent uniform keys over `0..q`; each class stores the keys it may access.
pub fn gen_trivial(g: &AccessGraph, q: u64) -> Result<Scheme, GenError> {
    let layout = Layout::new(g, q, g.len())?;
    let p = Rational::new(1, layout.outcomes);
    let rows = layout.tuples().map(|keys| (keys, p.clone())).collect();
    layout.build(rows, None)
}

/// The direct-storage scheme with `k_target` also copied into `S_leaker`.
pub fn gen_leaky(g: &AccessGraph, q: u64, target: &ClassId, leaker: &ClassId) -> Result<Scheme, GenError> {
    if !g.forbidden_set(target)?.contains(leaker) {
        g.class(leaker.as_str())?;
        return Err(GenError::InvalidLeak { target: target.clone(), leaker: leaker.clone() });
    }
    let layout = Layout::new(g, q, g.len())?;
    let p = Rational::new(1, layout.outcomes);
    let rows = layout.tuples().map(|keys| (keys, p.clone())).collect();
    layout.build(rows, Some((leaker, target)))
}

/// The direct-storage scheme with `K_u` forced equal to `K_w`.
pub fn gen_correlated(g: &AccessGraph, q: u64, u: &ClassId, w: &ClassId) -> Result<Scheme, GenError> {
    g.class(u.as_str())?;
    g.class(w.as_str())?;
    if u == w {
        return Err(GenError::SameClass(u.clone()));
    }
    let free: Vec<ClassId> = g.classes().iter().filter(|c| *c != u).cloned().collect();
    let layout = Layout::new(g, q, free.len())?;
    let p = Rational::new(1, layout.outcomes);
    let free_pos: Vec<usize> = free.iter().map(|c| layout.position(c)).collect();
    let (u_pos, w_pos) = (layout.position(u), layout.position(w));
    let rows = free_tuples(q, free.len())
        .map(|sub| {
            let mut keys = vec![0; layout.classes.len()];
            for (k, &pos) in sub.iter().zip(&free_pos) {
                keys[pos] = *k;
            }
            keys[u_pos] = keys[w_pos];
            (keys, p.clone())
        })
        .collect();
    layout.build(rows, None)
}

/// With probability 1/2 the direct-storage scheme; otherwise every key tuple
/// gets an independent weight in `1..=64`, normalized exactly.
pub fn gen_random_correct(g: &AccessGraph, q: u64, seed: u64) -> Result<Scheme, GenError> {
    let layout = Layout::new(g, q, g.len())?;
    let mut rng = SplitMix64::new(seed);
    if rng.coin() {
        return gen_trivial(g, q);
    }
    let weights: Vec<u64> = (0..layout.outcomes).map(|_| 1 + rng.below(MAX_WEIGHT)).collect();
    let total: u64 = weights.iter().sum();
    let rows = layout.tuples().zip(weights).map(|(keys, w)| (keys, Rational::new(w, total))).collect();
    layout.build(rows, None)
}

/// Classes sorted by label, with key tuples enumerated in lexicographic order.
struct Layout<'g> {
    graph: &'g AccessGraph,
    classes: Vec<ClassId>,
    q: u64,
    outcomes: u64,
}

impl<'g> Layout<'g> {
    fn new(graph: &'g AccessGraph, q: u64, free: usize) -> Result<Self, GenError> {
        if q < 2 {
            return Err(GenError::InvalidQ(q));
        }
        let limit = max_support();
        let outcomes = u32::try_from(free)
            .ok()
            .and_then(|f| q.checked_pow(f))
            .filter(|&n| n <= limit as u64)
            .ok_or_else(|| GenError::SupportTooLarge { size: format!("{q}^{free}"), limit })?;
        let mut classes = graph.classes().to_vec();
        classes.sort();
        Ok(Layout { graph, classes, q, outcomes })
    }

    fn position(&self, c: &ClassId) -> usize {
        self.classes.binary_search(c).expect("class of the graph")
    }

    fn tuples(&self) -> impl Iterator<Item = Vec<u64>> {
        free_tuples(self.q, self.classes.len())
    }

    fn build(&self, rows: Vec<(Vec<u64>, Rational)>, leak: Option<(&ClassId, &ClassId)>) -> Result<Scheme, GenError> {
        let access: Vec<Vec<usize>> = self
            .classes
            .iter()
            .map(|c| {
                let mut a: Vec<usize> = self.graph.accessible_set(c).expect("class").iter().map(|v| self.position(v)).collect();
                if let Some((leaker, target)) = leak {
                    if leaker == c {
                        a.push(self.position(target));
                        a.sort_unstable();
                    }
                }
                a
            })
            .collect();
        let mut vars: Vec<VarId> = self.classes.iter().map(key_var).collect();
        vars.extend(self.classes.iter().map(secret_var));
        let outcomes = rows
            .into_iter()
            .map(|(keys, p)| {
                let mut values: Vec<Value> = keys.iter().map(|&k| Value::Int(k as i64)).collect();
                values.extend(access.iter().map(|a| {
                    Value::List(
                        a.iter()
                            .map(|&i| Value::List(vec![Value::from(self.classes[i].as_str()), Value::Int(keys[i] as i64)]))
                            .collect(),
                    )
                }));
                (values, p)
            })
            .collect();
        let dist = JointDistribution::new(vars, outcomes)?;
        Ok(Scheme::new(self.graph.clone(), dist)?)
    }
}

/// All of `0..q` raised to `len`, first coordinate most significant.
fn free_tuples(q: u64, len: usize) -> impl Iterator<Item = Vec<u64>> {
    let mut next = Some(vec![0u64; len]);
    std::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        for i in (0..len).rev() {
            succ[i] += 1;
            if succ[i] < q {
                next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    })
}

/// Named fixture corpus entry: how a scheme was produced.
pub fn describe(spec: &GenSpec) -> String {
    match &spec.kind {
        GenKind::Trivial => format!("trivial(q={})", spec.q),
        GenKind::Leaky { target, leaker } => format!("leaky(q={}, target={target}, leaker={leaker})", spec.q),
        GenKind::Correlated { u, w } => format!("correlated(q={}, {u}={w})", spec.q),
        GenKind::RandomCorrect => format!("random(q={}, seed={})", spec.q, spec.seed),
    }
}
