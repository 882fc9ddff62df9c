//! Finite joint distributions with exact rational probabilities, and the
//! entropy operators over them.
//!
//! Entropies are reported in bits as `f64`. Zero conditional entropy and
//! independence also have exact predicates ([`JointDistribution::is_functionally_determined`],
//! [`JointDistribution::is_independent`], [`JointDistribution::is_mutually_independent`])
//! that never touch floating point.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde_json::Value as Json;
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InfoError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("empty variable set")]
    EmptyVariableSet,
    #[error("variable sets overlap on {0}")]
    OverlappingVariableSets(VarId),
    #[error("variable {0} declared twice")]
    DuplicateVariable(VarId),
    #[error("outcome {index} assigns {got} values for {expected} variables")]
    OutcomeArity { index: usize, expected: usize, got: usize },
    #[error("outcome {0} has zero probability")]
    ZeroProbability(usize),
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(Rational),
    #[error("outcome {0} duplicates an earlier outcome")]
    DuplicateOutcome(usize),
    #[error("distribution has no variables")]
    NoVariables,
    #[error("malformed variable name {0:?}")]
    BadVariableName(String),
    #[error("unsupported value {0}: expected integer, string or list")]
    BadValue(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Key,
    Secret,
    Aux,
}

impl VarKind {
    fn prefix(self) -> &'static str {
        match self {
            VarKind::Key => "K",
            VarKind::Secret => "S",
            VarKind::Aux => "X",
        }
    }
}

/// A random variable name, written `K:<owner>`, `S:<owner>` or `X:<owner>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId {
    pub kind: VarKind,
    pub owner: String,
}

impl VarId {
    pub fn key(owner: impl Into<String>) -> Self {
        VarId { kind: VarKind::Key, owner: owner.into() }
    }

    pub fn secret(owner: impl Into<String>) -> Self {
        VarId { kind: VarKind::Secret, owner: owner.into() }
    }

    pub fn aux(owner: impl Into<String>) -> Self {
        VarId { kind: VarKind::Aux, owner: owner.into() }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.prefix(), self.owner)
    }
}

impl FromStr for VarId {
    type Err = InfoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InfoError::BadVariableName(s.to_string());
        let (kind, owner) = s.split_once(':').ok_or_else(bad)?;
        if owner.is_empty() || owner.contains(':') {
            return Err(bad());
        }
        let kind = match kind {
            "K" => VarKind::Key,
            "S" => VarKind::Secret,
            "X" => VarKind::Aux,
            _ => return Err(bad()),
        };
        Ok(VarId { kind, owner: owner.to_string() })
    }
}

/// An outcome value: integer, text, or an ordered list of values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Text(String),
    List(Vec<Value>),
}

impl Value {
    pub fn from_json(v: &Json) -> Result<Self, InfoError> {
        match v {
            Json::Number(n) => n.as_i64().map(Value::Int).ok_or_else(|| InfoError::BadValue(v.to_string())),
            Json::String(s) => Ok(Value::Text(s.clone())),
            Json::Array(items) => Ok(Value::List(items.iter().map(Value::from_json).collect::<Result<_, _>>()?)),
            _ => Err(InfoError::BadValue(v.to_string())),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(i) => Json::from(*i),
            Value::Text(s) => Json::from(s.as_str()),
            Value::List(items) => Json::Array(items.iter().map(Value::to_json).collect()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

/// Marginal law over a column subset, keyed by value codes in column order.
type Projection = HashMap<Vec<u32>, Rational>;

/// Explicit finite support over named variables.
///
/// Values are interned per variable; each row stores one code per variable
/// (in sorted variable order) and a strictly positive probability. Rows are
/// kept sorted by decoded value so equal laws have equal layouts.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    vars: Vec<VarId>,
    dict: Vec<Vec<Value>>,
    rows: Vec<(Vec<u32>, Rational)>,
}

impl PartialEq for JointDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
            && self.rows.len() == other.rows.len()
            && self.outcomes().zip(other.outcomes()).all(|(a, b)| a == b)
    }
}

impl JointDistribution {
    /// `outcomes[i].0[j]` is the value of `vars[j]` in outcome `i`.
    pub fn new(vars: Vec<VarId>, outcomes: Vec<(Vec<Value>, Rational)>) -> Result<Self, InfoError> {
        if vars.is_empty() {
            return Err(InfoError::NoVariables);
        }
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by(|&a, &b| vars[a].cmp(&vars[b]));
        for w in order.windows(2) {
            if vars[w[0]] == vars[w[1]] {
                return Err(InfoError::DuplicateVariable(vars[w[0]].clone()));
            }
        }
        let sorted_vars: Vec<VarId> = order.iter().map(|&i| vars[i].clone()).collect();

        let mut total = Rational::zero();
        let mut decoded: Vec<(Vec<Value>, Rational)> = Vec::with_capacity(outcomes.len());
        for (index, (values, p)) in outcomes.into_iter().enumerate() {
            if values.len() != vars.len() {
                return Err(InfoError::OutcomeArity { index, expected: vars.len(), got: values.len() });
            }
            if p.is_zero() {
                return Err(InfoError::ZeroProbability(index));
            }
            total += &p;
            let mut values = values;
            let row: Vec<Value> = order.iter().map(|&i| std::mem::replace(&mut values[i], Value::Int(0))).collect();
            decoded.push((row, p));
        }
        if !total.is_one() {
            return Err(InfoError::NotNormalized(total));
        }
        let mut idx: Vec<usize> = (0..decoded.len()).collect();
        idx.sort_by(|&a, &b| decoded[a].0.cmp(&decoded[b].0).then(a.cmp(&b)));
        for w in idx.windows(2) {
            if decoded[w[0]].0 == decoded[w[1]].0 {
                return Err(InfoError::DuplicateOutcome(w[0].max(w[1])));
            }
        }

        let mut dict: Vec<Vec<Value>> = vec![Vec::new(); sorted_vars.len()];
        let mut lookup: Vec<HashMap<Value, u32>> = vec![HashMap::new(); sorted_vars.len()];
        let mut slots: Vec<Option<(Vec<Value>, Rational)>> = decoded.into_iter().map(Some).collect();
        let mut rows = Vec::with_capacity(slots.len());
        for i in idx {
            let (values, p) = slots[i].take().expect("each outcome visited once");
            let codes = values
                .into_iter()
                .enumerate()
                .map(|(col, v)| {
                    let next = dict[col].len() as u32;
                    *lookup[col].entry(v.clone()).or_insert_with(|| {
                        dict[col].push(v);
                        next
                    })
                })
                .collect();
            rows.push((codes, p));
        }
        Ok(JointDistribution { vars: sorted_vars, dict, rows })
    }

    /// Variables in sorted order.
    pub fn variables(&self) -> &[VarId] {
        &self.vars
    }

    pub fn support_size(&self) -> usize {
        self.rows.len()
    }

    /// Outcomes as value vectors aligned with [`Self::variables`].
    pub fn outcomes(&self) -> impl Iterator<Item = (Vec<&Value>, &Rational)> + '_ {
        self.rows.iter().map(move |(codes, p)| {
            (codes.iter().enumerate().map(|(c, &k)| &self.dict[c][k as usize]).collect(), p)
        })
    }

    pub fn has_variable(&self, v: &VarId) -> bool {
        self.vars.binary_search(v).is_ok()
    }

    /// Sorted, de-duplicated column indices for a variable set.
    fn columns(&self, vars: &[VarId]) -> Result<Vec<usize>, InfoError> {
        let mut cols = vars
            .iter()
            .map(|v| self.vars.binary_search(v).map_err(|_| InfoError::UnknownVariable(v.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        cols.sort_unstable();
        cols.dedup();
        Ok(cols)
    }

    fn nonempty_columns(&self, vars: &[VarId]) -> Result<Vec<usize>, InfoError> {
        let cols = self.columns(vars)?;
        if cols.is_empty() {
            return Err(InfoError::EmptyVariableSet);
        }
        Ok(cols)
    }

    fn project(&self, cols: &[usize]) -> Projection {
        let mut out: Projection = HashMap::new();
        for (codes, p) in &self.rows {
            let key: Vec<u32> = cols.iter().map(|&c| codes[c]).collect();
            match out.get_mut(&key) {
                Some(acc) => *acc += p,
                None => {
                    out.insert(key, p.clone());
                }
            }
        }
        out
    }

    pub fn marginal(&self, vars: &[VarId]) -> Result<JointDistribution, InfoError> {
        let cols = self.nonempty_columns(vars)?;
        let proj = self.project(&cols);
        let mut dict: Vec<Vec<Value>> = Vec::with_capacity(cols.len());
        let mut remap: Vec<HashMap<u32, u32>> = Vec::with_capacity(cols.len());
        for &c in &cols {
            let used: BTreeSet<u32> = proj.keys().map(|k| k[dict.len()]).collect();
            let mut values: Vec<(u32, &Value)> = used.iter().map(|&code| (code, &self.dict[c][code as usize])).collect();
            values.sort_by(|a, b| a.1.cmp(b.1));
            remap.push(values.iter().enumerate().map(|(i, (code, _))| (*code, i as u32)).collect());
            dict.push(values.into_iter().map(|(_, v)| v.clone()).collect());
        }
        let mut rows: Vec<(Vec<u32>, Rational)> = proj
            .into_iter()
            .map(|(key, p)| (key.iter().enumerate().map(|(i, k)| remap[i][k]).collect(), p))
            .collect();
        // dictionary codes follow value order, so code order is value order
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(JointDistribution { vars: cols.iter().map(|&c| self.vars[c].clone()).collect(), dict, rows })
    }

    /// Shannon entropy in bits of the marginal on `vars`.
    pub fn entropy(&self, vars: &[VarId]) -> Result<f64, InfoError> {
        let cols = self.nonempty_columns(vars)?;
        Ok(entropy_of(self.project(&cols).values()))
    }

    /// `H(targets | givens)`; with empty `givens` this is `H(targets)`.
    pub fn conditional_entropy(&self, targets: &[VarId], givens: &[VarId]) -> Result<f64, InfoError> {
        let t = self.nonempty_columns(targets)?;
        let g = self.columns(givens)?;
        if g.is_empty() {
            return Ok(entropy_of(self.project(&t).values()));
        }
        let joint_cols = union(&t, &g);
        let pos: Vec<usize> = g.iter().map(|c| joint_cols.binary_search(c).expect("subset")).collect();
        let joint = self.project(&joint_cols);
        let mut given: HashMap<Vec<u32>, Rational> = HashMap::new();
        for (key, p) in &joint {
            let gk: Vec<u32> = pos.iter().map(|&i| key[i]).collect();
            *given.entry(gk).or_insert_with(Rational::zero) += p;
        }
        let mut h = 0.0;
        for (key, p) in &joint {
            let gk: Vec<u32> = pos.iter().map(|&i| key[i]).collect();
            let pg = &given[&gk];
            if p != pg {
                // p(t|g) = p(t,g) / p(g), formed exactly before rounding
                h -= p.to_f64() * (p / pg).to_f64().log2();
            }
        }
        Ok(h.max(0.0))
    }

    /// `I(a; b) = H(a) - H(a | b)`.
    pub fn mutual_information(&self, a: &[VarId], b: &[VarId]) -> Result<f64, InfoError> {
        self.nonempty_columns(b)?;
        Ok(self.entropy(a)? - self.conditional_entropy(a, b)?)
    }

    /// `I(a; b | c) = H(a | c) - H(a | b, c)`; with empty `c` this is `I(a; b)`.
    pub fn conditional_mutual_information(&self, a: &[VarId], b: &[VarId], c: &[VarId]) -> Result<f64, InfoError> {
        self.nonempty_columns(b)?;
        let bc: Vec<VarId> = b.iter().chain(c).cloned().collect();
        Ok(self.conditional_entropy(a, c)? - self.conditional_entropy(a, &bc)?)
    }

    /// Exact test of `H(targets | givens) = 0`: every givens-value in the
    /// support pins down a single targets-value.
    pub fn is_functionally_determined(&self, targets: &[VarId], givens: &[VarId]) -> Result<bool, InfoError> {
        let t = self.nonempty_columns(targets)?;
        let g = self.nonempty_columns(givens)?;
        let joint = union(&t, &g);
        Ok(self.project(&joint).len() == self.project(&g).len())
    }

    /// Exact test of `p(a, b) = p(a) p(b)` over all value pairs, including
    /// pairs that never occur together.
    pub fn is_independent(&self, a: &[VarId], b: &[VarId]) -> Result<bool, InfoError> {
        let ca = self.nonempty_columns(a)?;
        let cb = self.nonempty_columns(b)?;
        if let Some(c) = ca.iter().find(|c| cb.contains(c)) {
            return Err(InfoError::OverlappingVariableSets(self.vars[*c].clone()));
        }
        Ok(self.factorizes(&[ca, cb]))
    }

    /// Exact test that the joint law of the groups is the product of the
    /// group marginals.
    pub fn is_mutually_independent(&self, groups: &[Vec<VarId>]) -> Result<bool, InfoError> {
        let mut cols = Vec::with_capacity(groups.len());
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        for g in groups {
            let c = self.nonempty_columns(g)?;
            for &i in &c {
                if !seen.insert(i) {
                    return Err(InfoError::OverlappingVariableSets(self.vars[i].clone()));
                }
            }
            cols.push(c);
        }
        Ok(self.factorizes(&cols))
    }

    fn factorizes(&self, groups: &[Vec<usize>]) -> bool {
        if groups.len() < 2 {
            return true;
        }
        let marginals: Vec<Projection> = groups.iter().map(|g| self.project(g)).collect();
        let all: Vec<usize> = groups.iter().flatten().copied().collect();
        let joint = self.project(&all);
        // every combination of marginal values must occur in the joint support
        let combos = marginals.iter().try_fold(1usize, |acc, m| acc.checked_mul(m.len()));
        if combos != Some(joint.len()) {
            return false;
        }
        joint.iter().all(|(key, p)| {
            let mut offset = 0;
            let mut product = Rational::one();
            for (g, m) in groups.iter().zip(&marginals) {
                product = &product * &m[&key[offset..offset + g.len()]];
                offset += g.len();
            }
            *p == product
        })
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

fn entropy_of<'a>(probs: impl Iterator<Item = &'a Rational>) -> f64 {
    let h: f64 = probs
        .filter(|p| !p.is_one())
        .map(|p| {
            let x = p.to_f64();
            -x * x.log2()
        })
        .sum();
    h.max(0.0)
}
