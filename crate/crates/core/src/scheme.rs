//! Hierarchical key assignment schemes: an access graph bound to a joint
//! distribution over one key variable `K:<u>` and one private-information
//! variable `S:<u>` per class.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::graph::{AccessGraph, ClassId, GraphError};
use crate::info::{InfoError, JointDistribution, Value, VarId};
use crate::rational::Rational;

/// Default cap on support sizes; overridden by `HKAS_MAX_SUPPORT`.
pub const DEFAULT_MAX_SUPPORT: usize = 1_000_000;

pub fn max_support() -> usize {
    std::env::var("HKAS_MAX_SUPPORT")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_SUPPORT)
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("variable mismatch: missing [{}], unexpected [{}]", .missing.join(", "), .extra.join(", "))]
    VariableMismatch { missing: Vec<String>, extra: Vec<String> },
    #[error("probability error: {0}")]
    Probability(String),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("distribution error: {0}")]
    Distribution(InfoError),
    #[error("invalid coalition: {0}")]
    InvalidCoalition(String),
    #[error("support of {size} outcomes exceeds the limit of {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl From<InfoError> for SchemeError {
    fn from(e: InfoError) -> Self {
        match e {
            InfoError::ZeroProbability(_) | InfoError::NotNormalized(_) => SchemeError::Probability(e.to_string()),
            other => SchemeError::Distribution(other),
        }
    }
}

pub fn key_var(c: &ClassId) -> VarId {
    VarId::key(c.as_str())
}

pub fn secret_var(c: &ClassId) -> VarId {
    VarId::secret(c.as_str())
}

pub fn key_vars<'a>(classes: impl IntoIterator<Item = &'a ClassId>) -> Vec<VarId> {
    classes.into_iter().map(key_var).collect()
}

pub fn secret_vars<'a>(classes: impl IntoIterator<Item = &'a ClassId>) -> Vec<VarId> {
    classes.into_iter().map(secret_var).collect()
}

/// A coalition pooling the private information of `secrets_held` and the
/// leaked keys of `keys_held` against the key of `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionQuery {
    pub target: ClassId,
    pub secrets_held: BTreeSet<ClassId>,
    pub keys_held: BTreeSet<ClassId>,
}

impl CoalitionQuery {
    pub fn new(
        target: ClassId,
        secrets_held: impl IntoIterator<Item = ClassId>,
        keys_held: impl IntoIterator<Item = ClassId>,
    ) -> Self {
        CoalitionQuery {
            target,
            secrets_held: secrets_held.into_iter().collect(),
            keys_held: keys_held.into_iter().collect(),
        }
    }

    /// Requires `secrets_held ⊆ F_target` and `keys_held ⊆ C_target`.
    pub fn validate(&self, g: &AccessGraph) -> Result<(), SchemeError> {
        let forbidden = g.forbidden_set(&self.target)?;
        let ancestors = g.ancestor_set(&self.target)?;
        for c in &self.secrets_held {
            if !g.contains(c) {
                return Err(GraphError::UnknownClass(c.to_string()).into());
            }
            if !forbidden.contains(c) {
                return Err(SchemeError::InvalidCoalition(format!(
                    "{c} may access {} and cannot be part of an attacking coalition",
                    self.target
                )));
            }
        }
        for c in &self.keys_held {
            if !g.contains(c) {
                return Err(GraphError::UnknownClass(c.to_string()).into());
            }
            if !ancestors.contains(c) {
                return Err(SchemeError::InvalidCoalition(format!(
                    "key of {c} may only be leaked if {c} is an ancestor of {}",
                    self.target
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    graph: AccessGraph,
    dist: JointDistribution,
}

impl Scheme {
    pub fn new(graph: AccessGraph, dist: JointDistribution) -> Result<Self, SchemeError> {
        graph.validate()?;
        let expected = expected_vars(&graph);
        let actual: BTreeSet<VarId> = dist.variables().iter().cloned().collect();
        check_vars(&expected, &actual)?;
        Ok(Scheme { graph, dist })
    }

    pub fn graph(&self) -> &AccessGraph {
        &self.graph
    }

    pub fn dist(&self) -> &JointDistribution {
        &self.dist
    }

    /// `H(K_target | S_X, K_Y)` for a validated coalition.
    pub fn query_entropy(&self, q: &CoalitionQuery) -> Result<f64, SchemeError> {
        q.validate(&self.graph)?;
        let givens: Vec<VarId> = secret_vars(&q.secrets_held).into_iter().chain(key_vars(&q.keys_held)).collect();
        Ok(self.dist.conditional_entropy(&[key_var(&q.target)], &givens)?)
    }

    /// Parses a scheme document. `external` is the graph named by a
    /// `graph_file` reference (or supplied by the caller); an embedded
    /// `graph` takes precedence over it.
    pub fn from_json(doc: &Json, external: Option<AccessGraph>) -> Result<Self, SchemeError> {
        let obj = doc.as_object().ok_or_else(|| SchemeError::Parse("scheme must be a JSON object".into()))?;
        let graph = match (obj.get("graph"), external) {
            (Some(embedded), ext) => {
                let g = AccessGraph::from_json(embedded)?;
                if let Some(ext) = ext {
                    if ext != g {
                        log::warn!("embedded graph differs from the referenced graph file; using the embedded graph");
                    }
                }
                g
            }
            (None, Some(ext)) => ext,
            (None, None) => {
                return Err(SchemeError::Parse("scheme has neither \"graph\" nor \"graph_file\"".into()));
            }
        };
        let support = obj
            .get("support")
            .and_then(Json::as_array)
            .ok_or_else(|| SchemeError::Parse("missing \"support\" array".into()))?;
        let limit = max_support();
        if support.len() > limit {
            return Err(SchemeError::SupportTooLarge { size: support.len(), limit });
        }
        if support.is_empty() {
            return Err(SchemeError::Probability("empty support".into()));
        }

        let expected = expected_vars(&graph);
        let vars: Vec<VarId> = expected.iter().cloned().collect();
        let mut outcomes = Vec::with_capacity(support.len());
        for (i, item) in support.iter().enumerate() {
            let item = item.as_object().ok_or_else(|| SchemeError::Parse(format!("support[{i}] must be an object")))?;
            let assignment = item
                .get("assignment")
                .and_then(Json::as_object)
                .ok_or_else(|| SchemeError::Parse(format!("support[{i}] lacks an \"assignment\" object")))?;
            let mut values: BTreeMap<VarId, Value> = BTreeMap::new();
            for (name, v) in assignment {
                let var: VarId = name.parse().map_err(|e: InfoError| SchemeError::Parse(format!("support[{i}]: {e}")))?;
                values.insert(var, Value::from_json(v).map_err(|e| SchemeError::Parse(format!("support[{i}]: {e}")))?);
            }
            let present: BTreeSet<VarId> = values.keys().cloned().collect();
            check_vars(&expected, &present)?;
            let p = parse_probability(item.get("p"), i)?;
            outcomes.push((values.into_values().collect(), p));
        }
        let dist = JointDistribution::new(vars, outcomes)?;
        Ok(Scheme { graph, dist })
    }

    pub fn to_json(&self) -> Json {
        let vars = self.dist.variables();
        let support: Vec<Json> = self
            .dist
            .outcomes()
            .map(|(values, p)| {
                let assignment: Map<String, Json> =
                    vars.iter().zip(values).map(|(v, x)| (v.to_string(), x.to_json())).collect();
                json!({ "assignment": assignment, "p": p.to_string() })
            })
            .collect();
        json!({ "graph": self.graph.to_json(), "support": support })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("scheme JSON serializes") + "\n"
    }
}

/// Reads a scheme file, resolving `graph_file` relative to the scheme's directory.
pub fn load_scheme_file(path: &Path) -> Result<Scheme, SchemeError> {
    let text = read(path)?;
    let doc: Json = serde_json::from_str(&text).map_err(|e| SchemeError::Parse(format!("{}: {e}", path.display())))?;
    let external = match doc.get("graph_file") {
        None => None,
        Some(Json::String(rel)) => {
            let gpath = path.parent().unwrap_or(Path::new(".")).join(rel);
            Some(load_graph_file(&gpath)?)
        }
        Some(_) => return Err(SchemeError::Parse("\"graph_file\" must be a string".into())),
    };
    Scheme::from_json(&doc, external)
}

/// Builds a scheme from an optional separate graph document and a scheme document.
pub fn load_scheme(graph_doc: Option<&Json>, scheme_doc: &Json) -> Result<Scheme, SchemeError> {
    let external = graph_doc.map(AccessGraph::from_json).transpose()?;
    Scheme::from_json(scheme_doc, external)
}

pub fn load_graph_file(path: &Path) -> Result<AccessGraph, SchemeError> {
    Ok(AccessGraph::from_json_str(&read(path)?)?)
}

fn read(path: &Path) -> Result<String, SchemeError> {
    std::fs::read_to_string(path).map_err(|source| SchemeError::Io { path: path.display().to_string(), source })
}

fn expected_vars(g: &AccessGraph) -> BTreeSet<VarId> {
    g.classes().iter().flat_map(|c| [key_var(c), secret_var(c)]).collect()
}

fn check_vars(expected: &BTreeSet<VarId>, actual: &BTreeSet<VarId>) -> Result<(), SchemeError> {
    if expected == actual {
        return Ok(());
    }
    Err(SchemeError::VariableMismatch {
        missing: expected.difference(actual).map(ToString::to_string).collect(),
        extra: actual.difference(expected).map(ToString::to_string).collect(),
    })
}

fn parse_probability(p: Option<&Json>, i: usize) -> Result<Rational, SchemeError> {
    let bad = |what: String| SchemeError::Probability(format!("support[{i}]: {what}"));
    let r = match p {
        Some(Json::String(s)) => s.parse::<Rational>().map_err(|e| bad(e.to_string()))?,
        Some(Json::Number(n)) => match n.as_u64() {
            Some(v) => Rational::from(v),
            None => return Err(bad(format!("probability {n} must be a \"num/den\" string or a non-negative integer"))),
        },
        Some(other) => return Err(bad(format!("unsupported probability {other}"))),
        None => return Err(bad("missing \"p\"".into())),
    };
    if r.is_zero() {
        return Err(bad("explicit zero probability".into()));
    }
    Ok(r)
}
