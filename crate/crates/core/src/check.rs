//! Correctness, KI-security, SKI-security and key-independence verdicts.
//!
//! Verdicts come from exact predicates on the joint distribution. In maximal
//! mode each class is tested against its largest admissible coalition only;
//! exhaustive mode tests every coalition and cross-checks the two. Witnesses
//! are minimal failing coalitions: fewest classes first, then
//! lexicographically smallest labels.

use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::graph::ClassId;
use crate::info::{InfoError, VarId};
use crate::scheme::{key_var, key_vars, secret_var, secret_vars, Scheme};

/// Largest `|F_u| + |C_u|` enumerated exhaustively.
pub const MAX_COALITION_CLASSES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("class {class}: {size} candidate classes exceed the exhaustive limit of {MAX_COALITION_CLASSES}")]
    CoalitionSpaceTooLarge { class: ClassId, size: usize },
    #[error("class {class}: maximal-coalition verdict {maximal} disagrees with exhaustive verdict {exhaustive}")]
    ModeDisagreement { class: ClassId, maximal: bool, exhaustive: bool },
    #[error(transparent)]
    Info(#[from] InfoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckKind {
    Correctness,
    Ki,
    Ski,
    KeyIndependence,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [CheckKind::Correctness, CheckKind::Ki, CheckKind::Ski, CheckKind::KeyIndependence];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Correctness => "correctness",
            CheckKind::Ki => "ki",
            CheckKind::Ski => "ski",
            CheckKind::KeyIndependence => "key-indep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CheckKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A failing query: the target class, the coalition, and display entropies.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub class: ClassId,
    pub secrets: Vec<ClassId>,
    pub keys: Vec<ClassId>,
    pub reason: String,
    pub h_key: f64,
    pub h_key_given: f64,
}

impl Witness {
    pub fn to_json(&self) -> Json {
        json!({
            "class": self.class.as_str(),
            "secrets": self.secrets.iter().map(ClassId::as_str).collect::<Vec<_>>(),
            "keys": self.keys.iter().map(ClassId::as_str).collect::<Vec<_>>(),
            "reason": self.reason,
            "h_key": self.h_key,
            "h_key_given": self.h_key_given,
        })
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[ClassId]| v.iter().map(ClassId::as_str).collect::<Vec<_>>().join(",");
        write!(
            f,
            "class {}: secrets {{{}}} keys {{{}}}: {} (H = {:.6}, H given coalition = {:.6})",
            self.class,
            list(&self.secrets),
            list(&self.keys),
            self.reason,
            self.h_key,
            self.h_key_given
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub kind: CheckKind,
    pub passed: bool,
    pub exhaustive: bool,
    pub witnesses: Vec<Witness>,
}

impl CheckReport {
    fn from_witnesses(kind: CheckKind, exhaustive: bool, witnesses: Vec<Witness>) -> Self {
        CheckReport { kind, passed: witnesses.is_empty(), exhaustive, witnesses }
    }

    pub fn to_json(&self) -> Json {
        json!({
            "kind": self.kind.as_str(),
            "passed": self.passed,
            "exhaustive": self.exhaustive,
            "witnesses": self.witnesses.iter().map(Witness::to_json).collect::<Vec<_>>(),
        })
    }
}

pub fn check(s: &Scheme, kind: CheckKind, exhaustive: bool) -> Result<CheckReport, CheckError> {
    match kind {
        CheckKind::Correctness => check_correctness(s),
        CheckKind::Ki => check_ki(s, exhaustive),
        CheckKind::Ski => check_ski(s, exhaustive),
        CheckKind::KeyIndependence => check_key_independence(s),
    }
}

fn sorted_classes(s: &Scheme) -> Vec<ClassId> {
    let mut c = s.graph().classes().to_vec();
    c.sort();
    c
}

/// Every class must determine the key of every class it can access.
pub fn check_correctness(s: &Scheme) -> Result<CheckReport, CheckError> {
    let d = s.dist();
    let mut witnesses = Vec::new();
    for v in sorted_classes(s) {
        let sv = [secret_var(&v)];
        for u in s.graph().accessible_set(&v).expect("class of the graph") {
            let ku = [key_var(&u)];
            if !d.is_functionally_determined(&ku, &sv)? {
                witnesses.push(Witness {
                    reason: format!("K:{u} is not a function of S:{v}"),
                    h_key: d.entropy(&ku)?,
                    h_key_given: d.conditional_entropy(&ku, &sv)?,
                    class: u,
                    secrets: vec![v.clone()],
                    keys: vec![],
                });
            }
        }
    }
    Ok(CheckReport::from_witnesses(CheckKind::Correctness, false, witnesses))
}

pub fn check_ki(s: &Scheme, exhaustive: bool) -> Result<CheckReport, CheckError> {
    check_coalitions(s, CheckKind::Ki, exhaustive)
}

pub fn check_ski(s: &Scheme, exhaustive: bool) -> Result<CheckReport, CheckError> {
    check_coalitions(s, CheckKind::Ski, exhaustive)
}

fn check_coalitions(s: &Scheme, kind: CheckKind, exhaustive: bool) -> Result<CheckReport, CheckError> {
    let g = s.graph();
    let mut witnesses = Vec::new();
    for u in sorted_classes(s) {
        let forbidden: Vec<ClassId> = g.forbidden_set(&u).expect("class of the graph").into_iter().collect();
        let ancestors: Vec<ClassId> = match kind {
            CheckKind::Ski => g.ancestor_set(&u).expect("class of the graph").into_iter().collect(),
            _ => Vec::new(),
        };
        let space = forbidden.len() + ancestors.len();
        if space == 0 {
            continue;
        }
        let probe = CoalitionProbe::new(s, &u);
        let maximal_ok = probe.secure(&forbidden, &ancestors)?;
        if exhaustive && space > MAX_COALITION_CLASSES {
            return Err(CheckError::CoalitionSpaceTooLarge { class: u, size: space });
        }
        let first_failure = if exhaustive || (!maximal_ok && space <= MAX_COALITION_CLASSES) {
            probe.first_failure(&forbidden, &ancestors)?
        } else if !maximal_ok {
            Some((forbidden.clone(), ancestors.clone()))
        } else {
            None
        };
        if exhaustive && first_failure.is_none() != maximal_ok {
            return Err(CheckError::ModeDisagreement { class: u, maximal: maximal_ok, exhaustive: first_failure.is_none() });
        }
        if let Some((xs, ys)) = first_failure {
            witnesses.push(probe.witness(xs, ys)?);
        }
    }
    Ok(CheckReport::from_witnesses(kind, exhaustive, witnesses))
}

/// Secrets held and keys held by a coalition.
type Coalition = (Vec<ClassId>, Vec<ClassId>);

struct CoalitionProbe<'a> {
    scheme: &'a Scheme,
    target: &'a ClassId,
    key: [VarId; 1],
}

impl<'a> CoalitionProbe<'a> {
    fn new(scheme: &'a Scheme, target: &'a ClassId) -> Self {
        CoalitionProbe { scheme, target, key: [key_var(target)] }
    }

    fn givens(xs: &[ClassId], ys: &[ClassId]) -> Vec<VarId> {
        secret_vars(xs).into_iter().chain(key_vars(ys)).collect()
    }

    /// `K_target ⫫ (S_xs, K_ys)`; the empty coalition is trivially secure.
    fn secure(&self, xs: &[ClassId], ys: &[ClassId]) -> Result<bool, InfoError> {
        if xs.is_empty() && ys.is_empty() {
            return Ok(true);
        }
        self.scheme.dist().is_independent(&self.key, &Self::givens(xs, ys))
    }

    /// Smallest failing `(X, Y)` ordered by `|X| + |Y|`, then `X`, then `Y`.
    fn first_failure(&self, forbidden: &[ClassId], ancestors: &[ClassId]) -> Result<Option<Coalition>, InfoError> {
        for total in 1..=forbidden.len() + ancestors.len() {
            let mut candidates: Vec<Coalition> = Vec::new();
            for nx in total.saturating_sub(ancestors.len())..=total.min(forbidden.len()) {
                let ys_all = combinations(ancestors, total - nx);
                for xs in combinations(forbidden, nx) {
                    for ys in &ys_all {
                        candidates.push((xs.clone(), ys.clone()));
                    }
                }
            }
            candidates.sort();
            for (xs, ys) in candidates {
                if !self.secure(&xs, &ys)? {
                    return Ok(Some((xs, ys)));
                }
            }
        }
        Ok(None)
    }

    fn witness(&self, xs: Vec<ClassId>, ys: Vec<ClassId>) -> Result<Witness, InfoError> {
        let d = self.scheme.dist();
        let givens = Self::givens(&xs, &ys);
        Ok(Witness {
            class: self.target.clone(),
            reason: format!("K:{} is not independent of the coalition's view", self.target),
            h_key: d.entropy(&self.key)?,
            h_key_given: d.conditional_entropy(&self.key, &givens)?,
            secrets: xs,
            keys: ys,
        })
    }
}

/// All `k`-subsets of a sorted slice, in lexicographic order.
fn combinations(items: &[ClassId], k: usize) -> Vec<Vec<ClassId>> {
    let n = items.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i].clone()).collect());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// The keys `{K_u}` must be mutually independent.
pub fn check_key_independence(s: &Scheme) -> Result<CheckReport, CheckError> {
    let d = s.dist();
    let classes = sorted_classes(s);
    let groups: Vec<Vec<VarId>> = classes.iter().map(|c| vec![key_var(c)]).collect();
    let mut witnesses = Vec::new();
    if !d.is_mutually_independent(&groups)? {
        // some key must then depend on the others jointly
        for u in &classes {
            let others: Vec<ClassId> = classes.iter().filter(|c| *c != u).cloned().collect();
            let ku = [key_var(u)];
            let rest = key_vars(&others);
            if !d.is_independent(&ku, &rest)? {
                witnesses.push(Witness {
                    class: u.clone(),
                    reason: format!("K:{u} depends on the remaining keys"),
                    h_key: d.entropy(&ku)?,
                    h_key_given: d.conditional_entropy(&ku, &rest)?,
                    secrets: vec![],
                    keys: others,
                });
                break;
            }
        }
        debug_assert!(!witnesses.is_empty());
    }
    Ok(CheckReport::from_witnesses(CheckKind::KeyIndependence, false, witnesses))
}

/// Runs every check kind in a fixed order.
pub fn check_all(s: &Scheme, exhaustive: bool) -> Result<Vec<CheckReport>, CheckError> {
    CheckKind::ALL.into_iter().map(|k| check(s, k, exhaustive)).collect()
}
