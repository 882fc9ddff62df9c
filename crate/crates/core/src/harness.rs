//! Empirical replay of the KI/SKI equivalence argument on concrete schemes.
//!
//! For KI-secure (and correct) schemes every entropy equality used along a
//! well-ordered class sequence is evaluated numerically, and wherever an
//! exact characterization exists (independence or functional dependence) the
//! exact predicate is evaluated as well. The exact predicate decides; the
//! numeric side must agree within [`TOLERANCE`].

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::check::{check_correctness, check_key_independence, check_ki, check_ski, CheckError};
use crate::gen::{gen_correlated, gen_leaky, gen_random_correct, gen_trivial, GenError};
use crate::graph::{AccessGraph, ClassId, ClassSequence, GraphError};
use crate::info::{InfoError, VarId};
use crate::prng::SplitMix64;
use crate::scheme::{key_var, key_vars, secret_vars, Scheme};

pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("theorem violation: {what}\nscheme:\n{scheme}")]
    TheoremViolation { what: String, scheme: String },
    #[error("identity {identity} violated: {detail}\nscheme:\n{scheme}")]
    IdentityViolation { identity: String, detail: String, scheme: String },
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gen(#[from] GenError),
}

/// Count of identities evaluated and the largest numeric deviation seen.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityReport {
    pub checks: usize,
    pub max_abs_err: f64,
}

impl IdentityReport {
    pub fn merge(&mut self, other: IdentityReport) {
        self.checks += other.checks;
        self.max_abs_err = self.max_abs_err.max(other.max_abs_err);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EquivalenceSummary {
    pub schemes: usize,
    pub ki_pass: usize,
    pub ki_fail: usize,
    pub discrepancies: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ValidationSummary {
    pub equivalence: EquivalenceSummary,
    pub identities: IdentityReport,
}

impl ValidationSummary {
    pub fn to_json(&self) -> Json {
        json!({
            "schemes": self.equivalence.schemes,
            "ki_pass": self.equivalence.ki_pass,
            "ki_fail": self.equivalence.ki_fail,
            "discrepancies": self.equivalence.discrepancies,
            "identity_checks": self.identities.checks,
            "max_abs_err": self.identities.max_abs_err,
        })
    }
}

/// Evaluates identities against one scheme, failing fast with the scheme attached.
struct Tally<'a> {
    scheme: &'a Scheme,
    report: IdentityReport,
}

impl<'a> Tally<'a> {
    fn new(scheme: &'a Scheme) -> Self {
        Tally { scheme, report: IdentityReport::default() }
    }

    fn numeric(&mut self, identity: &str, lhs: f64, rhs: f64) -> Result<(), HarnessError> {
        let err = (lhs - rhs).abs();
        self.report.checks += 1;
        self.report.max_abs_err = self.report.max_abs_err.max(err);
        if err.is_finite() && err < TOLERANCE {
            Ok(())
        } else {
            Err(self.violation(identity, format!("lhs {lhs} vs rhs {rhs} (|diff| = {err:e})")))
        }
    }

    fn exact(&mut self, identity: &str, holds: bool) -> Result<(), HarnessError> {
        self.report.checks += 1;
        if holds {
            Ok(())
        } else {
            Err(self.violation(identity, "exact predicate is false".into()))
        }
    }

    fn violation(&self, identity: &str, detail: String) -> HarnessError {
        HarnessError::IdentityViolation { identity: identity.to_string(), detail, scheme: self.scheme.to_json_string() }
    }

    fn h(&self, targets: &[VarId], givens: &[VarId]) -> Result<f64, HarnessError> {
        Ok(self.scheme.dist().conditional_entropy(targets, givens)?)
    }

    fn sum_h(&self, classes: &[ClassId]) -> Result<f64, HarnessError> {
        classes.iter().map(|c| self.h(&[key_var(c)], &[])).sum()
    }
}

fn cat(a: Vec<VarId>, b: Vec<VarId>) -> Vec<VarId> {
    a.into_iter().chain(b).collect()
}

fn singletons(classes: &[ClassId]) -> Vec<Vec<VarId>> {
    classes.iter().map(|c| vec![key_var(c)]).collect()
}

fn require_secure(s: &Scheme) -> Result<(), HarnessError> {
    if !check_correctness(s)?.passed {
        return Err(HarnessError::PreconditionFailed("scheme is not correct".into()));
    }
    if !check_ki(s, false)?.passed {
        return Err(HarnessError::PreconditionFailed("scheme is not KI-secure".into()));
    }
    Ok(())
}

fn require_well_ordered(g: &AccessGraph, seq: &ClassSequence) -> Result<(), HarnessError> {
    if !g.is_well_ordered(seq)? {
        return Err(HarnessError::PreconditionFailed(format!("sequence {seq} is not well ordered")));
    }
    Ok(())
}

/// Checks KI and SKI verdicts coincide on every scheme.
pub fn verify_equivalence(corpus: &[Scheme]) -> Result<EquivalenceSummary, HarnessError> {
    let mut summary = EquivalenceSummary { schemes: corpus.len(), ..Default::default() };
    for s in corpus {
        let ki = check_ki(s, false)?.passed;
        let ski = check_ski(s, false)?.passed;
        if ki != ski {
            return Err(HarnessError::TheoremViolation {
                what: format!("KI verdict {ki} differs from SKI verdict {ski}"),
                scheme: s.to_json_string(),
            });
        }
        if ki {
            summary.ki_pass += 1;
        } else {
            summary.ki_fail += 1;
        }
    }
    Ok(summary)
}

/// The joint key entropy along a well-ordered sequence splits into the sum
/// of the individual key entropies, and the keys are mutually independent.
pub fn verify_independence_sum(s: &Scheme, seq: &ClassSequence) -> Result<IdentityReport, HarnessError> {
    require_secure(s)?;
    require_well_ordered(s.graph(), seq)?;
    independence_sum(s, seq)
}

fn independence_sum(s: &Scheme, seq: &ClassSequence) -> Result<IdentityReport, HarnessError> {
    let d = s.dist();
    let u = &seq.0;
    let mut t = Tally::new(s);
    for j in 1..u.len() {
        let (prior, kj) = (&u[..j], [key_var(&u[j])]);
        let s_prior = secret_vars(prior);
        let k_prior = key_vars(prior);
        // KI for u_j against the earlier classes of the sequence
        t.numeric("ki-step", t.h(&kj, &s_prior)?, t.h(&kj, &[])?)?;
        t.exact("ki-step", d.is_independent(&kj, &s_prior)?)?;
        // the earlier keys are determined by the earlier secrets, with or without K_{u_j}
        t.numeric("prefix-keys-determined", t.h(&k_prior, &s_prior)?, 0.0)?;
        t.exact("prefix-keys-determined", d.is_functionally_determined(&k_prior, &s_prior)?)?;
        let with_kj = cat(s_prior.clone(), kj.to_vec());
        t.numeric("prefix-keys-determined-with-key", t.h(&k_prior, &with_kj)?, 0.0)?;
        t.exact("prefix-keys-determined-with-key", d.is_functionally_determined(&k_prior, &with_kj)?)?;
        // conditioning on the earlier keys adds nothing once their secrets are known
        t.numeric("cmi-step", t.h(&kj, &s_prior)?, t.h(&kj, &cat(k_prior, s_prior))?)?;
    }
    t.numeric("independence-sum", t.h(&key_vars(u), &[])?, t.sum_h(u)?)?;
    t.exact("independence-sum", d.is_mutually_independent(&singletons(u))?)?;
    Ok(t.report)
}

/// Splits a well-ordered sequence at position `n` (1-based) with `m` classes
/// after it and checks the three conditional equalities around `u_n`.
pub fn verify_conditional_identities(s: &Scheme, seq: &ClassSequence, n: usize, m: usize) -> Result<IdentityReport, HarnessError> {
    require_secure(s)?;
    require_well_ordered(s.graph(), seq)?;
    if n == 0 || n + m != seq.len() {
        return Err(HarnessError::PreconditionFailed(format!(
            "split n = {n}, m = {m} does not cover a sequence of length {}",
            seq.len()
        )));
    }
    conditional_identities(s, seq, n, m)
}

fn conditional_identities(s: &Scheme, seq: &ClassSequence, n: usize, m: usize) -> Result<IdentityReport, HarnessError> {
    let d = s.dist();
    let u = &seq.0;
    let mut t = Tally::new(s);
    let prefix = &u[..n - 1];
    let s_prefix = secret_vars(prefix);
    let kn = [key_var(&u[n - 1])];
    let tail = &u[n..n + m];
    let k_tail = key_vars(tail);

    if m > 0 {
        let sum_tail = t.sum_h(tail)?;
        // tail keys given K_{u_n} and the prefix secrets
        let given_kn = cat(kn.to_vec(), s_prefix.clone());
        t.numeric("tail-given-key-and-secrets", t.h(&k_tail, &given_kn)?, sum_tail)?;
        let mut groups = singletons(tail);
        groups.push(given_kn);
        t.exact("tail-given-key-and-secrets", d.is_mutually_independent(&groups)?)?;

        // tail keys given the prefix secrets only
        t.numeric("tail-given-secrets", t.h(&k_tail, &s_prefix)?, sum_tail)?;
        let mut groups = singletons(tail);
        if !s_prefix.is_empty() {
            groups.push(s_prefix.clone());
        }
        t.exact("tail-given-secrets", d.is_mutually_independent(&groups)?)?;
    }

    // K_{u_n} stays independent of the prefix secrets together with the tail keys
    let view = cat(k_tail, s_prefix);
    t.numeric("key-given-view", t.h(&kn, &view)?, t.h(&kn, &[])?)?;
    if !view.is_empty() {
        t.exact("key-given-view", d.is_independent(&kn, &view)?)?;
    }

    for j in 2..=n {
        let k = key_vars(&u[..j - 1]);
        let sv = secret_vars(&u[..j - 1]);
        t.exact("prefix-keys-determined", d.is_functionally_determined(&k, &sv)?)?;
    }
    for j in 2..=m + 1 {
        let k = key_vars(&u[n - 1..n + j - 1]);
        let sv = secret_vars(&u[..n + j - 1]);
        t.exact("window-keys-determined", d.is_functionally_determined(&k, &sv)?)?;
        if j <= m {
            let with_next = cat(vec![key_var(&u[n + j - 1])], sv);
            t.exact("window-keys-determined-with-key", d.is_functionally_determined(&k, &with_next)?)?;
        }
    }
    Ok(t.report)
}

/// For class `u`, orders the forbidden set, `u`, then its ancestors, and
/// derives `H(K_u | K_{C_u}, S_{F_u}) = H(K_u)`.
pub fn verify_main_theorem_sequence(s: &Scheme, u: &ClassId) -> Result<IdentityReport, HarnessError> {
    require_secure(s)?;
    main_theorem_sequence(s, u)
}

fn main_theorem_sequence(s: &Scheme, u: &ClassId) -> Result<IdentityReport, HarnessError> {
    let g = s.graph();
    let d = s.dist();
    let seq = g.theorem_sequence(u)?;
    require_well_ordered(g, &seq)?;
    let forbidden = g.forbidden_set(u)?;
    let ancestors = g.ancestor_set(u)?;
    let mut report = conditional_identities(s, &seq, forbidden.len() + 1, ancestors.len())?;

    let mut t = Tally::new(s);
    let ku = [key_var(u)];
    let view = cat(key_vars(&ancestors), secret_vars(&forbidden));
    t.numeric("ski-maximal", t.h(&ku, &view)?, t.h(&ku, &[])?)?;
    if !view.is_empty() {
        t.exact("ski-maximal", d.is_independent(&ku, &view)?)?;
    }
    report.merge(t.report);
    Ok(report)
}

/// Everything the harness knows how to check on one KI-secure scheme: the
/// independence sum and every split of the reversed topological order, the
/// theorem sequence of every class, and independence of all keys.
pub fn verify_secure_scheme(s: &Scheme) -> Result<IdentityReport, HarnessError> {
    require_secure(s)?;
    let g = s.graph();
    let seq = g.well_ordered_all();
    require_well_ordered(g, &seq)?;
    let mut report = independence_sum(s, &seq)?;
    for n in 1..=seq.len() {
        report.merge(conditional_identities(s, &seq, n, seq.len() - n)?);
    }
    for u in g.classes() {
        report.merge(main_theorem_sequence(s, u)?);
    }
    if !check_key_independence(s)?.passed {
        return Err(HarnessError::TheoremViolation {
            what: "KI-secure scheme has dependent keys".into(),
            scheme: s.to_json_string(),
        });
    }
    report.checks += 1;
    Ok(report)
}

/// Equivalence over the corpus plus the full identity replay on every
/// KI-passing member.
pub fn validate_corpus(corpus: &[Scheme]) -> Result<ValidationSummary, HarnessError> {
    let equivalence = verify_equivalence(corpus)?;
    let mut identities = IdentityReport::default();
    for s in corpus {
        if !check_correctness(s)?.passed {
            return Err(HarnessError::PreconditionFailed("corpus contains an incorrect scheme".into()));
        }
        if check_ki(s, false)?.passed {
            identities.merge(verify_secure_scheme(s)?);
        }
    }
    Ok(ValidationSummary { equivalence, identities })
}

/// The direct-storage scheme, every admissible leak, every correlated pair,
/// and `trials` random schemes seeded from `seed`.
pub fn standard_corpus(g: &AccessGraph, q: u64, trials: usize, seed: u64) -> Result<Vec<Scheme>, HarnessError> {
    let mut classes = g.classes().to_vec();
    classes.sort();
    let mut corpus = vec![gen_trivial(g, q)?];
    for target in &classes {
        for leaker in g.forbidden_set(target)? {
            corpus.push(gen_leaky(g, q, target, &leaker)?);
        }
    }
    for (i, u) in classes.iter().enumerate() {
        for w in &classes[i + 1..] {
            corpus.push(gen_correlated(g, q, u, w)?);
        }
    }
    let mut rng = SplitMix64::new(seed);
    for _ in 0..trials {
        corpus.push(gen_random_correct(g, q, rng.next_u64())?);
    }
    Ok(corpus)
}
