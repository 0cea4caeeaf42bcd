//! From raw passive-form output to a readable specification over the method's own names.
//!
//! [`externalize`] rewrites every case in terms of the pre-state, the post-state and `\result`.
//! The remaining passes remove atoms and cases that carry no information.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lang::{BinOp, Expr, TypeEnv, TypedMethod, UnOp};
use crate::oracle::{satisfiable, Domain};
use crate::passive::{split_version, PassiveMethod};
use crate::sp::{InferredSpec, PathTrace};
use crate::spec::{Atom, AtomSet, Case, Specification};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("unresolvable internal name `{name}` in precondition atom `{atom}`")]
    Unresolvable { name: String, atom: String },
    #[error("vacuous specification: every case has a contradictory precondition")]
    Vacuous,
}

/// Result of [`externalize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Externalized {
    /// Flat specification over external names.
    pub spec: Specification,
    /// Rest atoms that still mentioned loop-internal values and were dropped.
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Pre,
    Rest,
}

struct Renamer<'a> {
    trace: &'a PathTrace,
    /// Globals the method may change; only these need `old` in the rest.
    written: &'a BTreeSet<String>,
    resolved: BTreeMap<String, Expr>,
}

impl Renamer<'_> {
    fn expr(&self, e: &Expr, side: Side) -> Expr {
        e.map_vars(&mut |n| self.name(n, side))
    }

    fn name(&self, name: &str, side: Side) -> Expr {
        match split_version(name) {
            (_, None) => Expr::var(name),
            (base, Some(0)) => {
                if side == Side::Rest && self.written.contains(base) {
                    Expr::Old(Box::new(Expr::var(base)))
                } else {
                    Expr::var(base)
                }
            }
            _ => {
                if let Some(def) = self.trace.defs.get(name) {
                    self.expr(def, side)
                } else if let Some(r) = self.resolved.get(name) {
                    r.clone()
                } else {
                    Expr::var(name)
                }
            }
        }
    }

    /// Binds loop versions through unguarded equations such as `\result == i$2` or `g == g$3`.
    fn resolve(&mut self, rest: &AtomSet) {
        loop {
            let mut found = None;
            for a in rest {
                let Expr::Binary(BinOp::Eq, l, r) = a.expr() else { continue };
                let (l, r) = (self.expr(l, Side::Rest), self.expr(r, Side::Rest));
                for (known, var) in [(&l, &r), (&r, &l)] {
                    if let Expr::Var(v) = var {
                        if self.trace.havoc.contains(v) && !self.resolved.contains_key(v) && !internal(known) {
                            found = Some((v.clone(), known.clone()));
                        }
                    }
                }
                if found.is_some() {
                    break;
                }
            }
            match found {
                Some((v, e)) => {
                    self.resolved.insert(v, e);
                }
                None => return,
            }
        }
    }
}

fn internal(e: &Expr) -> bool {
    let mut hit = false;
    e.for_each_var(&mut |n| hit |= n.contains('$'));
    hit
}

fn first_internal(e: &Expr) -> Option<String> {
    e.vars().into_iter().find(|n| n.contains('$')).map(String::from)
}

/// Rewrites each raw case over external names.
///
/// Versions are replaced by their definitions on the case's path; initial versions become the
/// plain name in preconditions and `old(g)` for assigned globals elsewhere. Loop versions are bound
/// through unguarded equations with external terms. Rest atoms that still mention a loop
/// version are dropped, which only weakens the case.
pub fn externalize(inferred: &InferredSpec, method: &PassiveMethod) -> Result<Externalized, RefineError> {
    let written = &method.original.globals_written;
    let mut leaves = Vec::new();
    inferred.spec.for_each_leaf(&mut |c| leaves.push(c));
    assert_eq!(leaves.len(), inferred.traces.len(), "one trace per leaf");
    let mut cases = Vec::new();
    let mut dropped = 0;
    for (leaf, trace) in leaves.into_iter().zip(&inferred.traces) {
        let mut r = Renamer { trace, written, resolved: BTreeMap::new() };
        r.resolve(&leaf.rest);
        let mut pre = AtomSet::new();
        for a in &leaf.pre {
            let e = r.expr(a.expr(), Side::Pre);
            if let Some(name) = first_internal(&e) {
                return Err(RefineError::Unresolvable { name, atom: a.text().to_string() });
            }
            pre.insert(Atom::new(e));
        }
        let mut rest = AtomSet::new();
        for a in &leaf.rest {
            let e = r.expr(a.expr(), Side::Rest);
            if internal(&e) {
                dropped += 1;
            } else {
                rest.insert(Atom::new(e));
            }
        }
        cases.push(Case::new(pre, rest));
    }
    Ok(Externalized { spec: Specification::from_cases(cases), dropped })
}

/// True for atoms that hold in every state: `true`, `!false`, `e == e`, and disjunctions,
/// implications or conjunctions built from those.
pub fn is_trivial(e: &Expr) -> bool {
    match e {
        Expr::Bool(true) => true,
        Expr::Unary(UnOp::Not, inner) => matches!(**inner, Expr::Bool(false)),
        Expr::Binary(BinOp::Eq, l, r) => l == r,
        Expr::Binary(BinOp::Or, l, r) => is_trivial(l) || is_trivial(r),
        Expr::Binary(BinOp::Implies, _, r) => is_trivial(r),
        Expr::Binary(BinOp::And, l, r) => is_trivial(l) && is_trivial(r),
        _ => false,
    }
}

/// Removes trivial atoms, splices out distributed preconditions left empty, and drops cases
/// left with no atoms at all unless they are the only alternative.
pub fn strip_trivial(spec: &Specification) -> Specification {
    match spec {
        Specification::Leaf(c) => Specification::Leaf(Case::new(keep(&c.pre), keep(&c.rest))),
        Specification::Distrib { pre, body } => {
            let pre = keep(pre);
            let body = strip_trivial(body);
            if pre.is_empty() {
                body
            } else {
                Specification::distrib(pre, body)
            }
        }
        Specification::Disjunction(alts) => {
            let stripped: Vec<Specification> = alts.iter().map(strip_trivial).collect();
            let informative: Vec<Specification> = stripped.iter().filter(|s| !is_empty_case(s)).cloned().collect();
            if informative.is_empty() {
                Specification::Disjunction(stripped.into_iter().take(1).collect())
            } else {
                Specification::Disjunction(informative)
            }
        }
    }
}

fn keep(atoms: &AtomSet) -> AtomSet {
    atoms.iter().filter(|a| !is_trivial(a.expr())).cloned().collect()
}

fn is_empty_case(s: &Specification) -> bool {
    matches!(s, Specification::Leaf(c) if c.pre.is_empty() && c.rest.is_empty())
}

/// Evident contradiction: `false`, `!true`, `!(e == e)`, or an atom next to its negation.
pub fn contradictory(pre: &AtomSet) -> bool {
    pre.iter().any(|a| {
        let e = a.expr();
        matches!(e, Expr::Bool(false))
            || matches!(e, Expr::Unary(UnOp::Not, inner) if is_trivial(inner))
            || pre.contains(&a.negated())
    })
}

/// Removes cases whose accumulated precondition is contradictory. With `deep` set, also those
/// with no satisfying input in the bounded domain.
pub fn prune_unsat(spec: &Specification, deep: Option<(&TypeEnv, Domain)>) -> Result<Specification, RefineError> {
    prune(spec, &AtomSet::new(), deep).ok_or(RefineError::Vacuous)
}

fn prune(spec: &Specification, outer: &AtomSet, deep: Option<(&TypeEnv, Domain)>) -> Option<Specification> {
    match spec {
        Specification::Leaf(c) => {
            let mut all = outer.clone();
            all.extend_from(&c.pre);
            let dead = contradictory(&all) || deep.is_some_and(|(env, d)| !satisfiable(&all, env, d));
            (!dead).then(|| spec.clone())
        }
        Specification::Distrib { pre, body } => {
            let mut all = outer.clone();
            all.extend_from(pre);
            prune(body, &all, deep).map(|b| Specification::distrib(pre.clone(), b))
        }
        Specification::Disjunction(alts) => {
            let kept: Vec<Specification> = alts.iter().filter_map(|a| prune(a, outer, deep)).collect();
            (!kept.is_empty()).then_some(Specification::Disjunction(kept))
        }
    }
}

/// Canonical text of a subtree: atom sets and alternatives are sorted.
pub fn canonical_key(spec: &Specification) -> String {
    let sorted = |s: &AtomSet| {
        let mut t = s.texts();
        t.sort_unstable();
        t.join(", ")
    };
    match spec {
        Specification::Leaf(c) => format!("<{} ; {}>", sorted(&c.pre), sorted(&c.rest)),
        Specification::Distrib { pre, body } => format!("[{}]{}", sorted(pre), canonical_key(body)),
        Specification::Disjunction(alts) => {
            let mut keys: Vec<String> = alts.iter().map(canonical_key).collect();
            keys.sort_unstable();
            format!("({})", keys.join(" | "))
        }
    }
}

/// Drops alternatives that repeat an earlier sibling up to atom order.
pub fn dedupe_cases(spec: &Specification) -> Specification {
    match spec {
        Specification::Leaf(_) => spec.clone(),
        Specification::Distrib { pre, body } => Specification::distrib(pre.clone(), dedupe_cases(body)),
        Specification::Disjunction(alts) => {
            let mut seen = BTreeSet::new();
            let kept = alts.iter().map(dedupe_cases).filter(|a| seen.insert(canonical_key(a))).collect();
            Specification::Disjunction(kept)
        }
    }
}

/// Which globals a method may change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    /// Globals assigned somewhere in the body, in name order.
    pub assignable: Vec<String>,
}

impl Frame {
    pub fn is_pure(&self) -> bool {
        self.assignable.is_empty()
    }
}

/// Syntactic frame: every global with an assignment anywhere in the body. This over-approximates
/// the globals actually changed at run time.
pub fn infer_frame(method: &TypedMethod) -> Frame {
    Frame { assignable: method.globals_written.iter().cloned().collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineOptions {
    /// Run the cleanup passes after externalization.
    pub simplify: bool,
    /// Bounded domain for satisfiability pruning; `None` keeps the syntactic check only.
    pub deep_prune: Option<Domain>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { simplify: true, deep_prune: None }
    }
}

/// Externalization followed by stripping, pruning and deduplication.
pub fn refine(
    inferred: &InferredSpec,
    method: &PassiveMethod,
    opts: RefineOptions,
) -> Result<Externalized, RefineError> {
    let mut out = externalize(inferred, method)?;
    if opts.simplify {
        let stripped = strip_trivial(&out.spec);
        let deep = opts.deep_prune.map(|d| (&method.original.env, d));
        out.spec = dedupe_cases(&prune_unsat(&stripped, deep)?);
    }
    Ok(out)
}
