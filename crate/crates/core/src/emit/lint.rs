use std::collections::BTreeSet;
use std::fmt;

use crate::lang::{BinOp, Expr};
use crate::refine::{canonical_key, contradictory};
use crate::spec::{AtomSet, Specification};

/// A property of an emitted contract that makes it harder to read or use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LintIssue {
    TrueAtom(String),
    SelfEquality(String),
    DuplicateSibling(String),
    InternalName(String),
    ContradictoryPre(String),
    MissingFrame,
}

impl fmt::Display for LintIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LintIssue::TrueAtom(a) => write!(f, "atom `{a}` is the constant true"),
            LintIssue::SelfEquality(a) => write!(f, "atom `{a}` compares a term with itself"),
            LintIssue::DuplicateSibling(c) => write!(f, "case {c} repeats a sibling"),
            LintIssue::InternalName(a) => write!(f, "atom `{a}` mentions an internal name"),
            LintIssue::ContradictoryPre(p) => write!(f, "precondition [{p}] is contradictory"),
            LintIssue::MissingFrame => f.write_str("contract has neither `pure` nor `assignable`"),
        }
    }
}

/// Checks a specification and the contract rendered from it.
pub fn lint(spec: &Specification, contract: &str) -> Vec<LintIssue> {
    let mut issues = Vec::new();
    spec.for_each_atom(&mut |a| {
        match a.expr() {
            Expr::Bool(true) => issues.push(LintIssue::TrueAtom(a.text().into())),
            Expr::Binary(BinOp::Eq, l, r) if l == r => issues.push(LintIssue::SelfEquality(a.text().into())),
            _ => {}
        }
        if a.text().contains('$') {
            issues.push(LintIssue::InternalName(a.text().into()));
        }
    });
    walk(spec, &AtomSet::new(), &mut issues);
    let framed = contract.lines().any(|l| {
        let l = l.trim();
        l == "/*@ pure */" || l.starts_with("assignable ")
    });
    if !framed {
        issues.push(LintIssue::MissingFrame);
    }
    issues
}

fn walk(spec: &Specification, outer: &AtomSet, issues: &mut Vec<LintIssue>) {
    match spec {
        Specification::Leaf(c) => {
            let mut all = outer.clone();
            all.extend_from(&c.pre);
            if contradictory(&all) {
                issues.push(LintIssue::ContradictoryPre(all.texts().join(", ")));
            }
        }
        Specification::Distrib { pre, body } => {
            let mut all = outer.clone();
            all.extend_from(pre);
            walk(body, &all, issues);
        }
        Specification::Disjunction(alts) => {
            let mut seen = BTreeSet::new();
            for a in alts {
                let key = canonical_key(a);
                if !seen.insert(key.clone()) {
                    issues.push(LintIssue::DuplicateSibling(key));
                }
                walk(a, outer, issues);
            }
        }
    }
}
