//! Specifications: atoms, cases, and trees of cases.
//!
//! A specification in normal form is a disjunction of cases. Other shapes arise from raw
//! inference (nested disjunctions that follow the branch structure) and from compaction
//! (distributed preconditions shared by a group of cases).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::lang::{parse_expr, pretty, Expr, SyntaxError};

/// A Boolean expression treated as an opaque unit, identified by its canonical text.
#[derive(Debug, Clone)]
pub struct Atom {
    expr: Expr,
    text: String,
}

impl Atom {
    pub fn new(expr: Expr) -> Atom {
        let text = pretty::expr(&expr);
        Atom { expr, text }
    }

    pub fn parse(text: &str) -> Result<Atom, SyntaxError> {
        parse_expr(text).map(Atom::new)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// The atom with one outer negation added or removed.
    pub fn negated(&self) -> Atom {
        Atom::new(self.expr.clone().negate())
    }

    pub fn into_expr(self) -> Expr {
        self.expr
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Atom {}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.text.hash(state)
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.text.cmp(&other.text)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl From<Expr> for Atom {
    fn from(e: Expr) -> Self {
        Atom::new(e)
    }
}

/// Insertion-ordered set of atoms, unique by canonical text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AtomSet(Vec<Atom>);

impl AtomSet {
    pub fn new() -> Self {
        AtomSet(Vec::new())
    }

    /// Adds the atom unless an atom with the same text is present. Returns whether it was added.
    pub fn insert(&mut self, atom: Atom) -> bool {
        if self.0.contains(&atom) {
            false
        } else {
            self.0.push(atom);
            true
        }
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.0.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Atom> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Atom] {
        &self.0
    }

    pub fn retain(&mut self, f: impl FnMut(&Atom) -> bool) {
        self.0.retain(f)
    }

    pub fn extend_from(&mut self, other: &AtomSet) {
        for a in other.iter() {
            self.insert(a.clone());
        }
    }

    /// Equality ignoring order.
    pub fn same_set(&self, other: &AtomSet) -> bool {
        self.len() == other.len() && self.iter().all(|a| other.contains(a))
    }

    pub fn texts(&self) -> Vec<&str> {
        self.0.iter().map(|a| a.text()).collect()
    }

    /// Builds a set from expression texts; panics on syntax errors, so meant for tests and examples.
    pub fn of(texts: &[&str]) -> AtomSet {
        texts.iter().map(|t| Atom::parse(t).unwrap_or_else(|e| panic!("bad atom `{t}`: {e}"))).collect()
    }
}

impl FromIterator<Atom> for AtomSet {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        let mut s = AtomSet::new();
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl<'a> IntoIterator for &'a AtomSet {
    type Item = &'a Atom;
    type IntoIter = std::slice::Iter<'a, Atom>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl IntoIterator for AtomSet {
    type Item = Atom;
    type IntoIter = std::vec::IntoIter<Atom>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// One specification case: precondition atoms and the remaining (post/frame) atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Case {
    pub pre: AtomSet,
    pub rest: AtomSet,
}

impl Case {
    pub fn new(pre: AtomSet, rest: AtomSet) -> Case {
        Case { pre, rest }
    }

    /// Shorthand for tests and examples: `Case::of(&["a < b"], &["\\result == -1"])`.
    pub fn of(pre: &[&str], rest: &[&str]) -> Case {
        Case { pre: AtomSet::of(pre), rest: AtomSet::of(rest) }
    }

    /// Same atoms in both parts, regardless of order.
    pub fn same_as(&self, other: &Case) -> bool {
        self.pre.same_set(&other.pre) && self.rest.same_set(&other.rest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Specification {
    Disjunction(Vec<Specification>),
    Leaf(Case),
    /// Precondition atoms shared by every case of `body`.
    Distrib {
        pre: AtomSet,
        body: Box<Specification>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("specification is not in normal form: it contains a distributed precondition")]
pub struct NotNormalForm;

impl Specification {
    /// A disjunction of the given cases, in order.
    pub fn from_cases(cases: impl IntoIterator<Item = Case>) -> Specification {
        Specification::Disjunction(cases.into_iter().map(Specification::Leaf).collect())
    }

    pub fn distrib(pre: AtomSet, body: Specification) -> Specification {
        Specification::Distrib { pre, body: Box::new(body) }
    }

    /// True iff the tree is a single case or a disjunction whose alternatives are all cases.
    pub fn is_snf(&self) -> bool {
        match self {
            Specification::Leaf(_) => true,
            Specification::Disjunction(alts) => alts.iter().all(|a| matches!(a, Specification::Leaf(_))),
            Specification::Distrib { .. } => false,
        }
    }

    /// The cases of a specification without distributed preconditions, in first-appearance order
    /// with duplicates removed. Nested disjunctions are flattened.
    pub fn cases(&self) -> Result<Vec<Case>, NotNormalForm> {
        let mut out: Vec<Case> = Vec::new();
        self.collect_cases(&mut out)?;
        Ok(out)
    }

    fn collect_cases(&self, out: &mut Vec<Case>) -> Result<(), NotNormalForm> {
        match self {
            Specification::Leaf(c) => {
                if !out.iter().any(|o| o.same_as(c)) {
                    out.push(c.clone());
                }
                Ok(())
            }
            Specification::Disjunction(alts) => alts.iter().try_for_each(|a| a.collect_cases(out)),
            Specification::Distrib { .. } => Err(NotNormalForm),
        }
    }

    /// Pushes distributed preconditions down into the cases, yielding normal form.
    pub fn flatten(&self) -> Specification {
        let mut cases = Vec::new();
        self.flatten_into(&AtomSet::new(), &mut cases);
        Specification::from_cases(cases)
    }

    fn flatten_into(&self, outer: &AtomSet, out: &mut Vec<Case>) {
        match self {
            Specification::Leaf(c) => {
                let mut pre = outer.clone();
                pre.extend_from(&c.pre);
                out.push(Case { pre, rest: c.rest.clone() });
            }
            Specification::Disjunction(alts) => alts.iter().for_each(|a| a.flatten_into(outer, out)),
            Specification::Distrib { pre, body } => {
                let mut all = outer.clone();
                all.extend_from(pre);
                body.flatten_into(&all, out);
            }
        }
    }

    /// All precondition atoms, including distributed ones.
    pub fn pre(&self) -> AtomSet {
        let mut out = AtomSet::new();
        self.walk_pre(&mut out);
        out
    }

    fn walk_pre(&self, out: &mut AtomSet) {
        match self {
            Specification::Leaf(c) => out.extend_from(&c.pre),
            Specification::Disjunction(alts) => alts.iter().for_each(|a| a.walk_pre(out)),
            Specification::Distrib { pre, body } => {
                out.extend_from(pre);
                body.walk_pre(out);
            }
        }
    }

    /// All rest atoms.
    pub fn rest(&self) -> AtomSet {
        let mut out = AtomSet::new();
        self.for_each_leaf(&mut |c| out.extend_from(&c.rest));
        out
    }

    pub fn for_each_leaf<'a>(&'a self, f: &mut impl FnMut(&'a Case)) {
        match self {
            Specification::Leaf(c) => f(c),
            Specification::Disjunction(alts) => alts.iter().for_each(|a| a.for_each_leaf(f)),
            Specification::Distrib { body, .. } => body.for_each_leaf(f),
        }
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.for_each_leaf(&mut |_| n += 1);
        n
    }

    /// Every atom occurrence, distributed ones included.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Specification::Leaf(c) => c.pre.iter().chain(c.rest.iter()).for_each(f),
            Specification::Disjunction(alts) => alts.iter().for_each(|a| a.for_each_atom(f)),
            Specification::Distrib { pre, body } => {
                pre.iter().for_each(&mut *f);
                body.for_each_atom(f);
            }
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} ; {}>", self.pre.texts().join(", "), self.rest.texts().join(", "))
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Specification::Leaf(c) => c.fmt(f),
            Specification::Disjunction(alts) => {
                f.write_str("(")?;
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    a.fmt(f)?;
                }
                f.write_str(")")
            }
            Specification::Distrib { pre, body } => write!(f, "[{}] AND {}", pre.texts().join(", "), body),
        }
    }
}
