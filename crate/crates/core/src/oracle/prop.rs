//! Propositional equivalence of specifications by truth table.
//!
//! Atoms are treated as opaque propositions, except that a leading `!` flips polarity and
//! Boolean literals and `e == e` are constants. Precondition atoms and rest atoms are separate
//! propositions even when their text matches, since they read different states. Two
//! specifications are equivalent when their translations into a single formula agree on every
//! row.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lang::{BinOp, Expr, UnOp};
use crate::spec::{Atom, AtomSet, Specification};

/// Default cap on distinct propositions.
pub const DEFAULT_ATOM_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropError {
    #[error("{count} distinct atoms exceed the truth-table limit of {limit}")]
    TooManyAtoms { count: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Pre,
    Rest,
}

/// `spec ≡ far(spec)` style check with the default atom limit.
pub fn prop_equiv(a: &Specification, b: &Specification) -> Result<bool, PropError> {
    prop_equiv_with_limit(a, b, DEFAULT_ATOM_LIMIT)
}

pub fn prop_equiv_with_limit(a: &Specification, b: &Specification, limit: usize) -> Result<bool, PropError> {
    let mut vars = BTreeMap::new();
    collect(a, &mut vars);
    collect(b, &mut vars);
    if vars.len() > limit {
        return Err(PropError::TooManyAtoms { count: vars.len(), limit });
    }
    for (i, slot) in vars.values_mut().enumerate() {
        *slot = i;
    }
    let t = Tables { vars: &vars, n: vars.len() };
    Ok(t.meaning(a) == t.meaning(b))
}

/// Reduces an atom to `(polarity, base)`; `base` is `None` for constants, in which case the
/// polarity is the constant value.
fn classify(atom: &Atom) -> (bool, Option<&Expr>) {
    let mut e = atom.expr();
    let mut positive = true;
    while let Expr::Unary(UnOp::Not, inner) = e {
        positive = !positive;
        e = inner;
    }
    match e {
        Expr::Bool(b) => (positive == *b, None),
        Expr::Binary(BinOp::Eq, l, r) if l == r => (positive, None),
        _ => (positive, Some(e)),
    }
}

fn collect(s: &Specification, vars: &mut BTreeMap<(Role, String), usize>) {
    let mut add = |role: Role, atoms: &AtomSet| {
        for a in atoms {
            if let (_, Some(base)) = classify(a) {
                vars.entry((role, base.to_string())).or_insert(0);
            }
        }
    };
    match s {
        Specification::Leaf(c) => {
            add(Role::Pre, &c.pre);
            add(Role::Rest, &c.rest);
        }
        Specification::Disjunction(alts) => alts.iter().for_each(|x| collect(x, vars)),
        Specification::Distrib { pre, body } => {
            add(Role::Pre, pre);
            collect(body, vars);
        }
    }
}

type Bits = Vec<u64>;

struct Tables<'a> {
    vars: &'a BTreeMap<(Role, String), usize>,
    n: usize,
}

impl Tables<'_> {
    fn rows(&self) -> usize {
        1 << self.n
    }

    fn constant(&self, value: bool) -> Bits {
        let rows = self.rows();
        let mut bits = vec![if value { u64::MAX } else { 0 }; rows.div_ceil(64)];
        if rows < 64 {
            bits[0] &= (1u64 << rows) - 1;
        }
        bits
    }

    fn variable(&self, i: usize) -> Bits {
        let mut bits = self.constant(false);
        for (w, word) in bits.iter_mut().enumerate() {
            for b in 0..64 {
                let row = w * 64 + b;
                if row < self.rows() && (row >> i) & 1 == 1 {
                    *word |= 1 << b;
                }
            }
        }
        bits
    }

    fn atom(&self, role: Role, a: &Atom) -> Bits {
        match classify(a) {
            (value, None) => self.constant(value),
            (positive, Some(base)) => {
                let bits = self.variable(self.vars[&(role, base.to_string())]);
                if positive {
                    bits
                } else {
                    self.not(bits)
                }
            }
        }
    }

    fn not(&self, mut x: Bits) -> Bits {
        let mask = self.constant(true);
        for (w, m) in x.iter_mut().zip(mask) {
            *w = !*w & m;
        }
        x
    }

    fn conj(&self, role: Role, atoms: &AtomSet) -> Bits {
        let mut acc = self.constant(true);
        for a in atoms {
            and_into(&mut acc, &self.atom(role, a));
        }
        acc
    }

    /// The single formula a specification stands for: every case's precondition implies its
    /// rest, and a shared precondition implies the whole body.
    fn meaning(&self, s: &Specification) -> Bits {
        match s {
            Specification::Leaf(c) => self.implies(self.conj(Role::Pre, &c.pre), self.conj(Role::Rest, &c.rest)),
            Specification::Disjunction(alts) => {
                let mut acc = self.constant(true);
                for x in alts {
                    and_into(&mut acc, &self.meaning(x));
                }
                acc
            }
            Specification::Distrib { pre, body } => self.implies(self.conj(Role::Pre, pre), self.meaning(body)),
        }
    }

    fn implies(&self, p: Bits, q: Bits) -> Bits {
        let mut out = self.not(p);
        for (w, y) in out.iter_mut().zip(q) {
            *w |= y;
        }
        out
    }
}

fn and_into(acc: &mut Bits, x: &Bits) {
    for (w, y) in acc.iter_mut().zip(x) {
        *w &= y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Case;

    fn cases(cs: &[(&[&str], &[&str])]) -> Specification {
        Specification::from_cases(cs.iter().map(|(p, r)| Case::of(p, r)))
    }

    #[test]
    fn factoring_a_shared_atom_is_equivalent() {
        let flat = cases(&[(&["p", "a"], &["x"]), (&["p", "b"], &["y"])]);
        let nested = Specification::Disjunction(vec![Specification::distrib(
            AtomSet::of(&["p"]),
            cases(&[(&["a"], &["x"]), (&["b"], &["y"])]),
        )]);
        assert_eq!(prop_equiv(&flat, &nested), Ok(true));
    }

    #[test]
    fn dropping_a_pre_atom_is_not() {
        let a = cases(&[(&["p", "a"], &["x"])]);
        let b = cases(&[(&["a"], &["x"])]);
        assert_eq!(prop_equiv(&a, &b), Ok(false));
    }

    #[test]
    fn pre_and_rest_atoms_are_distinct() {
        let a = cases(&[(&["p"], &["p"])]);
        let b = cases(&[(&["p"], &[])]);
        assert_eq!(prop_equiv(&a, &b), Ok(false));
    }

    #[test]
    fn negation_and_constants() {
        let a = cases(&[(&["!!p", "true", "x == x"], &["!q"])]);
        let b = cases(&[(&["p"], &["!q", "!false"])]);
        assert_eq!(prop_equiv(&a, &b), Ok(true));
    }

    #[test]
    fn exhaustive_split_collapses() {
        let split = cases(&[(&["p"], &["q"]), (&["!p"], &["q"])]);
        assert_eq!(prop_equiv(&split, &cases(&[(&[], &["q"])])), Ok(true));
        assert_eq!(prop_equiv(&cases(&[(&["p"], &["q"])]), &cases(&[(&["p"], &["!q"])])), Ok(false));
    }

    #[test]
    fn limit_is_enforced() {
        let names: Vec<String> = (0..5).map(|i| format!("p{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let a = cases(&[(&refs, &[])]);
        assert_eq!(prop_equiv_with_limit(&a, &a, 4), Err(PropError::TooManyAtoms { count: 5, limit: 4 }));
    }
}
