use crate::lang::{BinOp, Expr};
use crate::spec::{AtomSet, Specification};

/// The specification as one postcondition: alternatives are conjoined, and each precondition,
/// read in the pre-state through `old`, implies what it guards.
pub fn tr(spec: &Specification) -> Expr {
    match spec {
        Specification::Leaf(c) => guard(&c.pre, conj(&c.rest)),
        Specification::Distrib { pre, body } => guard(pre, tr(body)),
        Specification::Disjunction(alts) => Expr::conjunction(alts.iter().map(tr)),
    }
}

fn conj(atoms: &AtomSet) -> Expr {
    Expr::conjunction(atoms.iter().map(|a| a.expr().clone()))
}

fn guard(pre: &AtomSet, then: Expr) -> Expr {
    if pre.is_empty() {
        then
    } else {
        Expr::bin(BinOp::Implies, Expr::Old(Box::new(conj(pre))), then)
    }
}

/// [`tr`] as text, one top-level conjunct per line.
pub fn emit_tr(spec: &Specification) -> String {
    let parts: Vec<Expr> = match spec {
        Specification::Disjunction(alts) if alts.len() > 1 => alts.iter().map(tr).collect(),
        other => vec![tr(other)],
    };
    let mut text = if parts.len() == 1 {
        parts[0].to_string()
    } else {
        let lines: Vec<String> = parts.iter().map(|p| format!("({p})")).collect();
        lines.join("\n&& ")
    };
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Case;

    #[test]
    fn single_case() {
        let s = Specification::from_cases([Case::of(&["p"], &["q"])]);
        assert_eq!(emit_tr(&s), "old(p) ==> q\n");
    }

    #[test]
    fn cases_are_conjoined() {
        let s = Specification::from_cases([
            Case::of(&["a < b"], &["\\result == -1"]),
            Case::of(&["!(a < b)", "a > b"], &["\\result == 1"]),
            Case::of(&["!(a < b)", "!(a > b)"], &["\\result == 0"]),
        ]);
        assert_eq!(
            emit_tr(&s),
            "(old(a < b) ==> \\result == -1)\n&& (old(!(a < b) && a > b) ==> \\result == 1)\n&& (old(!(a < b) && !(a > b)) ==> \\result == 0)\n"
        );
    }

    #[test]
    fn distributed_pre_guards_the_body() {
        let s = Specification::distrib(
            AtomSet::of(&["a"]),
            Specification::from_cases([Case::of(&["c1"], &["x"]), Case::of(&["c2"], &["y"])]),
        );
        assert_eq!(tr(&s).to_string(), "old(a) ==> (old(c1) ==> x) && (old(c2) ==> y)");
    }

    #[test]
    fn empty_parts() {
        assert_eq!(tr(&Specification::from_cases([Case::of(&[], &["q"])])).to_string(), "q");
        assert_eq!(tr(&Specification::from_cases([Case::of(&["p"], &[])])).to_string(), "old(p) ==> true");
    }
}
