//! Flatten-and-recombine: factor shared precondition atoms out of overlapping cases.
//!
//! Each round builds a graph over the unmerged cases, with an edge between two cases whose
//! preconditions share an atom, and merges the heaviest pair of every connected component into
//! a common node. Merged cases leave the pool. When no component has two cases left, the
//! remaining cases hang directly off the root and the tree is read back as a specification.

mod graph;
mod merge;
mod relation;
mod rounds;

pub use graph::{
    connected_components, strongly_connected_components, to_graph, to_spec, weight, CaseGraph, CycleError, Node,
    NodeId, SpecGraph, WeightTable,
};
pub use merge::merge_scc;
pub use relation::{AtomEquivalence, Lexical};

use graph::{to_graph_over, PairWeights};

use crate::sp::{Budget, SpError};
use crate::spec::{Case, NotNormalForm, Specification};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FarError {
    #[error(transparent)]
    NotNormalForm(#[from] NotNormalForm),
    #[error(transparent)]
    Budget(#[from] SpError),
}

/// Compacts a specification in normal form.
pub fn far(spec: &Specification, rel: &dyn AtomEquivalence) -> Result<Specification, NotNormalForm> {
    match far_within(spec, rel, Budget::unlimited()) {
        Ok(s) => Ok(s),
        Err(FarError::NotNormalForm(e)) => Err(e),
        Err(FarError::Budget(_)) => unreachable!("unlimited budget"),
    }
}

/// [`far`] with a wall-clock budget checked once per round.
pub fn far_within(spec: &Specification, rel: &dyn AtomEquivalence, budget: Budget) -> Result<Specification, FarError> {
    let cases = spec.cases()?;
    let weights = PairWeights::within(&cases, rel, budget)?;
    let mut residual = SpecGraph::new();
    let v = if rel.is_symmetric() {
        rounds::merge_rounds(&cases, &weights, &mut residual, rel, budget)?
    } else {
        graph_rounds(&cases, &weights, &mut residual, rel, budget)?
    };
    Ok(finish(residual, &cases, &v))
}

/// [`far`] rebuilding the similarity graph and its components from scratch every round.
/// Slower, and the definition the default path is tested against.
pub fn far_reference(spec: &Specification, rel: &dyn AtomEquivalence) -> Result<Specification, NotNormalForm> {
    let cases = spec.cases()?;
    let weights = PairWeights::new(&cases, rel);
    let mut residual = SpecGraph::new();
    let v = graph_rounds(&cases, &weights, &mut residual, rel, Budget::unlimited()).expect("unlimited budget");
    Ok(finish(residual, &cases, &v))
}

fn graph_rounds(
    cases: &[Case],
    weights: &PairWeights,
    residual: &mut SpecGraph,
    rel: &dyn AtomEquivalence,
    budget: Budget,
) -> Result<Vec<usize>, SpError> {
    let mut v: Vec<usize> = (0..cases.len()).collect();
    loop {
        budget.check()?;
        let (g, w) = to_graph_over(&v, weights);
        let comps = if rel.is_symmetric() { connected_components(&g) } else { strongly_connected_components(&g) };
        let before = v.len();
        let merged = merge_scc(&mut v, &w, &g, &comps, residual, cases, rel);
        if merged == 0 {
            return Ok(v);
        }
        debug_assert_eq!(v.len(), before - 2 * merged, "each merge removes two cases");
    }
}

/// Hangs the unmerged cases off the root and reads the tree back.
fn finish(mut residual: SpecGraph, cases: &[Case], unmerged: &[usize]) -> Specification {
    for &i in unmerged {
        let n = residual.add_node(Node::Case(cases[i].clone()), i);
        residual.add_edge(residual.root(), n);
    }
    residual.sort_children(residual.root());
    to_spec(&residual, residual.root()).expect("far builds a tree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{AtomSet, Case};

    #[test]
    fn single_case_is_unchanged() {
        let s = Specification::from_cases([Case::of(&["p"], &["q"])]);
        assert_eq!(far(&s, &Lexical).unwrap(), s);
    }

    #[test]
    fn disjoint_pres_stay_flat() {
        let s = Specification::from_cases([Case::of(&["p"], &["x"]), Case::of(&["q"], &["y"]), Case::of(&["r"], &[])]);
        assert_eq!(far(&s, &Lexical).unwrap(), s);
    }

    #[test]
    fn cmp_gets_the_nested_shape() {
        let s = Specification::from_cases([
            Case::of(&["a < b"], &["\\result == -1"]),
            Case::of(&["!(a < b)", "a > b"], &["\\result == 1"]),
            Case::of(&["!(a < b)", "!(a > b)"], &["\\result == 0"]),
        ]);
        let expected = Specification::Disjunction(vec![
            Specification::Leaf(Case::of(&["a < b"], &["\\result == -1"])),
            Specification::distrib(
                AtomSet::of(&["!(a < b)"]),
                Specification::from_cases([
                    Case::of(&["a > b"], &["\\result == 1"]),
                    Case::of(&["!(a > b)"], &["\\result == 0"]),
                ]),
            ),
        ]);
        assert_eq!(far(&s, &Lexical).unwrap(), expected);
    }

    #[test]
    fn pre_contained_in_common_leaves_empty_pre() {
        let s = Specification::from_cases([Case::of(&["p"], &["x"]), Case::of(&["p", "q"], &["y"])]);
        let out = far(&s, &Lexical).unwrap();
        let mut pres = Vec::new();
        out.for_each_leaf(&mut |c| pres.push(c.pre.len()));
        assert_eq!(pres, vec![0, 1]);
    }

    #[test]
    fn rejects_distributed_input() {
        let s = Specification::distrib(AtomSet::of(&["p"]), Specification::from_cases([Case::of(&["q"], &[])]));
        assert!(far(&s, &Lexical).is_err());
    }
}
