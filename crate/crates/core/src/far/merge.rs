use super::graph::{CaseGraph, Node, SpecGraph, WeightTable};
use super::relation::AtomEquivalence;
use crate::spec::{AtomSet, Case};

/// Merges one maximum-weight pair in every component with more than one case.
///
/// `v` holds the unmerged case ids (indices into `cases`). For each merged pair `(L, R)` the
/// shared atoms become a common node under the root with the reduced cases `L′`, `R′` below it,
/// and `L`, `R` leave `v`. Returns how many pairs were merged.
pub fn merge_scc(
    v: &mut Vec<usize>,
    w: &WeightTable,
    g: &CaseGraph,
    comps: &[Vec<usize>],
    residual: &mut SpecGraph,
    cases: &[Case],
    rel: &dyn AtomEquivalence,
) -> usize {
    let best = heaviest_edges(w, g, comps, cases.len());
    let mut merged = 0;
    for (l, r) in best.into_iter().flatten() {
        merge_pair(l, r, residual, cases, rel);
        v.retain(|x| *x != l && *x != r);
        merged += 1;
    }
    merged
}

/// Hangs a common node for the shared atoms of `l` and `r` off the root, with the reduced
/// cases below it.
pub(crate) fn merge_pair(l: usize, r: usize, residual: &mut SpecGraph, cases: &[Case], rel: &dyn AtomEquivalence) {
    let (left, right) = (&cases[l], &cases[r]);
    let c: AtomSet = left.pre.iter().filter(|x| right.pre.iter().any(|y| rel.equivalent(x, y))).cloned().collect();
    let rcmn: AtomSet = right.pre.iter().filter(|y| left.pre.iter().any(|x| rel.equivalent(x, y))).cloned().collect();
    let l_prime = Case { pre: left.pre.iter().filter(|a| !c.contains(a)).cloned().collect(), rest: left.rest.clone() };
    let r_prime =
        Case { pre: right.pre.iter().filter(|a| !rcmn.contains(a)).cloned().collect(), rest: right.rest.clone() };
    let common = residual.add_node(Node::Common(c), l.min(r));
    let ln = residual.add_node(Node::Case(l_prime), l);
    let rn = residual.add_node(Node::Case(r_prime), r);
    let (first, second) = if l < r { (ln, rn) } else { (rn, ln) };
    residual.add_edge(common, first);
    residual.add_edge(common, second);
    residual.add_edge(residual.root(), common);
}

/// For each component, the edge of maximum weight inside it; ties go to the pair whose case
/// texts sort first. Components without an internal edge get `None`.
fn heaviest_edges(w: &WeightTable, g: &CaseGraph, comps: &[Vec<usize>], n: usize) -> Vec<Option<(usize, usize)>> {
    let mut comp_of = vec![usize::MAX; n];
    for (k, comp) in comps.iter().enumerate().filter(|(_, c)| c.len() > 1) {
        for &i in comp {
            comp_of[i] = k;
        }
    }
    let key = |(l, r): (usize, usize)| (std::cmp::Reverse(w.get(l, r)), w.text_rank(l), w.text_rank(r));
    let mut best: Vec<Option<(usize, usize)>> = vec![None; comps.len()];
    for &(l, r) in &g.edges {
        let k = comp_of[l];
        if l == r || k == usize::MAX || comp_of[r] != k {
            continue;
        }
        if best[k].is_none_or(|b| key((l, r)) < key(b)) {
            best[k] = Some((l, r));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::far::graph::{connected_components, to_graph, to_spec};
    use crate::far::Lexical;
    use crate::spec::Specification;

    fn run(cases: &[Case]) -> (Vec<usize>, SpecGraph) {
        let (g, w) = to_graph(cases, &Lexical);
        let comps = connected_components(&g);
        let mut v: Vec<usize> = (0..cases.len()).collect();
        let mut residual = SpecGraph::new();
        merge_scc(&mut v, &w, &g, &comps, &mut residual, cases, &Lexical);
        (v, residual)
    }

    #[test]
    fn shared_atom_is_factored_out() {
        let cases = [Case::of(&["a", "b"], &["x"]), Case::of(&["a", "c"], &["y"])];
        let (v, residual) = run(&cases);
        assert!(v.is_empty());
        let expected = Specification::Disjunction(vec![Specification::distrib(
            AtomSet::of(&["a"]),
            Specification::from_cases([Case::of(&["b"], &["x"]), Case::of(&["c"], &["y"])]),
        )]);
        assert_eq!(to_spec(&residual, residual.root()).unwrap(), expected);
    }

    #[test]
    fn singleton_components_are_untouched() {
        let cases = [Case::of(&["a"], &["x"])];
        let (v, residual) = run(&cases);
        assert_eq!(v, vec![0]);
        assert!(residual.children(residual.root()).is_empty());
    }

    #[test]
    fn heaviest_pair_goes_first() {
        let cases =
            [Case::of(&["a", "b", "c"], &["x"]), Case::of(&["a", "b", "d"], &["y"]), Case::of(&["d", "e"], &["z"])];
        let (v, residual) = run(&cases);
        assert_eq!(v, vec![2]);
        let s = to_spec(&residual, residual.root()).unwrap();
        let expected = Specification::Disjunction(vec![Specification::distrib(
            AtomSet::of(&["a", "b"]),
            Specification::from_cases([Case::of(&["c"], &["x"]), Case::of(&["d"], &["y"])]),
        )]);
        assert_eq!(s, expected);
    }

    #[test]
    fn ties_resolve_by_case_text() {
        // all three pairs share exactly `s`
        let cases = [Case::of(&["s", "z"], &[]), Case::of(&["s", "m"], &[]), Case::of(&["s", "a"], &[])];
        let (v, _) = run(&cases);
        // "<s, a ; >" < "<s, m ; >" < "<s, z ; >": cases 2 and 1 merge
        assert_eq!(v, vec![0]);
    }
}
