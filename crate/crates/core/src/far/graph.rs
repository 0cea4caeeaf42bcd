//! Similarity graphs over cases and the rooted residual graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use thiserror::Error;

use super::relation::AtomEquivalence;
use crate::sp::{Budget, SpError};
use crate::spec::{AtomSet, Case, Specification};

/// Shared-precondition weights between ordered pairs of distinct cases, indexed by case id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightTable {
    n: usize,
    table: Arc<[u32]>,
    /// Position of each case when all cases are sorted by text; breaks ties between pairs.
    rank: Arc<[u32]>,
}

impl WeightTable {
    /// Weight of `(l, r)`; zero for unknown ids.
    pub fn get(&self, l: usize, r: usize) -> usize {
        if l < self.n && r < self.n {
            self.table[l * self.n + r] as usize
        } else {
            0
        }
    }

    /// Where case `id` falls in text order; unknown ids sort last.
    pub fn text_rank(&self, id: usize) -> usize {
        self.rank.get(id).map_or(usize::MAX, |&r| r as usize)
    }
}

/// Cases as vertices, with an edge `(l, r)` whenever the pair shares a precondition atom.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseGraph {
    pub vertices: Vec<usize>,
    /// Sorted, without duplicates.
    pub edges: Vec<(usize, usize)>,
}

impl CaseGraph {
    pub fn has_edge(&self, l: usize, r: usize) -> bool {
        self.edges.binary_search(&(l, r)).is_ok()
    }
}

/// Number of atom pairs `(x, y)` in `pre(l) × pre(r)` with `x ∼ y`.
pub fn weight(l: &Case, r: &Case, rel: &dyn AtomEquivalence) -> usize {
    l.pre.iter().map(|x| r.pre.iter().filter(|y| rel.equivalent(x, y)).count()).sum()
}

/// Builds the similarity graph over cases `0..cases.len()`.
pub fn to_graph(cases: &[Case], rel: &dyn AtomEquivalence) -> (CaseGraph, WeightTable) {
    let ids: Vec<usize> = (0..cases.len()).collect();
    to_graph_over(&ids, &PairWeights::new(cases, rel))
}

/// Builds the similarity graph over a subset of cases using precomputed weights.
pub(crate) fn to_graph_over(ids: &[usize], pw: &PairWeights) -> (CaseGraph, WeightTable) {
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    let mut edges = Vec::new();
    for &l in &ids {
        for &r in &ids {
            if l != r && pw.get(l, r) > 0 {
                edges.push((l, r));
            }
        }
    }
    let w = WeightTable { n: pw.n, table: Arc::clone(&pw.table), rank: Arc::clone(&pw.rank) };
    (CaseGraph { vertices: ids, edges }, w)
}

/// All pairwise weights, computed once per FAR run.
///
/// Weights depend only on the two cases, so they stay valid while merging removes vertices.
pub(crate) struct PairWeights {
    n: usize,
    table: Arc<[u32]>,
    rank: Arc<[u32]>,
}

impl PairWeights {
    pub(crate) fn new(cases: &[Case], rel: &dyn AtomEquivalence) -> PairWeights {
        PairWeights::within(cases, rel, Budget::unlimited()).expect("unlimited budget")
    }

    pub(crate) fn within(cases: &[Case], rel: &dyn AtomEquivalence, budget: Budget) -> Result<PairWeights, SpError> {
        let n = cases.len();
        let mut table = vec![0u32; n * n];
        // with a class key, each pre-set becomes a multiset of class ids
        let keyed: Option<Vec<Vec<(usize, u32)>>> = {
            let mut ids: HashMap<String, usize> = HashMap::new();
            cases
                .iter()
                .map(|c| {
                    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
                    for a in c.pre.iter() {
                        let key = rel.class_key(a)?;
                        let next = ids.len();
                        let id = *ids.entry(key).or_insert(next);
                        *counts.entry(id).or_default() += 1;
                    }
                    Some(counts.into_iter().collect())
                })
                .collect()
        };
        for l in 0..n {
            if l % 256 == 0 {
                budget.check()?;
            }
            for r in 0..n {
                if l == r {
                    continue;
                }
                table[l * n + r] = match &keyed {
                    Some(k) => multiset_overlap(&k[l], &k[r]),
                    None => weight(&cases[l], &cases[r], rel) as u32,
                };
            }
        }
        let mut by_text: Vec<(String, usize)> = cases.iter().map(ToString::to_string).zip(0..).collect();
        by_text.sort_unstable();
        let mut rank = vec![0u32; n];
        for (k, (_, i)) in by_text.iter().enumerate() {
            rank[*i] = k as u32;
        }
        Ok(PairWeights { n, table: table.into(), rank: rank.into() })
    }

    pub(crate) fn get(&self, l: usize, r: usize) -> usize {
        self.table[l * self.n + r] as usize
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn text_rank(&self, id: usize) -> usize {
        self.rank[id] as usize
    }
}

fn multiset_overlap(a: &[(usize, u32)], b: &[(usize, u32)]) -> u32 {
    let (mut i, mut j, mut total) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                total += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    total
}

/// Undirected connected components, each sorted, in order of their smallest vertex.
pub fn connected_components(g: &CaseGraph) -> Vec<Vec<usize>> {
    let size = g.vertices.iter().chain(g.edges.iter().flat_map(|(l, r)| [l, r])).max().map_or(0, |m| m + 1);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
    let mut present = vec![false; size];
    for &v in &g.vertices {
        present[v] = true;
    }
    for &(l, r) in &g.edges {
        present[l] = true;
        present[r] = true;
        adj[l].push(r);
        adj[r].push(l);
    }
    let mut seen = vec![false; size];
    let mut comps = Vec::new();
    for start in (0..size).filter(|&v| present[v]) {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort();
    comps
}

/// Strongly connected components of the directed graph, normalized like
/// [`connected_components`]. Agrees with it whenever the edge set is symmetric.
pub fn strongly_connected_components(g: &CaseGraph) -> Vec<Vec<usize>> {
    let mut dg: DiGraphMap<usize, ()> = DiGraphMap::new();
    for &v in &g.vertices {
        dg.add_node(v);
    }
    for &(l, r) in &g.edges {
        dg.add_edge(l, r, ());
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&dg)
        .into_iter()
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    comps.sort();
    comps
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Root,
    Case(Case),
    /// Precondition atoms shared by every case below this node.
    Common(AtomSet),
}

/// The rooted graph FAR builds. Vertices can be removed while edges mentioning them remain;
/// such edges are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecGraph {
    nodes: Vec<Node>,
    /// Smallest input-case index below each node; orders siblings in the output.
    order: Vec<usize>,
    vertices: BTreeSet<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    root: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("residual graph has a cycle through node {0}")]
pub struct CycleError(pub NodeId);

impl Default for SpecGraph {
    fn default() -> Self {
        SpecGraph::new()
    }
}

impl SpecGraph {
    pub fn new() -> SpecGraph {
        SpecGraph { nodes: vec![Node::Root], order: vec![0], vertices: BTreeSet::from([0]), edges: Vec::new(), root: 0 }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn add_node(&mut self, node: Node, order: usize) -> NodeId {
        self.nodes.push(node);
        self.order.push(order);
        let id = self.nodes.len() - 1;
        self.vertices.insert(id);
        id
    }

    pub fn add_edge(&mut self, from: NodeId, to: NodeId) {
        self.edges.push((from, to));
    }

    pub fn remove_vertex(&mut self, v: NodeId) {
        self.vertices.remove(&v);
    }

    pub fn is_vertex(&self, v: NodeId) -> bool {
        self.vertices.contains(&v)
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v]
    }

    /// Live successors of `v`, in edge insertion order.
    pub fn children(&self, v: NodeId) -> Vec<NodeId> {
        self.edges.iter().filter(|(from, to)| *from == v && self.vertices.contains(to)).map(|(_, to)| *to).collect()
    }

    /// Reorders the edges out of `v` so children appear by their smallest input-case index.
    pub fn sort_children(&mut self, v: NodeId) {
        let order = &self.order;
        let mut out: Vec<(NodeId, NodeId)> = self.edges.iter().filter(|e| e.0 == v).copied().collect();
        out.sort_by_key(|e| order[e.1]);
        self.edges.retain(|e| e.0 != v);
        self.edges.extend(out);
    }

    /// True when every live vertex other than the root is a case hanging directly off the root.
    pub fn is_flat(&self) -> bool {
        self.vertices.iter().filter(|v| **v != self.root).all(|v| {
            matches!(self.nodes[*v], Node::Case(_)) && self.edges.iter().any(|e| e.0 == self.root && e.1 == *v)
        })
    }
}

/// Converts the subgraph below `v` into a specification: the disjunction of its children, with
/// common nodes distributing their atoms over their own subtrees.
pub fn to_spec(g: &SpecGraph, v: NodeId) -> Result<Specification, CycleError> {
    let mut on_path = BTreeSet::new();
    to_spec_inner(g, v, &mut on_path)
}

fn to_spec_inner(g: &SpecGraph, v: NodeId, on_path: &mut BTreeSet<NodeId>) -> Result<Specification, CycleError> {
    if !on_path.insert(v) {
        return Err(CycleError(v));
    }
    let mut alts = Vec::new();
    for u in g.children(v) {
        match g.node(u) {
            Node::Case(c) => alts.push(Specification::Leaf(c.clone())),
            Node::Common(atoms) => alts.push(Specification::distrib(atoms.clone(), to_spec_inner(g, u, on_path)?)),
            Node::Root => return Err(CycleError(u)),
        }
    }
    on_path.remove(&v);
    Ok(Specification::Disjunction(alts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::far::Lexical;

    #[test]
    fn one_shared_atom_gives_symmetric_edges() {
        let cases = [Case::of(&["p", "q"], &["x"]), Case::of(&["p", "r"], &["y"])];
        let (g, w) = to_graph(&cases, &Lexical);
        assert_eq!(w.get(0, 1), 1);
        assert_eq!(w.get(1, 0), 1);
        assert_eq!(g.edges, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn disjoint_pres_give_no_edges() {
        let cases = [Case::of(&["p"], &[]), Case::of(&["q"], &[])];
        let (g, _) = to_graph(&cases, &Lexical);
        assert!(g.edges.is_empty());
        assert_eq!(connected_components(&g), vec![vec![0], vec![1]]);
    }

    #[test]
    fn components() {
        assert!(connected_components(&CaseGraph::default()).is_empty());
        let g = CaseGraph { vertices: vec![0, 1, 2, 3], edges: vec![(0, 1), (1, 0), (2, 3), (3, 2)] };
        assert_eq!(connected_components(&g), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(strongly_connected_components(&g), connected_components(&g));
    }

    #[test]
    fn directed_edges_split_strong_components() {
        let g = CaseGraph { vertices: vec![0, 1], edges: vec![(0, 1)] };
        assert_eq!(connected_components(&g), vec![vec![0, 1]]);
        assert_eq!(strongly_connected_components(&g), vec![vec![0], vec![1]]);
    }

    #[test]
    fn one_recursion_step() {
        let mut g = SpecGraph::new();
        let common = g.add_node(Node::Common(AtomSet::of(&["a"])), 0);
        let l1 = g.add_node(Node::Case(Case::of(&["b"], &["x"])), 0);
        let l2 = g.add_node(Node::Case(Case::of(&["c"], &["y"])), 1);
        g.add_edge(g.root(), common);
        g.add_edge(common, l1);
        g.add_edge(common, l2);
        let s = to_spec(&g, g.root()).unwrap();
        let expected = Specification::Disjunction(vec![Specification::distrib(
            AtomSet::of(&["a"]),
            Specification::from_cases([Case::of(&["b"], &["x"]), Case::of(&["c"], &["y"])]),
        )]);
        assert_eq!(s, expected);
    }

    #[test]
    fn cycles_are_rejected() {
        let mut g = SpecGraph::new();
        let a = g.add_node(Node::Common(AtomSet::of(&["a"])), 0);
        let b = g.add_node(Node::Common(AtomSet::of(&["b"])), 0);
        g.add_edge(g.root(), a);
        g.add_edge(a, b);
        g.add_edge(b, a);
        assert!(to_spec(&g, g.root()).is_err());
    }
}
