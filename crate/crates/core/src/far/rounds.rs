//! The merge rounds of [`far`](super::far) for symmetric relations, without rebuilding the
//! similarity graph every round.
//!
//! Each round still computes the connected components of the unmerged cases and merges the
//! heaviest pair of each, exactly as the graph-per-round loop does. Two things are kept across
//! rounds instead: adjacency as bitsets, so components cost `O(n²/64)`, and a single list of all
//! edges sorted by merge priority, so the heaviest live edge of a component is the first one met.

use super::graph::PairWeights;
use super::merge::merge_pair;
use super::relation::AtomEquivalence;
use super::SpecGraph;
use crate::sp::{Budget, SpError};
use crate::spec::Case;

const WORD: usize = 64;

struct Bits {
    words: usize,
    rows: Vec<u64>,
}

impl Bits {
    fn new(n: usize) -> Bits {
        let words = n.div_ceil(WORD);
        Bits { words, rows: vec![0; words * n] }
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.words..(v + 1) * self.words]
    }

    fn set(&mut self, v: usize, u: usize) {
        self.rows[v * self.words + u / WORD] |= 1 << (u % WORD);
    }
}

/// Runs merge rounds until no component has two cases; returns the unmerged case ids.
pub(crate) fn merge_rounds(
    cases: &[Case],
    pw: &PairWeights,
    residual: &mut SpecGraph,
    rel: &dyn AtomEquivalence,
    budget: Budget,
) -> Result<Vec<usize>, SpError> {
    let n = pw.len();
    let mut adj = Bits::new(n);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for l in 0..n {
        if l % 256 == 0 {
            budget.check()?;
        }
        for r in 0..n {
            if l != r && pw.get(l, r) > 0 {
                adj.set(l, r);
                edges.push((l as u32, r as u32));
            }
        }
    }
    let key = |&(l, r): &(u32, u32)| {
        let (l, r) = (l as usize, r as usize);
        (std::cmp::Reverse(pw.get(l, r)), pw.text_rank(l), pw.text_rank(r))
    };
    edges.sort_unstable_by_key(key);

    let mut alive = vec![0u64; n.div_ceil(WORD)];
    for v in 0..n {
        alive[v / WORD] |= 1 << (v % WORD);
    }
    let is_alive = |alive: &[u64], v: usize| alive[v / WORD] & (1 << (v % WORD)) != 0;
    let mut comp_of = vec![usize::MAX; n];
    // edges before `head` are all dead; the list is compacted whenever a quarter of the
    // vertices alive at the last compaction have been merged away
    let mut head = 0;
    let mut live = n;
    let mut live_at_compaction = n;
    loop {
        budget.check()?;
        if 4 * live <= 3 * live_at_compaction {
            edges.retain(|&(l, r)| is_alive(&alive, l as usize) && is_alive(&alive, r as usize));
            head = 0;
            live_at_compaction = live;
        }
        while head < edges.len()
            && !(is_alive(&alive, edges[head].0 as usize) && is_alive(&alive, edges[head].1 as usize))
        {
            head += 1;
        }
        if head == edges.len() {
            break;
        }
        // components in order of their smallest member
        let mut unseen = alive.clone();
        let mut sizes: Vec<usize> = Vec::new();
        for start in 0..n {
            if !is_alive(&unseen, start) {
                continue;
            }
            let k = sizes.len();
            unseen[start / WORD] &= !(1 << (start % WORD));
            let mut stack = vec![start];
            let mut size = 0;
            while let Some(v) = stack.pop() {
                comp_of[v] = k;
                size += 1;
                for (w, (row, free)) in adj.row(v).iter().zip(unseen.iter_mut()).enumerate() {
                    let mut fresh = row & *free;
                    *free &= !fresh;
                    while fresh != 0 {
                        stack.push(w * WORD + fresh.trailing_zeros() as usize);
                        fresh &= fresh - 1;
                    }
                }
            }
            sizes.push(size);
        }
        let wanted = sizes.iter().filter(|s| **s > 1).count();
        let mut best: Vec<Option<(usize, usize)>> = vec![None; sizes.len()];
        let mut found = 0;
        for &(l, r) in &edges[head..] {
            if !(is_alive(&alive, l as usize) && is_alive(&alive, r as usize)) {
                continue;
            }
            let k = comp_of[l as usize];
            if best[k].is_none() {
                best[k] = Some((l as usize, r as usize));
                found += 1;
                if found == wanted {
                    break;
                }
            }
        }
        for (l, r) in best.into_iter().flatten() {
            merge_pair(l, r, residual, cases, rel);
            alive[l / WORD] &= !(1 << (l % WORD));
            alive[r / WORD] &= !(1 << (r % WORD));
            live -= 2;
        }
    }
    Ok((0..n).filter(|&v| is_alive(&alive, v)).collect())
}
