//! Independence number of an observation graph's undirected skeleton.
//!
//! Exact branch and bound on `u128` bitsets for graphs up to 128 vertices,
//! pruned by a greedy clique-cover bound. Above the cap only the clique-cover
//! upper bound is reported.

use crate::side_obs::ObservationGraph;

/// Default vertex cap for the exact search.
pub const DEFAULT_EXACT_CAP: usize = 64;
const BITSET_LIMIT: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndependenceNumber {
    pub value: usize,
    /// `false` when `value` is only an upper bound.
    pub exact: bool,
}

/// Maximum independent set size of the skeleton of `obs`, ignoring arc
/// directions and self-loops. Exact when the edge count is at most
/// `exact_cap` (clamped to 128).
pub fn independence_number(obs: &ObservationGraph, exact_cap: usize) -> IndependenceNumber {
    let size = obs.edge_count();
    if size == 0 {
        return IndependenceNumber {
            value: 0,
            exact: true,
        };
    }
    let neighbours = skeleton(obs);
    if size <= exact_cap.min(BITSET_LIMIT) {
        let adj: Vec<u128> = neighbours
            .iter()
            .map(|list| list.iter().fold(0u128, |acc, &v| acc | 1 << v))
            .collect();
        let all = if size == BITSET_LIMIT {
            u128::MAX
        } else {
            (1u128 << size) - 1
        };
        let mut best = 0;
        branch(&adj, all, 0, &mut best);
        IndependenceNumber {
            value: best,
            exact: true,
        }
    } else {
        IndependenceNumber {
            value: clique_cover_size(&neighbours),
            exact: false,
        }
    }
}

fn skeleton(obs: &ObservationGraph) -> Vec<Vec<usize>> {
    let size = obs.edge_count();
    let mut neighbours = vec![Vec::new(); size];
    for to in 0..size {
        for &from in obs.revealers(to) {
            if from != to {
                neighbours[to].push(from);
                neighbours[from].push(to);
            }
        }
    }
    for list in &mut neighbours {
        list.sort_unstable();
        list.dedup();
    }
    neighbours
}

fn branch(adj: &[u128], candidates: u128, size: usize, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + cover_bound(adj, candidates) <= *best {
        return;
    }
    let mut min_v = 0;
    let mut min_deg = u32::MAX;
    let mut max_v = 0;
    let mut max_deg = 0;
    for v in bits(candidates) {
        let deg = (adj[v] & candidates).count_ones();
        if deg < min_deg {
            min_deg = deg;
            min_v = v;
        }
        if deg >= max_deg {
            max_deg = deg;
            max_v = v;
        }
    }
    // Some maximum independent set contains any vertex of degree <= 1.
    if min_deg <= 1 {
        branch(adj, candidates & !(adj[min_v] | 1 << min_v), size + 1, best);
        return;
    }
    branch(adj, candidates & !(adj[max_v] | 1 << max_v), size + 1, best);
    branch(adj, candidates & !(1 << max_v), size, best);
}

/// Number of cliques in a greedy clique partition of `candidates`.
fn cover_bound(adj: &[u128], mut candidates: u128) -> usize {
    let mut cliques = 0;
    while candidates != 0 {
        let v = candidates.trailing_zeros() as usize;
        let mut clique = 1u128 << v;
        let mut common = adj[v] & candidates;
        while common != 0 {
            let w = common.trailing_zeros() as usize;
            clique |= 1 << w;
            common &= adj[w];
        }
        candidates &= !clique;
        cliques += 1;
    }
    cliques
}

fn clique_cover_size(neighbours: &[Vec<usize>]) -> usize {
    let mut covered = vec![false; neighbours.len()];
    let mut cliques = 0;
    for v in 0..neighbours.len() {
        if covered[v] {
            continue;
        }
        covered[v] = true;
        let mut clique = vec![v];
        for &w in &neighbours[v] {
            if !covered[w]
                && clique
                    .iter()
                    .all(|&c| neighbours[w].binary_search(&c).is_ok())
            {
                covered[w] = true;
                clique.push(w);
            }
        }
        cliques += 1;
    }
    cliques
}

fn bits(mut set: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if set == 0 {
            None
        } else {
            let v = set.trailing_zeros() as usize;
            set &= set - 1;
            Some(v)
        }
    })
}
