//! Online Hide-and-Seek: the seeker searches `n` of `k` locations in
//! sequence, consecutive locations at most `kappa` apart, and loses `b(j)`
//! each time location `j` is searched.
//!
//! Layer `i` of the graph holds one vertex per location; an edge entering
//! `(i, j)` means "search `j` as move `i`". The edges entering the sink are
//! auxiliary and always carry loss zero.
//!
//! Under condition C1 the hider's losses are fixed for the whole stage, so a
//! searched location reveals its loss at every move. Under C2 the hider may
//! change the loss of locations not yet searched after each move, so a search
//! only reveals that location at the same or later moves.

use std::sync::Arc;

use rand::Rng;

use super::StageOutcome;
use crate::dag::{Dag, EdgeId, Path, VertexId};
use crate::error::{Error, Result};
use crate::side_obs::ObservationGraph;

/// Meaning of one graph edge. Indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsEdge {
    Move {
        index: usize,
        location: usize,
    },
    /// Edge from the last move at `location` into the sink.
    Auxiliary {
        location: usize,
    },
}

impl HsEdge {
    pub fn location(self) -> usize {
        match self {
            HsEdge::Move { location, .. } | HsEdge::Auxiliary { location } => location,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HsCondition {
    /// Losses fixed during the stage.
    #[default]
    C1,
    /// Losses of unsearched locations may change after every move.
    C2,
}

#[derive(Clone, Debug)]
pub struct HsGraph {
    k: usize,
    n: usize,
    kappa: usize,
    dag: Arc<Dag>,
    semantics: Vec<HsEdge>,
}

/// Builds the search graph for `k` locations, `n` moves and coherence
/// radius `kappa`. Edge ids follow tail vertex, then head vertex, layer by
/// layer.
pub fn build_hs_graph(k: usize, n: usize, kappa: usize) -> Result<HsGraph> {
    if n == 0 || n > k {
        return Err(Error::InvalidParameter(format!(
            "Hide-and-Seek needs 1 <= n <= k, got n={n}, k={k}"
        )));
    }
    if kappa >= k {
        return Err(Error::InvalidParameter(format!(
            "coherence radius must be below k={k}, got {kappa}"
        )));
    }
    let vertex_count = 2 + k * n;
    let source: VertexId = 0;
    let sink: VertexId = vertex_count - 1;
    let vertex = |layer: usize, j: usize| 1 + (layer - 1) * k + j;

    let mut edges = Vec::new();
    let mut semantics = Vec::new();
    for j in 0..k {
        edges.push((source, vertex(1, j)));
        semantics.push(HsEdge::Move {
            index: 0,
            location: j,
        });
    }
    for layer in 1..n {
        for j1 in 0..k {
            for j2 in j1.saturating_sub(kappa)..=(j1 + kappa).min(k - 1) {
                edges.push((vertex(layer, j1), vertex(layer + 1, j2)));
                semantics.push(HsEdge::Move {
                    index: layer,
                    location: j2,
                });
            }
        }
    }
    for j in 0..k {
        edges.push((vertex(n, j), sink));
        semantics.push(HsEdge::Auxiliary { location: j });
    }
    let dag = Dag::new(vertex_count, &edges, source, sink)?;
    Ok(HsGraph {
        k,
        n,
        kappa,
        dag: Arc::new(dag),
        semantics,
    })
}

/// Outcome of one round.
#[derive(Clone, Debug)]
pub struct HsRound {
    pub losses: Vec<f64>,
    pub obs_graph: ObservationGraph,
    /// Loss of each location as it applies to this round.
    pub location_losses: Vec<f64>,
    pub learner_loss: f64,
}

impl HsGraph {
    pub fn locations(&self) -> usize {
        self.k
    }

    pub fn moves(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn dag(&self) -> &Arc<Dag> {
        &self.dag
    }

    pub fn semantics(&self) -> &[HsEdge] {
        &self.semantics
    }

    pub fn edge(&self, e: EdgeId) -> HsEdge {
        self.semantics[e]
    }

    /// Upper bound `k` on the independence number of every round's
    /// observation graph.
    pub fn alpha_bound(&self) -> u64 {
        self.k as u64
    }

    /// Search sequence of a path.
    pub fn decode(&self, path: &Path) -> Vec<usize> {
        path.edges()
            .iter()
            .filter_map(|&e| match self.semantics[e] {
                HsEdge::Move { location, .. } => Some(location),
                HsEdge::Auxiliary { .. } => None,
            })
            .collect()
    }

    pub fn check_search(&self, search: &[usize]) -> Result<()> {
        if search.len() != self.n {
            return Err(Error::IncoherentSearch(format!(
                "expected {} moves, got {}",
                self.n,
                search.len()
            )));
        }
        if let Some(&bad) = search.iter().find(|&&j| j >= self.k) {
            return Err(Error::IncoherentSearch(format!(
                "location {bad} out of range for k={}",
                self.k
            )));
        }
        if let Some(w) = search.windows(2).find(|w| w[0].abs_diff(w[1]) > self.kappa) {
            return Err(Error::IncoherentSearch(format!(
                "move from {} to {} exceeds radius {}",
                w[0], w[1], self.kappa
            )));
        }
        Ok(())
    }

    /// Path of a coherent search sequence.
    pub fn encode(&self, search: &[usize]) -> Result<Path> {
        self.check_search(search)?;
        let mut edges = Vec::with_capacity(self.n + 1);
        let mut u = self.dag.source();
        for &j in search {
            let e = *self
                .dag
                .out_edges(u)
                .iter()
                .find(|&&e| self.semantics[e].location() == j)
                .expect("coherent moves have edges");
            edges.push(e);
            u = self.dag.edge(e).head;
        }
        edges.push(self.dag.out_edges(u)[0]);
        self.dag.path(edges)
    }

    /// Edge losses when location `j` costs `location_losses[j]`.
    pub fn losses(&self, location_losses: &[f64]) -> Vec<f64> {
        self.semantics
            .iter()
            .map(|s| match *s {
                HsEdge::Move { location, .. } => location_losses[location],
                HsEdge::Auxiliary { .. } => 0.0,
            })
            .collect()
    }

    /// Reveal relation for `condition`. It depends only on the graph.
    ///
    /// Edges of the same location reveal each other under C1 and reveal only
    /// later-or-equal moves under C2. The auxiliary edge into the sink counts
    /// as a final move at its location; its loss is always zero, so
    /// revealing it is trivially sound, and under C1 it joins its location's
    /// clique.
    pub fn observation_graph(&self, condition: HsCondition) -> ObservationGraph {
        let order = |s: HsEdge| match s {
            HsEdge::Move { index, .. } => index,
            HsEdge::Auxiliary { .. } => self.n,
        };
        let mut by_location = vec![Vec::new(); self.k];
        for (e, s) in self.semantics.iter().enumerate() {
            by_location[s.location()].push(e);
        }
        let revealers = self
            .semantics
            .iter()
            .map(|&target| {
                by_location[target.location()]
                    .iter()
                    .copied()
                    .filter(|&r| match condition {
                        HsCondition::C1 => true,
                        HsCondition::C2 => order(self.semantics[r]) <= order(target),
                    })
                    .collect()
            })
            .collect();
        ObservationGraph::from_revealers(self.semantics.len(), revealers)
            .expect("revealers index valid edges")
    }

    /// Plays `search` against the hider's `initial` location losses.
    ///
    /// Under C2, `respond` is called after every move with the move index,
    /// the set of locations searched so far and the current losses, which it
    /// may rewrite. A location's loss is frozen when it is first searched;
    /// never-searched locations take their final value. Under C1 `respond`
    /// is not called.
    pub fn round(
        &self,
        condition: HsCondition,
        search: &[usize],
        initial: &[f64],
        mut respond: impl FnMut(usize, &[bool], &mut [f64]),
    ) -> Result<HsRound> {
        self.check_search(search)?;
        check_location_losses(self.k, initial)?;
        let mut current = initial.to_vec();
        let location_losses = match condition {
            HsCondition::C1 => current,
            HsCondition::C2 => {
                let mut frozen: Vec<Option<f64>> = vec![None; self.k];
                let mut searched = vec![false; self.k];
                for (i, &j) in search.iter().enumerate() {
                    if frozen[j].is_none() {
                        frozen[j] = Some(current[j]);
                    }
                    searched[j] = true;
                    respond(i, &searched, &mut current);
                }
                check_location_losses(self.k, &current)?;
                frozen
                    .iter()
                    .zip(&current)
                    .map(|(f, &c)| f.unwrap_or(c))
                    .collect()
            }
        };
        let learner_loss = search.iter().map(|&j| location_losses[j]).sum();
        Ok(HsRound {
            losses: self.losses(&location_losses),
            obs_graph: self.observation_graph(condition),
            location_losses,
            learner_loss,
        })
    }
}

fn check_location_losses(k: usize, losses: &[f64]) -> Result<()> {
    if losses.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: losses.len(),
        });
    }
    if let Some((j, &loss)) = losses
        .iter()
        .enumerate()
        .find(|(_, l)| !(0.0..=1.0).contains(*l))
    {
        return Err(Error::InvalidParameter(format!(
            "loss {loss} of location {j} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// Hider strategies.
#[derive(Clone, Debug, PartialEq)]
pub enum HsAdversary {
    Fixed(Vec<f64>),
    /// Fresh uniform losses each stage, renormalized to sum to one.
    Random,
    /// Loss of a location grows with how often the seeker searched it in
    /// past stages. Under C2 the hider also raises unsearched locations
    /// after every move, by `bump` times their popularity.
    Adaptive {
        bump: f64,
    },
}

impl HsAdversary {
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            HsAdversary::Fixed(b) => check_location_losses(k, b),
            HsAdversary::Adaptive { bump } if !(0.0..=1.0).contains(bump) => Err(
                Error::InvalidParameter(format!("adaptive bump {bump} is outside [0, 1]")),
            ),
            _ => Ok(()),
        }
    }

    /// Location losses at the start of a stage, given past searches only.
    pub fn stage_losses<R: Rng + ?Sized>(
        &self,
        k: usize,
        history: &[Vec<usize>],
        rng: &mut R,
    ) -> Vec<f64> {
        match self {
            HsAdversary::Fixed(b) => b.clone(),
            HsAdversary::Random => {
                let raw: Vec<f64> = (0..k).map(|_| 1.0 - rng.gen::<f64>()).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / sum).collect()
            }
            HsAdversary::Adaptive { .. } => popularity(k, history),
        }
    }

    /// In-stage response under C2.
    pub fn respond(&self, popularity: &[f64], searched: &[bool], losses: &mut [f64]) {
        if let HsAdversary::Adaptive { bump } = self {
            for (j, loss) in losses.iter_mut().enumerate() {
                if !searched[j] {
                    *loss = (*loss + bump * popularity[j]).min(1.0);
                }
            }
        }
    }
}

/// Fraction of all past moves spent at each location; uniform when there is
/// no history.
fn popularity(k: usize, history: &[Vec<usize>]) -> Vec<f64> {
    let moves: usize = history.iter().map(Vec::len).sum();
    if moves == 0 {
        return vec![1.0 / k as f64; k];
    }
    let mut counts = vec![0.0; k];
    for &j in history.iter().flatten() {
        counts[j] += 1.0;
    }
    counts.into_iter().map(|c| c / moves as f64).collect()
}

/// A Hide-and-Seek environment.
#[derive(Clone, Debug)]
pub struct HsEnv {
    graph: HsGraph,
    condition: HsCondition,
    adversary: HsAdversary,
    history: Vec<Vec<usize>>,
}

impl HsEnv {
    pub fn new(graph: HsGraph, condition: HsCondition, adversary: HsAdversary) -> Result<Self> {
        adversary.validate(graph.k)?;
        Ok(Self {
            graph,
            condition,
            adversary,
            history: Vec::new(),
        })
    }

    pub fn graph(&self) -> &HsGraph {
        &self.graph
    }

    pub fn condition(&self) -> HsCondition {
        self.condition
    }

    pub fn stage<R: Rng + ?Sized>(&mut self, path: &Path, rng: &mut R) -> Result<StageOutcome> {
        let k = self.graph.k;
        let initial = self.adversary.stage_losses(k, &self.history, rng);
        let pop = popularity(k, &self.history);
        let search = self.graph.decode(path);
        let adversary = &self.adversary;
        let round =
            self.graph
                .round(self.condition, &search, &initial, |_, searched, losses| {
                    adversary.respond(&pop, searched, losses)
                })?;
        self.history.push(search);
        Ok(StageOutcome {
            losses: round.losses,
            obs_graph: round.obs_graph,
            path_loss: round.learner_loss,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::DEFAULT_ENUMERATION_CAP;
    use crate::mis::{independence_number, DEFAULT_EXACT_CAP};
    use std::collections::HashSet;

    /// Number of coherent sequences by a transfer-matrix recursion.
    fn coherent_sequences(k: usize, n: usize, kappa: usize) -> u64 {
        let mut ways = vec![1u64; k];
        for _ in 1..n {
            ways = (0..k)
                .map(|j2| {
                    (0..k)
                        .filter(|&j1| j1.abs_diff(j2) <= kappa)
                        .map(|j1| ways[j1])
                        .sum()
                })
                .collect();
        }
        ways.iter().sum()
    }

    #[test]
    fn counts_for_three_three_one() {
        let g = build_hs_graph(3, 3, 1).unwrap();
        assert_eq!(g.dag().vertex_count(), 11);
        assert_eq!(g.dag().edge_count(), 20);
        assert_eq!(coherent_sequences(3, 3, 1), 17);
        assert_eq!(g.dag().path_count(), Some(17));
        assert_eq!(g.dag().max_path_length(), 4);
        assert_eq!(g.alpha_bound(), 3);
    }

    #[test]
    fn location_one_edges_match_figure_numbering() {
        let g = build_hs_graph(3, 3, 1).unwrap();
        let ones: Vec<EdgeId> = (0..20)
            .filter(|&e| matches!(g.edge(e), HsEdge::Move { location: 0, .. }))
            .map(|e| e + 1)
            .collect();
        assert_eq!(ones, vec![1, 4, 6, 11, 13]);
        let obs = g.observation_graph(HsCondition::C1);
        for &a in &ones {
            for &b in &ones {
                assert!(obs.reveals(a - 1, b - 1));
            }
        }
    }

    #[test]
    fn extreme_radii() {
        for k in 1..=4 {
            for n in 1..=k {
                let full = build_hs_graph(k, n, k - 1).unwrap();
                assert_eq!(full.dag().path_count(), Some((k as u128).pow(n as u32)));
                let still = build_hs_graph(k, n, 0).unwrap();
                assert_eq!(still.dag().path_count(), Some(k as u128));
            }
        }
    }

    #[test]
    fn bijection_with_coherent_searches() {
        for k in 1..=4 {
            for n in 1..=k {
                for kappa in 0..k {
                    let g = build_hs_graph(k, n, kappa).unwrap();
                    let paths = g.dag().enumerate_paths(DEFAULT_ENUMERATION_CAP).unwrap();
                    assert_eq!(paths.len() as u64, coherent_sequences(k, n, kappa));
                    let mut seen = HashSet::new();
                    for p in &paths {
                        let s = g.decode(p);
                        g.check_search(&s).unwrap();
                        assert!(seen.insert(s.clone()));
                        assert_eq!(&g.encode(&s).unwrap(), p);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(build_hs_graph(3, 4, 1).is_err());
        assert!(build_hs_graph(3, 0, 1).is_err());
        assert!(build_hs_graph(3, 2, 3).is_err());
    }

    #[test]
    fn c1_round() {
        let g = build_hs_graph(3, 3, 1).unwrap();
        let b = [0.2, 0.7, 0.1];
        let round = g
            .round(HsCondition::C1, &[0, 0, 0], &b, |_, _, _| unreachable!())
            .unwrap();
        assert!((round.learner_loss - 0.6).abs() < 1e-12);
        let p = g.encode(&[0, 0, 0]).unwrap();
        assert!((p.total(&round.losses) - 0.6).abs() < 1e-12);
        assert!(round.obs_graph.is_symmetric());
        assert!(!round.obs_graph.satisfies_a0(g.dag()));
        for e in 0..20 {
            if let HsEdge::Auxiliary { .. } = g.edge(e) {
                assert_eq!(round.losses[e], 0.0);
            }
        }
    }

    #[test]
    fn incoherent_search_is_rejected() {
        let g = build_hs_graph(3, 3, 1).unwrap();
        let b = [0.2, 0.7, 0.1];
        assert!(matches!(
            g.round(HsCondition::C1, &[0, 2, 2], &b, |_, _, _| {}),
            Err(Error::IncoherentSearch(_))
        ));
        assert!(matches!(g.encode(&[0, 1]), Err(Error::IncoherentSearch(_))));
    }

    #[test]
    fn c2_reveals_forward_only() {
        let g = build_hs_graph(3, 3, 1).unwrap();
        let obs = g.observation_graph(HsCondition::C2);
        let first = g.encode(&[1, 1, 1]).unwrap();
        let (e1, e3) = (first.edges()[0], first.edges()[2]);
        assert!(obs.reveals(e1, e3));
        assert!(!obs.reveals(e3, e1));
        assert!(!obs.is_symmetric());
        assert_eq!(independence_number(&obs, DEFAULT_EXACT_CAP).value, 3);
        assert_eq!(
            independence_number(&g.observation_graph(HsCondition::C1), DEFAULT_EXACT_CAP).value,
            3
        );
    }

    #[test]
    fn c2_freezes_searched_locations() {
        let g = build_hs_graph(3, 3, 1).unwrap();
        let initial = [0.1, 0.2, 0.3];
        // The hider sets every location to 0.9 after each move; only
        // unsearched locations can still change.
        let round = g
            .round(HsCondition::C2, &[0, 1, 1], &initial, |_, _, losses| {
                losses.iter_mut().for_each(|l| *l = 0.9)
            })
            .unwrap();
        assert_eq!(round.location_losses[0], 0.1);
        assert_eq!(round.location_losses[1], 0.9);
        assert_eq!(round.location_losses[2], 0.9);
        assert!((round.learner_loss - (0.1 + 0.9 + 0.9)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_hider_targets_popular_locations() {
        let history = vec![vec![0, 0, 1]; 4];
        let adv = HsAdversary::Adaptive { bump: 0.5 };
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        let b = adv.stage_losses(3, &history, &mut rng);
        assert!((b[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((b[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(b[2], 0.0);
        let mut losses = b.clone();
        adv.respond(&b, &[true, false, false], &mut losses);
        assert_eq!(losses[0], b[0]);
        assert!((losses[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fixed_hider_comparator() {
        let g = build_hs_graph(3, 3, 1).unwrap();
        let losses = g.losses(&[0.2, 0.7, 0.1]);
        let (best, total) = g.dag().best_fixed_path(&losses).unwrap();
        assert_eq!(g.decode(&best), vec![2, 2, 2]);
        assert!((total - 0.3).abs() < 1e-12);
    }
}
