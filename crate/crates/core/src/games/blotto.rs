//! Online Colonel Blotto: `k` indivisible troops over `n` battlefields.
//!
//! The learner's allocations are the paths of a layered graph in which
//! vertex `(i, j)` means "`j` troops used on the first `i` battlefields"; the
//! edge `(i, j1) -> (i + 1, j2)` allocates `j2 - j1` troops to battlefield
//! `i + 1`. Battlefield `i` is worth `b(i)`, values summing to one. The
//! learner loses `b(i)` on a battlefield where it has fewer troops than the
//! adversary, `b(i) / 2` on a tie and nothing otherwise.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;

use super::StageOutcome;
use crate::dag::{Dag, EdgeId, Path, VertexId};
use crate::error::{Error, Result};
use crate::side_obs::ObservationGraph;

/// Meaning of one graph edge: `allocation` troops on `battlefield`
/// (0-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CbEdge {
    pub battlefield: usize,
    pub allocation: u32,
}

#[derive(Clone, Debug)]
pub struct CbGraph {
    k: u32,
    n: usize,
    dag: Arc<Dag>,
    semantics: Vec<CbEdge>,
    /// Edge ids per battlefield.
    by_battlefield: Vec<Vec<EdgeId>>,
}

/// Builds the allocation graph for `k` troops and `n` battlefields.
///
/// Edge ids are assigned layer by layer, by tail vertex and then by head
/// vertex, both left to right.
pub fn build_cb_graph(k: u32, n: usize) -> Result<CbGraph> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "Colonel Blotto needs k >= 1 and n >= 1, got k={k}, n={n}"
        )));
    }
    let width = k as usize + 1;
    let vertex_count = 2 + width * (n - 1);
    let source: VertexId = 0;
    let sink: VertexId = vertex_count - 1;
    let vertex = |layer: usize, j: u32| 1 + (layer - 1) * width + j as usize;

    let mut edges = Vec::new();
    let mut semantics = Vec::new();
    if n == 1 {
        edges.push((source, sink));
        semantics.push(CbEdge {
            battlefield: 0,
            allocation: k,
        });
    } else {
        for j in 0..=k {
            edges.push((source, vertex(1, j)));
            semantics.push(CbEdge {
                battlefield: 0,
                allocation: j,
            });
        }
        for layer in 1..n - 1 {
            for j1 in 0..=k {
                for j2 in j1..=k {
                    edges.push((vertex(layer, j1), vertex(layer + 1, j2)));
                    semantics.push(CbEdge {
                        battlefield: layer,
                        allocation: j2 - j1,
                    });
                }
            }
        }
        for j in 0..=k {
            edges.push((vertex(n - 1, j), sink));
            semantics.push(CbEdge {
                battlefield: n - 1,
                allocation: k - j,
            });
        }
    }
    let dag = Dag::new(vertex_count, &edges, source, sink)?;
    let mut by_battlefield = vec![Vec::new(); n];
    for (e, s) in semantics.iter().enumerate() {
        by_battlefield[s.battlefield].push(e);
    }
    Ok(CbGraph {
        k,
        n,
        dag: Arc::new(dag),
        semantics,
        by_battlefield,
    })
}

/// Outcome of one round for a given adversary allocation.
#[derive(Clone, Debug)]
pub struct CbRound {
    pub losses: Vec<f64>,
    pub obs_graph: ObservationGraph,
    /// Game-rule loss of the learner's allocation.
    pub learner_loss: f64,
}

impl CbGraph {
    pub fn troops(&self) -> u32 {
        self.k
    }

    pub fn battlefields(&self) -> usize {
        self.n
    }

    pub fn dag(&self) -> &Arc<Dag> {
        &self.dag
    }

    pub fn semantics(&self) -> &[CbEdge] {
        &self.semantics
    }

    pub fn edge(&self, e: EdgeId) -> CbEdge {
        self.semantics[e]
    }

    /// Upper bound `n (k + 1)` on the independence number of every round's
    /// observation graph.
    pub fn alpha_bound(&self) -> u64 {
        self.n as u64 * (self.k as u64 + 1)
    }

    /// Allocation vector of a path.
    pub fn decode(&self, path: &Path) -> Vec<u32> {
        let mut alloc = vec![0; self.n];
        for &e in path.edges() {
            let s = self.semantics[e];
            alloc[s.battlefield] = s.allocation;
        }
        alloc
    }

    /// Path of an allocation vector.
    pub fn encode(&self, allocation: &[u32]) -> Result<Path> {
        self.check_allocation(allocation)?;
        let mut used = 0u32;
        let mut edges = Vec::with_capacity(self.n);
        let mut u = self.dag.source();
        for (i, &a) in allocation.iter().enumerate() {
            let e = *self
                .dag
                .out_edges(u)
                .iter()
                .find(|&&e| self.semantics[e].allocation == a)
                .ok_or_else(|| {
                    Error::BadAllocation(format!("no edge allocating {a} on battlefield {i}"))
                })?;
            used += a;
            edges.push(e);
            u = self.dag.edge(e).head;
        }
        debug_assert_eq!(used, self.k);
        self.dag.path(edges)
    }

    /// Checks that `allocation` is a vector of `n` counts summing to `k`.
    pub fn check_allocation(&self, allocation: &[u32]) -> Result<()> {
        if allocation.len() != self.n {
            return Err(Error::BadAllocation(format!(
                "expected {} battlefields, got {}",
                self.n,
                allocation.len()
            )));
        }
        let total: u64 = allocation.iter().map(|&a| a as u64).sum();
        if total != self.k as u64 {
            return Err(Error::BadAllocation(format!(
                "allocation {allocation:?} uses {total} troops, expected {}",
                self.k
            )));
        }
        Ok(())
    }

    fn check_values(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: values.len(),
            });
        }
        let sum: f64 = values.iter().sum();
        if values.iter().any(|b| b.is_nan() || *b < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "battlefield values must be nonnegative and sum to 1, got {values:?}"
            )));
        }
        Ok(())
    }

    /// Per-edge losses against `adversary` with battlefield `values`.
    pub fn losses(&self, adversary: &[u32], values: &[f64]) -> Vec<f64> {
        self.semantics
            .iter()
            .map(|s| {
                battle_loss(
                    s.allocation,
                    adversary[s.battlefield],
                    values[s.battlefield],
                )
            })
            .collect()
    }

    /// Reveal relation induced by the adversary's allocation.
    ///
    /// Within a battlefield, playing `a` against the adversary's `a'`
    /// reveals allocation `c` when the outcome of `c` is implied: a win
    /// (`a > a'`) implies wins for every `c >= a`, a loss (`a < a'`) implies
    /// losses for every `c <= a`, and a tie pins `a'` exactly. Battlefields
    /// never reveal each other.
    pub fn observation_graph(&self, adversary: &[u32]) -> ObservationGraph {
        let mut revealers = vec![Vec::new(); self.semantics.len()];
        for (battlefield, edges) in self.by_battlefield.iter().enumerate() {
            let opp = adversary[battlefield];
            for &target in edges {
                let c = self.semantics[target].allocation;
                revealers[target] = edges
                    .iter()
                    .copied()
                    .filter(|&r| {
                        let a = self.semantics[r].allocation;
                        match a.cmp(&opp) {
                            std::cmp::Ordering::Greater => c >= a,
                            std::cmp::Ordering::Equal => true,
                            std::cmp::Ordering::Less => c <= a,
                        }
                    })
                    .collect();
            }
        }
        ObservationGraph::from_revealers(self.semantics.len(), revealers)
            .expect("revealers index valid edges")
    }

    /// Loss vector, observation graph and the learner's loss for one round.
    pub fn round(&self, learner: &[u32], adversary: &[u32], values: &[f64]) -> Result<CbRound> {
        self.check_allocation(learner)?;
        self.check_allocation(adversary)?;
        self.check_values(values)?;
        Ok(CbRound {
            losses: self.losses(adversary, values),
            obs_graph: self.observation_graph(adversary),
            learner_loss: allocation_loss(learner, adversary, values),
        })
    }
}

fn battle_loss(mine: u32, theirs: u32, value: f64) -> f64 {
    match mine.cmp(&theirs) {
        std::cmp::Ordering::Less => value,
        std::cmp::Ordering::Equal => value / 2.0,
        std::cmp::Ordering::Greater => 0.0,
    }
}

/// Game-rule loss of allocation `mine` against `theirs`.
pub fn allocation_loss(mine: &[u32], theirs: &[u32], values: &[f64]) -> f64 {
    mine.iter()
        .zip(theirs)
        .zip(values)
        .map(|((&a, &b), &v)| battle_loss(a, b, v))
        .sum()
}

/// How battlefield values are chosen each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ValuesMode {
    /// `1 / n` everywhere.
    #[default]
    Uniform,
    /// Fresh positive values each round, renormalized to sum to one.
    Random,
}

impl ValuesMode {
    pub fn draw<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Vec<f64> {
        match self {
            ValuesMode::Uniform => vec![1.0 / n as f64; n],
            ValuesMode::Random => {
                // 1 - U lies in (0, 1].
                let raw: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / sum).collect()
            }
        }
    }
}

/// Adversary strategies for the Blotto game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CbAdversary {
    /// Uniform over all allocations.
    Uniform,
    Fixed(Vec<u32>),
    /// Plays the listed allocations in turn.
    Cyclic(Vec<Vec<u32>>),
    /// Maximizes the learner's expected loss against the empirical
    /// per-battlefield frequencies of the learner's past allocations.
    BestResponse,
}

impl CbAdversary {
    /// Checks fixed allocations against the game.
    pub fn validate(&self, graph: &CbGraph) -> Result<()> {
        match self {
            CbAdversary::Fixed(a) => graph.check_allocation(a),
            CbAdversary::Cyclic(list) if list.is_empty() => Err(Error::InvalidParameter(
                "cyclic adversary needs at least one allocation".into(),
            )),
            CbAdversary::Cyclic(list) => list.iter().try_for_each(|a| graph.check_allocation(a)),
            _ => Ok(()),
        }
    }

    /// The adversary's allocation at `stage` (from 1), given the learner's
    /// past allocations only.
    pub fn act<R: Rng + ?Sized>(
        &self,
        k: u32,
        n: usize,
        history: &[Vec<u32>],
        values: &[f64],
        stage: usize,
        rng: &mut R,
    ) -> Vec<u32> {
        match self {
            CbAdversary::Uniform => uniform_allocation(k, n, rng),
            CbAdversary::Fixed(a) => a.clone(),
            CbAdversary::Cyclic(list) => list[(stage - 1) % list.len()].clone(),
            CbAdversary::BestResponse if history.is_empty() => uniform_allocation(k, n, rng),
            CbAdversary::BestResponse => best_response(k, n, history, values),
        }
    }
}

/// Uniform draw from all allocations of `k` troops to `n` battlefields, by
/// placing `n - 1` bars among `k + n - 1` slots.
pub fn uniform_allocation<R: Rng + ?Sized>(k: u32, n: usize, rng: &mut R) -> Vec<u32> {
    let slots = k as usize + n - 1;
    let mut bars = sample(rng, slots, n - 1).into_vec();
    bars.sort_unstable();
    let mut alloc = Vec::with_capacity(n);
    let mut prev = 0usize;
    for &b in &bars {
        alloc.push((b - prev) as u32);
        prev = b + 1;
    }
    alloc.push((slots - prev) as u32);
    alloc
}

fn best_response(k: u32, n: usize, history: &[Vec<u32>], values: &[f64]) -> Vec<u32> {
    let width = k as usize + 1;
    let total = history.len() as f64;
    // gain[i][x]: learner's expected loss on battlefield i if we play x.
    let gain: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut freq = vec![0.0; width];
            for h in history {
                freq[h[i] as usize] += 1.0 / total;
            }
            let mut below = 0.0;
            (0..width)
                .map(|x| {
                    let g = values[i] * (below + 0.5 * freq[x]);
                    below += freq[x];
                    g
                })
                .collect()
        })
        .collect();
    // best[i][r]: max gain from battlefields i.. using exactly r troops.
    let mut best = vec![vec![f64::NEG_INFINITY; width]; n + 1];
    best[n][0] = 0.0;
    let mut choice = vec![vec![0u32; width]; n];
    for i in (0..n).rev() {
        for r in 0..width {
            for x in 0..=r {
                let cand = gain[i][x] + best[i + 1][r - x];
                if cand > best[i][r] {
                    best[i][r] = cand;
                    choice[i][r] = x as u32;
                }
            }
        }
    }
    let mut left = k as usize;
    (0..n)
        .map(|i| {
            let x = choice[i][left];
            left -= x as usize;
            x
        })
        .collect()
}

/// A Blotto environment: adversary, battlefield values and the learner's
/// history.
#[derive(Clone, Debug)]
pub struct CbEnv {
    graph: CbGraph,
    adversary: CbAdversary,
    values: ValuesMode,
    history: Vec<Vec<u32>>,
}

impl CbEnv {
    pub fn new(graph: CbGraph, adversary: CbAdversary, values: ValuesMode) -> Result<Self> {
        adversary.validate(&graph)?;
        Ok(Self {
            graph,
            adversary,
            values,
            history: Vec::new(),
        })
    }

    pub fn graph(&self) -> &CbGraph {
        &self.graph
    }

    /// Plays one stage against the learner's `path`.
    pub fn stage<R: Rng + ?Sized>(&mut self, path: &Path, rng: &mut R) -> Result<StageOutcome> {
        let (k, n) = (self.graph.k, self.graph.n);
        let values = self.values.draw(n, rng);
        let stage = self.history.len() + 1;
        let theirs = self.adversary.act(k, n, &self.history, &values, stage, rng);
        let mine = self.graph.decode(path);
        let round = self.graph.round(&mine, &theirs, &values)?;
        self.history.push(mine);
        Ok(StageOutcome {
            losses: round.losses,
            obs_graph: round.obs_graph,
            path_loss: round.learner_loss,
        })
    }
}
