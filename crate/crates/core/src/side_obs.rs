//! Observation graphs over edges and the reveal probability `q(e)`.
//!
//! An arc `a -> b` of an [`ObservationGraph`] means that playing a path
//! containing edge `a` reveals the loss of edge `b`. Every edge reveals
//! itself. `q(e)` is the probability that a path drawn from the current
//! weights reveals `e`; [`StageQ`] computes it with one weight-pushing pass
//! per revealer of `e`, masking each revealer after its paths are counted so
//! that a path containing several revealers contributes once.

use crate::dag::{edge_marginals, DEFAULT_ENUMERATION_CAP};
use crate::dag::{weight_push, weight_push_into, Dag, EdgeId, FlowTable, LogWeights, Path};
use crate::error::{Error, Result};
use crate::logspace::MASKED;
use crate::mis::{independence_number, IndependenceNumber};

/// Directed reveal relation over edge-vertices, self-loops always present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationGraph {
    revealers: Vec<Vec<EdgeId>>,
    revealed_by: Vec<Vec<EdgeId>>,
}

impl ObservationGraph {
    /// Builds the graph from per-edge revealer lists (in-neighbours).
    /// Self-loops are added, and lists are sorted and deduplicated.
    pub fn from_revealers(edge_count: usize, mut revealers: Vec<Vec<EdgeId>>) -> Result<Self> {
        if revealers.len() != edge_count {
            return Err(Error::DimensionMismatch {
                expected: edge_count,
                got: revealers.len(),
            });
        }
        for (e, list) in revealers.iter_mut().enumerate() {
            if let Some(&bad) = list.iter().find(|&&r| r >= edge_count) {
                return Err(Error::EdgeOutOfRange {
                    edge: bad,
                    edge_count,
                });
            }
            list.push(e);
            list.sort_unstable();
            list.dedup();
        }
        let mut revealed_by = vec![Vec::new(); edge_count];
        for (e, list) in revealers.iter().enumerate() {
            for &r in list {
                revealed_by[r].push(e);
            }
        }
        Ok(Self {
            revealers,
            revealed_by,
        })
    }

    /// Builds the graph from `(revealer, revealed)` arcs.
    pub fn from_arcs(
        edge_count: usize,
        arcs: impl IntoIterator<Item = (EdgeId, EdgeId)>,
    ) -> Result<Self> {
        let mut revealers = vec![Vec::new(); edge_count];
        for (from, to) in arcs {
            if to >= edge_count {
                return Err(Error::EdgeOutOfRange {
                    edge: to,
                    edge_count,
                });
            }
            revealers[to].push(from);
        }
        Self::from_revealers(edge_count, revealers)
    }

    /// Pure semi-bandit feedback.
    pub fn self_loops(edge_count: usize) -> Self {
        Self::from_revealers(edge_count, vec![Vec::new(); edge_count])
            .expect("self-loop graph is well formed")
    }

    /// Full information: every edge reveals every edge.
    pub fn complete(edge_count: usize) -> Self {
        let all: Vec<EdgeId> = (0..edge_count).collect();
        Self {
            revealers: vec![all.clone(); edge_count],
            revealed_by: vec![all; edge_count],
        }
    }

    pub fn edge_count(&self) -> usize {
        self.revealers.len()
    }

    /// Edges whose play reveals `e`, sorted, always including `e`.
    pub fn revealers(&self, e: EdgeId) -> &[EdgeId] {
        &self.revealers[e]
    }

    /// Edges revealed when `e` is played, sorted, always including `e`.
    pub fn revealed_by(&self, e: EdgeId) -> &[EdgeId] {
        &self.revealed_by[e]
    }

    pub fn reveals(&self, from: EdgeId, to: EdgeId) -> bool {
        self.revealers[to].binary_search(&from).is_ok()
    }

    /// Number of arcs, self-loops included.
    pub fn arc_count(&self) -> usize {
        self.revealers.iter().map(Vec::len).sum()
    }

    /// Sorted set of edges whose losses are revealed by playing `path`.
    pub fn revealed_set(&self, path: &Path) -> Vec<EdgeId> {
        let mut mark = vec![false; self.edge_count()];
        for &e in path.edges() {
            for &r in &self.revealed_by[e] {
                mark[r] = true;
            }
        }
        mark.iter()
            .enumerate()
            .filter_map(|(e, &m)| m.then_some(e))
            .collect()
    }

    /// True iff every arc has its reverse.
    pub fn is_symmetric(&self) -> bool {
        self.revealers
            .iter()
            .enumerate()
            .all(|(to, list)| list.iter().all(|&from| self.reveals(to, from)))
    }

    /// Whether no edge has two distinct revealers lying on a common path.
    pub fn satisfies_a0(&self, dag: &Dag) -> bool {
        let cooccur = Cooccurrence::new(dag);
        self.revealers.iter().all(|list| {
            list.iter()
                .enumerate()
                .all(|(i, &a)| list[i + 1..].iter().all(|&b| !cooccur.on_common_path(a, b)))
        })
    }

    /// Structure class and independence number in one report.
    pub fn diagnose(&self, dag: &Dag, exact_cap: usize) -> ObsDiagnostics {
        ObsDiagnostics {
            symmetric: self.is_symmetric(),
            satisfies_a0: self.satisfies_a0(dag),
            independence: independence_number(self, exact_cap),
        }
    }
}

/// Decides whether two edges appear together on some source-sink path.
///
/// Valid for validated DAGs, where every edge lies on some path: `a` and `b`
/// share a path iff one's head reaches the other's tail.
pub struct Cooccurrence<'a> {
    dag: &'a Dag,
    reach: crate::dag::Reachability,
}

impl<'a> Cooccurrence<'a> {
    pub fn new(dag: &'a Dag) -> Self {
        Self {
            dag,
            reach: dag.reachability(),
        }
    }

    pub fn on_common_path(&self, a: EdgeId, b: EdgeId) -> bool {
        if a == b {
            return true;
        }
        let (ea, eb) = (self.dag.edge(a), self.dag.edge(b));
        self.reach.reaches(ea.head, eb.tail) || self.reach.reaches(eb.head, ea.tail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsDiagnostics {
    pub symmetric: bool,
    pub satisfies_a0: bool,
    pub independence: IndependenceNumber,
}

/// Reveal probabilities at one stage, sharing `H*(s, d)` and scratch buffers
/// across edges.
pub struct StageQ<'a> {
    dag: &'a Dag,
    weights: &'a LogWeights,
    log_total: f64,
    working: Vec<f64>,
    table: FlowTable,
}

impl<'a> StageQ<'a> {
    pub fn new(dag: &'a Dag, weights: &'a LogWeights) -> Result<Self> {
        let table = weight_push(dag, weights)?;
        Ok(Self::with_flow(dag, weights, table))
    }

    /// Reuses an already computed flow table for `weights`.
    pub fn with_flow(dag: &'a Dag, weights: &'a LogWeights, flow: FlowTable) -> Self {
        Self {
            dag,
            weights,
            log_total: flow.log_total(),
            working: weights.as_slice().to_vec(),
            table: flow,
        }
    }

    /// `q(e)`: sum of path probabilities over paths revealing `e`.
    pub fn q(&mut self, obs: &ObservationGraph, e: EdgeId) -> f64 {
        self.working.copy_from_slice(self.weights.as_slice());
        let mut q = 0.0;
        for &r in obs.revealers(e) {
            let lw = self.weights.get(r);
            if lw != MASKED && self.working[r] != MASKED {
                weight_push_into(self.dag, &self.working, &mut self.table);
                let edge = self.dag.edge(r);
                let log_k =
                    self.table.log_from_source[edge.tail] + lw + self.table.log_to_sink[edge.head];
                if log_k != MASKED && !log_k.is_nan() {
                    q += (log_k - self.log_total).exp();
                }
            }
            self.working[r] = MASKED;
        }
        q.min(1.0)
    }

    /// `q(e)` for every edge.
    pub fn all(&mut self, obs: &ObservationGraph) -> Vec<f64> {
        (0..self.dag.edge_count()).map(|e| self.q(obs, e)).collect()
    }
}

fn check_inputs(dag: &Dag, weights: &LogWeights, obs: &ObservationGraph, e: EdgeId) -> Result<()> {
    if obs.edge_count() != dag.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: dag.edge_count(),
            got: obs.edge_count(),
        });
    }
    if weights.len() != dag.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: dag.edge_count(),
            got: weights.len(),
        });
    }
    if e >= dag.edge_count() {
        return Err(Error::EdgeOutOfRange {
            edge: e,
            edge_count: dag.edge_count(),
        });
    }
    Ok(())
}

/// `q(e)` in `O(|revealers(e)| * E)` time.
pub fn compute_q(
    dag: &Dag,
    weights: &LogWeights,
    obs: &ObservationGraph,
    e: EdgeId,
) -> Result<f64> {
    check_inputs(dag, weights, obs, e)?;
    Ok(StageQ::new(dag, weights)?.q(obs, e))
}

/// `q(e)` by summing path probabilities over every enumerated path that
/// reveals `e`. Exponential; used as a test oracle.
pub fn compute_q_bruteforce(
    dag: &Dag,
    weights: &LogWeights,
    obs: &ObservationGraph,
    e: EdgeId,
) -> Result<f64> {
    check_inputs(dag, weights, obs, e)?;
    let flow = weight_push(dag, weights)?;
    let paths = dag.enumerate_paths(DEFAULT_ENUMERATION_CAP)?;
    Ok(paths
        .iter()
        .filter(|p| p.edges().iter().any(|&r| obs.reveals(r, e)))
        .map(|p| crate::dag::path_probability(&flow, weights, p))
        .sum())
}

/// `Q = sum_e r(e) / (q(e) + beta)`.
pub fn q_sum(dag: &Dag, weights: &LogWeights, obs: &ObservationGraph, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    check_inputs(dag, weights, obs, 0)?;
    let flow = weight_push(dag, weights)?;
    let r = edge_marginals(dag, &flow, weights);
    let q = StageQ::with_flow(dag, weights, flow).all(obs);
    Ok(q_sum_from(&r, &q, beta))
}

pub(crate) fn q_sum_from(r: &[f64], q: &[f64], beta: f64) -> f64 {
    r.iter().zip(q).map(|(r, q)| r / (q + beta)).sum()
}

/// Upper bound on `Q` for an observation graph with independence number
/// `alpha` in the given structure class, with `M = ceil(2 E^2 / beta)`.
pub fn qt_bound(
    alpha: f64,
    n: usize,
    edge_count: usize,
    beta: f64,
    symmetric: bool,
    a0: bool,
) -> f64 {
    let n = n as f64;
    let e = edge_count as f64;
    let m = (2.0 * e * e / beta).ceil();
    match (symmetric, a0) {
        (true, true) => alpha,
        (true, false) => n * alpha,
        (false, true) => 1.0 + 2.0 * alpha * (1.0 + (m + e) / alpha).ln(),
        (false, false) => 2.0 * n * (1.0 + alpha * (1.0 + (n * m + e) / alpha).ln()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::edge_marginal;
    use crate::dag::fixtures::diamond;

    fn uniform_flow(dag: &Dag) -> (LogWeights, FlowTable) {
        let w = LogWeights::uniform(dag.edge_count());
        let f = weight_push(dag, &w).unwrap();
        (w, f)
    }

    #[test]
    fn revealed_sets() {
        let dag = diamond();
        let p = dag.path(vec![0, 2]).unwrap();
        assert_eq!(ObservationGraph::self_loops(4).revealed_set(&p), vec![0, 2]);
        let obs = ObservationGraph::from_arcs(4, [(0, 2)]).unwrap();
        let p = dag.path(vec![0, 3]).unwrap();
        assert_eq!(obs.revealed_set(&p), vec![0, 2, 3]);
        assert_eq!(
            ObservationGraph::complete(4).revealed_set(&p),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn construction_forces_self_loops_and_transpose() {
        let obs = ObservationGraph::from_revealers(3, vec![vec![2, 2], vec![], vec![0]]).unwrap();
        assert_eq!(obs.revealers(0), &[0, 2]);
        assert_eq!(obs.revealers(1), &[1]);
        assert_eq!(obs.revealed_by(0), &[0, 2]);
        assert_eq!(obs.revealed_by(2), &[0, 2]);
        assert_eq!(obs.arc_count(), 5);
        assert!(matches!(
            ObservationGraph::from_revealers(2, vec![vec![5], vec![]]),
            Err(Error::EdgeOutOfRange { edge: 5, .. })
        ));
        assert!(matches!(
            ObservationGraph::from_revealers(2, vec![vec![]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn q_counts_each_path_once() {
        let dag = diamond();
        let w = LogWeights::uniform(4);
        // R(e3) = {e1, e3} in 1-based naming.
        let obs =
            ObservationGraph::from_revealers(4, vec![vec![], vec![], vec![0], vec![0, 2]]).unwrap();
        assert!((compute_q(&dag, &w, &obs, 2).unwrap() - 0.75).abs() < 1e-12);
        // Path (e1, e3) holds two revealers of e4 but counts once.
        assert!((compute_q(&dag, &w, &obs, 3).unwrap() - 1.0).abs() < 1e-12);
        assert!((compute_q_bruteforce(&dag, &w, &obs, 3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_equals_marginal_without_side_observations() {
        let dag = diamond();
        let w = LogWeights::from_weights(&[2.0, 1.0, 3.0, 1.0]).unwrap();
        let flow = weight_push(&dag, &w).unwrap();
        let obs = ObservationGraph::self_loops(4);
        for e in 0..4 {
            let q = compute_q(&dag, &w, &obs, e).unwrap();
            assert!((q - edge_marginal(&dag, &flow, &w, e)).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_graph_reveals_everything() {
        let dag = diamond();
        let w = LogWeights::from_weights(&[0.2, 1.0, 3.0, 1.0]).unwrap();
        let obs = ObservationGraph::complete(4);
        for e in 0..4 {
            assert!((compute_q(&dag, &w, &obs, e).unwrap() - 1.0).abs() < 1e-12);
            assert!((compute_q_bruteforce(&dag, &w, &obs, e).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetry() {
        assert!(ObservationGraph::self_loops(4).is_symmetric());
        assert!(ObservationGraph::complete(4).is_symmetric());
        assert!(!ObservationGraph::from_arcs(4, [(0, 2)])
            .unwrap()
            .is_symmetric());
        assert!(ObservationGraph::from_arcs(4, [(0, 2), (2, 0)])
            .unwrap()
            .is_symmetric());
    }

    #[test]
    fn a0_on_diamond() {
        let dag = diamond();
        assert!(ObservationGraph::self_loops(4).satisfies_a0(&dag));
        // e1 and e3 share path (e1, e3) and both reveal e3.
        assert!(!ObservationGraph::from_arcs(4, [(0, 2)])
            .unwrap()
            .satisfies_a0(&dag));
        // e1 and e2 are parallel and never share a path.
        assert!(ObservationGraph::from_arcs(4, [(0, 1), (1, 0)])
            .unwrap()
            .satisfies_a0(&dag));
    }

    #[test]
    fn q_sum_examples() {
        let dag = diamond();
        let (w, _) = uniform_flow(&dag);
        let tiny = 1e-12;
        let full = q_sum(&dag, &w, &ObservationGraph::complete(4), tiny).unwrap();
        assert!((full - 2.0).abs() < 1e-9);
        let semi = q_sum(&dag, &w, &ObservationGraph::self_loops(4), tiny).unwrap();
        assert!((semi - 4.0).abs() < 1e-9);

        let obs =
            ObservationGraph::from_revealers(4, vec![vec![], vec![], vec![0], vec![]]).unwrap();
        // q = (0.5, 0.5, 0.75, 0.5), r = 0.5 everywhere.
        let got = q_sum(&dag, &w, &obs, 0.25).unwrap();
        let expected = 0.5 / 0.75 + 0.5 / 0.75 + 0.5 / 1.0 + 0.5 / 0.75;
        assert!((got - expected).abs() < 1e-12, "{got}");
        assert!((got - 2.5).abs() < 1e-12);
        assert!(q_sum(&dag, &w, &obs, 0.0).is_err());
    }

    #[test]
    fn qt_bound_cells() {
        assert_eq!(qt_bound(3.0, 2, 4, 0.1, true, true), 3.0);
        assert_eq!(qt_bound(3.0, 2, 4, 0.1, true, false), 6.0);
        let m = (2.0 * 16.0 / 0.1_f64).ceil();
        let expected = 1.0 + 2.0 * 3.0 * (1.0 + (m + 4.0) / 3.0).ln();
        assert!((qt_bound(3.0, 2, 4, 0.1, false, true) - expected).abs() < 1e-12);
        let expected = 2.0 * 2.0 * (1.0 + 3.0 * (1.0 + (2.0 * m + 4.0) / 3.0).ln());
        assert!((qt_bound(3.0, 2, 4, 0.1, false, false) - expected).abs() < 1e-12);
    }
}
