//! Directed acyclic graphs with a designated source and sink, plus the
//! weight-pushing machinery used to sample paths with probability
//! proportional to the product of their edge weights.
//!
//! Every aggregation runs in the log domain. A path `p` with edge weights
//! `w(e)` has probability `x(p) = prod w(e) / H(s, d)`, where `H(u, v)` is the
//! total weight of all `u -> v` paths. [`weight_push`] computes `ln H(s, u)`
//! and `ln H(u, d)` for every vertex in one forward and one backward sweep.

use rand::Rng;

use crate::error::{Error, Result};
use crate::logspace::{log_add, MASKED};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Default safety cap for [`Dag::enumerate_paths`].
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
}

/// A validated DAG in which every edge lies on some source-sink path.
#[derive(Clone, Debug)]
pub struct Dag {
    vertex_count: usize,
    edges: Vec<Edge>,
    source: VertexId,
    sink: VertexId,
    topo_order: Vec<VertexId>,
    topo_label: Vec<usize>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    max_path_length: usize,
}

impl Dag {
    /// Validates the edge list and labels the vertices topologically.
    ///
    /// Edges keep the ids given by their position in `edge_list`.
    pub fn new(
        vertex_count: usize,
        edge_list: &[(VertexId, VertexId)],
        source: VertexId,
        sink: VertexId,
    ) -> Result<Self> {
        if edge_list.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        for &v in [source, sink]
            .iter()
            .chain(edge_list.iter().flat_map(|(a, b)| [a, b]))
        {
            if v >= vertex_count {
                return Err(Error::VertexOutOfRange {
                    vertex: v,
                    vertex_count,
                });
            }
        }
        if source == sink {
            return Err(Error::SourceIsSink(source));
        }

        let edges: Vec<Edge> = edge_list
            .iter()
            .map(|&(tail, head)| Edge { tail, head })
            .collect();
        let mut out_edges = vec![Vec::new(); vertex_count];
        let mut in_edges = vec![Vec::new(); vertex_count];
        for (id, e) in edges.iter().enumerate() {
            out_edges[e.tail].push(id);
            in_edges[e.head].push(id);
        }

        // Kahn's algorithm; ties broken by smallest vertex id.
        let mut indegree: Vec<usize> = in_edges.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<VertexId> =
            (0..vertex_count).filter(|&v| indegree[v] == 0).collect();
        let mut topo_order = Vec::with_capacity(vertex_count);
        while let Some(u) = ready.pop_first() {
            topo_order.push(u);
            for &e in &out_edges[u] {
                let v = edges[e].head;
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        if topo_order.len() != vertex_count {
            return Err(Error::CycleDetected);
        }
        let mut topo_label = vec![0; vertex_count];
        for (label, &v) in topo_order.iter().enumerate() {
            topo_label[v] = label;
        }

        if !in_edges[source].is_empty() {
            return Err(Error::BadEndpoints(format!(
                "source {source} has incoming edges"
            )));
        }
        if !out_edges[sink].is_empty() {
            return Err(Error::BadEndpoints(format!(
                "sink {sink} has outgoing edges"
            )));
        }

        let mut from_source = vec![false; vertex_count];
        from_source[source] = true;
        for &u in &topo_order {
            if from_source[u] {
                for &e in &out_edges[u] {
                    from_source[edges[e].head] = true;
                }
            }
        }
        let mut to_sink = vec![false; vertex_count];
        to_sink[sink] = true;
        for &u in topo_order.iter().rev() {
            if out_edges[u].iter().any(|&e| to_sink[edges[e].head]) {
                to_sink[u] = true;
            }
        }
        if let Some((edge, e)) = edges
            .iter()
            .enumerate()
            .find(|(_, e)| !(from_source[e.tail] && to_sink[e.head]))
        {
            return Err(Error::UnreachableEdge {
                edge,
                tail: e.tail,
                head: e.head,
            });
        }

        let mut longest = vec![0usize; vertex_count];
        for &u in topo_order.iter().rev() {
            longest[u] = out_edges[u]
                .iter()
                .map(|&e| 1 + longest[edges[e].head])
                .max()
                .unwrap_or(0);
        }
        let max_path_length = longest[source];

        Ok(Self {
            vertex_count,
            edges,
            source,
            sink,
            topo_order,
            topo_label,
            out_edges,
            in_edges,
            max_path_length,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id]
    }

    pub fn source(&self) -> VertexId {
        self.source
    }

    pub fn sink(&self) -> VertexId {
        self.sink
    }

    /// Vertices sorted so that every edge points forward.
    pub fn topo_order(&self) -> &[VertexId] {
        &self.topo_order
    }

    pub fn topo_label(&self, v: VertexId) -> usize {
        self.topo_label[v]
    }

    /// Outgoing edge ids of `v`, in increasing id order.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.in_edges[v]
    }

    /// Number of edges on the longest source-sink path.
    pub fn max_path_length(&self) -> usize {
        self.max_path_length
    }

    /// Builds a [`Path`] from a sequence of edge ids, checking contiguity.
    pub fn path(&self, edge_ids: Vec<EdgeId>) -> Result<Path> {
        let Some(&first) = edge_ids.first() else {
            return Err(Error::InvalidPath("empty edge sequence".into()));
        };
        for &e in &edge_ids {
            if e >= self.edge_count() {
                return Err(Error::EdgeOutOfRange {
                    edge: e,
                    edge_count: self.edge_count(),
                });
            }
        }
        if self.edges[first].tail != self.source {
            return Err(Error::InvalidPath(format!(
                "edge {first} does not leave the source"
            )));
        }
        for pair in edge_ids.windows(2) {
            if self.edges[pair[0]].head != self.edges[pair[1]].tail {
                return Err(Error::InvalidPath(format!(
                    "edges {} and {} are not contiguous",
                    pair[0], pair[1]
                )));
            }
        }
        let last = *edge_ids.last().unwrap();
        if self.edges[last].head != self.sink {
            return Err(Error::InvalidPath(format!(
                "edge {last} does not enter the sink"
            )));
        }
        Ok(Path::new_unchecked(edge_ids))
    }

    /// Exact number of source-sink paths, or `None` on `u128` overflow.
    pub fn path_count(&self) -> Option<u128> {
        let mut count = vec![0u128; self.vertex_count];
        count[self.sink] = 1;
        for &u in self.topo_order.iter().rev() {
            if u == self.sink {
                continue;
            }
            let mut total = 0u128;
            for &e in &self.out_edges[u] {
                total = total.checked_add(count[self.edges[e].head])?;
            }
            count[u] = total;
        }
        Some(count[self.source])
    }

    /// Natural log of the number of source-sink paths, carried in the log
    /// domain so astronomically large counts stay finite.
    pub fn log_path_count(&self) -> f64 {
        let mut log_count = vec![MASKED; self.vertex_count];
        log_count[self.sink] = 0.0;
        for &u in self.topo_order.iter().rev() {
            if u == self.sink {
                continue;
            }
            log_count[u] = self.out_edges[u].iter().fold(MASKED, |acc, &e| {
                log_add(acc, log_count[self.edges[e].head])
            });
        }
        log_count[self.source]
    }

    /// All source-sink paths in lexicographic order of their edge-id
    /// sequences. Fails when there are more than `cap` paths.
    pub fn enumerate_paths(&self, cap: u64) -> Result<Vec<Path>> {
        match self.path_count() {
            Some(count) if count <= cap as u128 => {}
            Some(count) => {
                return Err(Error::TooManyPaths {
                    count: count.to_string(),
                    cap,
                })
            }
            None => {
                return Err(Error::TooManyPaths {
                    count: "> 2^128".into(),
                    cap,
                })
            }
        }
        let mut paths = Vec::new();
        let mut stack: Vec<(VertexId, usize)> = vec![(self.source, 0)];
        let mut current: Vec<EdgeId> = Vec::new();
        while let Some(top) = stack.last_mut() {
            let u = top.0;
            if u == self.sink {
                paths.push(Path::new_unchecked(current.clone()));
                stack.pop();
                current.pop();
                continue;
            }
            if let Some(&e) = self.out_edges[u].get(top.1) {
                top.1 += 1;
                current.push(e);
                stack.push((self.edges[e].head, 0));
            } else {
                stack.pop();
                current.pop();
            }
        }
        Ok(paths)
    }

    /// Path minimizing the summed per-edge totals.
    ///
    /// Ties are broken towards the lexicographically smallest edge-id
    /// sequence.
    pub fn best_fixed_path(&self, totals: &[f64]) -> Result<(Path, f64)> {
        check_dimension(self.edge_count(), totals.len())?;
        let mut best = vec![f64::INFINITY; self.vertex_count];
        best[self.sink] = 0.0;
        for &u in self.topo_order.iter().rev() {
            for &e in &self.out_edges[u] {
                let cand = totals[e] + best[self.edges[e].head];
                if cand < best[u] {
                    best[u] = cand;
                }
            }
        }
        let mut edges = Vec::with_capacity(self.max_path_length);
        let mut total = 0.0;
        let mut u = self.source;
        while u != self.sink {
            let tol = 1e-12 * best[u].abs().max(1.0);
            let e = *self.out_edges[u]
                .iter()
                .find(|&&e| totals[e] + best[self.edges[e].head] <= best[u] + tol)
                .expect("minimum is attained by some outgoing edge");
            edges.push(e);
            total += totals[e];
            u = self.edges[e].head;
        }
        Ok((Path::new_unchecked(edges), total))
    }

    /// Reflexive transitive closure over vertices.
    pub fn reachability(&self) -> Reachability {
        let words = self.vertex_count.div_ceil(64);
        let mut rows = vec![vec![0u64; words]; self.vertex_count];
        for &u in self.topo_order.iter().rev() {
            let mut row = vec![0u64; words];
            row[u / 64] |= 1 << (u % 64);
            for &e in &self.out_edges[u] {
                let v = self.edges[e].head;
                for (w, bits) in row.iter_mut().zip(&rows[v]) {
                    *w |= bits;
                }
            }
            rows[u] = row;
        }
        Reachability { rows }
    }
}

/// Vertex reachability matrix stored as bit rows.
#[derive(Clone, Debug)]
pub struct Reachability {
    rows: Vec<Vec<u64>>,
}

impl Reachability {
    /// Whether `to` is reachable from `from` (every vertex reaches itself).
    pub fn reaches(&self, from: VertexId, to: VertexId) -> bool {
        self.rows[from][to / 64] >> (to % 64) & 1 == 1
    }
}

/// A source-sink path, stored as its ordered edge ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    edges: Vec<EdgeId>,
    sorted: Vec<EdgeId>,
}

impl Path {
    fn new_unchecked(edges: Vec<EdgeId>) -> Self {
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        Self { edges, sorted }
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.sorted.binary_search(&e).is_ok()
    }

    /// Incidence vector of the path over `edge_count` edges.
    pub fn incidence(&self, edge_count: usize) -> Vec<bool> {
        let mut v = vec![false; edge_count];
        for &e in &self.edges {
            v[e] = true;
        }
        v
    }

    /// Sum of `values` over the path's edges.
    pub fn total(&self, values: &[f64]) -> f64 {
        self.edges.iter().map(|&e| values[e]).sum()
    }
}

/// Per-edge natural-log weights. A masked entry is a weight of exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LogWeights {
    log_w: Vec<f64>,
}

impl LogWeights {
    /// All weights equal to one.
    pub fn uniform(edge_count: usize) -> Self {
        Self {
            log_w: vec![0.0; edge_count],
        }
    }

    /// Wraps log-weights. Entries must be finite or [`MASKED`].
    pub fn from_log(log_w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = log_w.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
            return Err(Error::InvalidParameter(format!(
                "log-weight {bad} is not allowed"
            )));
        }
        Ok(Self { log_w })
    }

    /// Takes logs of nonnegative linear-domain weights; zero becomes masked.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weight {bad} is not allowed"
            )));
        }
        Ok(Self {
            log_w: weights
                .iter()
                .map(|&w| if w == 0.0 { MASKED } else { w.ln() })
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.log_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_w.is_empty()
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.log_w[e]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.log_w
    }

    /// Sets the weight of `e` to exactly zero.
    pub fn mask(&mut self, e: EdgeId) {
        self.log_w[e] = MASKED;
    }

    pub fn is_masked(&self, e: EdgeId) -> bool {
        self.log_w[e] == MASKED
    }

    /// Linear-domain weight of `e`.
    pub fn weight(&self, e: EdgeId) -> f64 {
        self.log_w[e].exp()
    }
}

/// Output of [`weight_push`]: `ln H(s, u)` and `ln H(u, d)` for every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowTable {
    pub log_from_source: Vec<f64>,
    pub log_to_sink: Vec<f64>,
    source: VertexId,
}

impl FlowTable {
    fn empty(vertex_count: usize, source: VertexId) -> Self {
        Self {
            log_from_source: vec![MASKED; vertex_count],
            log_to_sink: vec![MASKED; vertex_count],
            source,
        }
    }

    /// `ln H(s, d)`, the log of the total weight of all paths.
    pub fn log_total(&self) -> f64 {
        self.log_to_sink[self.source]
    }
}

fn check_dimension(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Weight pushing: aggregate path weights from the source and to the sink.
pub fn weight_push(dag: &Dag, weights: &LogWeights) -> Result<FlowTable> {
    check_dimension(dag.edge_count(), weights.len())?;
    let mut table = FlowTable::empty(dag.vertex_count(), dag.source());
    weight_push_into(dag, weights.as_slice(), &mut table);
    Ok(table)
}

/// Log-sum-exp of `ln H(other end) + ln w(e)` over a vertex's edge list.
#[inline]
fn push_vertex(edge_ids: &[EdgeId], log_w: &[f64], other_end: impl Fn(EdgeId) -> f64) -> f64 {
    let mut max = MASKED;
    for &e in edge_ids {
        let lw = log_w[e];
        if lw != MASKED {
            max = max.max(lw + other_end(e));
        }
    }
    if max == MASKED {
        return MASKED;
    }
    let mut sum = 0.0;
    for &e in edge_ids {
        let lw = log_w[e];
        if lw != MASKED {
            let term = lw + other_end(e);
            if term != MASKED {
                sum += (term - max).exp();
            }
        }
    }
    max + sum.ln()
}

/// Allocation-free weight pushing into an existing table.
pub(crate) fn weight_push_into(dag: &Dag, log_w: &[f64], table: &mut FlowTable) {
    let edges = dag.edges();
    let from = &mut table.log_from_source;
    for &u in dag.topo_order() {
        from[u] = if u == dag.source() {
            0.0
        } else {
            push_vertex(dag.in_edges(u), log_w, |e| from[edges[e].tail])
        };
    }
    let to = &mut table.log_to_sink;
    for &u in dag.topo_order().iter().rev() {
        to[u] = if u == dag.sink() {
            0.0
        } else {
            push_vertex(dag.out_edges(u), log_w, |e| to[edges[e].head])
        };
    }
}

/// Draws a path with probability `x(p)` by walking from the source and
/// choosing each outgoing edge `e = (u, v)` with probability
/// `w(e) H(v, d) / H(u, d)`.
pub fn sample_path<R: Rng + ?Sized>(
    dag: &Dag,
    flow: &FlowTable,
    weights: &LogWeights,
    rng: &mut R,
) -> Result<Path> {
    let log_w = weights.as_slice();
    let mut edges = Vec::with_capacity(dag.max_path_length());
    let mut u = dag.source();
    while u != dag.sink() {
        let log_here = flow.log_to_sink[u];
        if log_here == MASKED || !log_here.is_finite() {
            return Err(Error::NumericalDegeneracy { vertex: u });
        }
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        for &e in dag.out_edges(u) {
            if log_w[e] == MASKED {
                continue;
            }
            let mass = (log_w[e] + flow.log_to_sink[dag.edge(e).head] - log_here).exp();
            if mass == 0.0 {
                continue;
            }
            acc += mass;
            chosen = Some(e);
            if draw < acc {
                break;
            }
        }
        // Rounding can leave `acc` a hair below one; fall back to the last
        // edge carrying mass.
        let e = chosen.ok_or(Error::NumericalDegeneracy { vertex: u })?;
        edges.push(e);
        u = dag.edge(e).head;
    }
    Ok(Path::new_unchecked(edges))
}

/// `x(p) = w(p) / H(s, d)`.
pub fn path_probability(flow: &FlowTable, weights: &LogWeights, path: &Path) -> f64 {
    let log_w: f64 = path.edges().iter().map(|&e| weights.get(e)).sum();
    if log_w == MASKED {
        return 0.0;
    }
    (log_w - flow.log_total()).exp().min(1.0)
}

/// `r(e)`, the probability that a path drawn from `x` contains `e`.
pub fn edge_marginal(dag: &Dag, flow: &FlowTable, weights: &LogWeights, e: EdgeId) -> f64 {
    let edge = dag.edge(e);
    let log_r = flow.log_from_source[edge.tail] + weights.get(e) + flow.log_to_sink[edge.head]
        - flow.log_total();
    if log_r.is_nan() {
        return 0.0;
    }
    log_r.exp().min(1.0)
}

/// [`edge_marginal`] for every edge.
pub fn edge_marginals(dag: &Dag, flow: &FlowTable, weights: &LogWeights) -> Vec<f64> {
    (0..dag.edge_count())
        .map(|e| edge_marginal(dag, flow, weights, e))
        .collect()
}
