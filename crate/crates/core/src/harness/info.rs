//! Structural summary of a game graph.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::Game;
use super::experiment::GameInstance;
use crate::error::Result;
use crate::games::blotto::uniform_allocation;
use crate::mis::{IndependenceNumber, DEFAULT_EXACT_CAP};
use crate::side_obs::ObservationGraph;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphInfo {
    pub vertices: usize,
    pub edges: usize,
    /// Exact path count when it fits in a `u128`.
    pub paths: Option<u128>,
    pub log_paths: f64,
    pub path_length: usize,
    pub alpha_bound: u64,
    /// Properties of one sampled round's observation graph.
    pub symmetric: bool,
    pub satisfies_a0: bool,
    pub independence: IndependenceNumber,
}

/// Builds the graph and inspects the observation graph of one round drawn
/// with `seed`. For Blotto the round is a uniform allocation for each
/// side; the Hide-and-Seek graph does not depend on the round.
pub fn graph_info(game: &Game, seed: u64) -> Result<GraphInfo> {
    let instance = GameInstance::build(game)?;
    let dag = instance.dag();
    let obs: ObservationGraph = match &instance {
        GameInstance::Blotto(g) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let theirs = uniform_allocation(g.troops(), g.battlefields(), &mut rng);
            g.observation_graph(&theirs)
        }
        GameInstance::HideSeek(g, condition) => g.observation_graph(*condition),
    };
    let diag = obs.diagnose(dag, DEFAULT_EXACT_CAP);
    Ok(GraphInfo {
        vertices: dag.vertex_count(),
        edges: dag.edge_count(),
        paths: dag.path_count(),
        log_paths: dag.log_path_count(),
        path_length: dag.max_path_length(),
        alpha_bound: instance.alpha_bound(),
        symmetric: diag.symmetric,
        satisfies_a0: diag.satisfies_a0,
        independence: diag.independence,
    })
}

impl fmt::Display for GraphInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N={}", self.vertices)?;
        writeln!(f, "E={}", self.edges)?;
        match self.paths {
            Some(p) => writeln!(f, "P={p}")?,
            None => writeln!(f, "lnP={}", self.log_paths)?,
        }
        writeln!(f, "path_length={}", self.path_length)?;
        writeln!(f, "alpha_bound={}", self.alpha_bound)?;
        writeln!(f, "symmetric={}", self.symmetric)?;
        writeln!(f, "A0={}", self.satisfies_a0)?;
        if self.independence.exact {
            write!(f, "alpha={}", self.independence.value)
        } else {
            write!(f, "alpha<={}", self.independence.value)
        }
    }
}
