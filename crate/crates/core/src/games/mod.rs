//! Online Colonel Blotto and Hide-and-Seek cast as path planning problems.
//!
//! Each game builds a layered DAG whose source-sink paths are in bijection
//! with the learner's pure strategies, maps a round of play to a loss vector
//! over edges, and derives the round's observation graph from what the
//! learner can deduce about losses of strategies it did not play.

pub mod blotto;
pub mod hide_seek;

pub use blotto::{build_cb_graph, CbAdversary, CbEdge, CbEnv, CbGraph, CbRound, ValuesMode};
pub use hide_seek::{build_hs_graph, HsAdversary, HsCondition, HsEdge, HsEnv, HsGraph, HsRound};

use crate::side_obs::ObservationGraph;

/// Result of one stage of an environment.
#[derive(Clone, Debug)]
pub struct StageOutcome {
    /// Loss of every edge.
    pub losses: Vec<f64>,
    pub obs_graph: ObservationGraph,
    /// Game-rule loss of the learner's action.
    pub path_loss: f64,
}
