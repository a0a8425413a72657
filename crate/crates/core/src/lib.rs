//! Online path planning on DAGs with semi-bandit feedback and
//! side-observations.
//!
//! A learner repeatedly picks a source-sink path in a [`Dag`], suffers the
//! summed losses of its edges and observes the losses of the edges revealed
//! by an [`ObservationGraph`]. [`Learner`] implements the Exp3-OE algorithm:
//! exponential weights over paths represented implicitly through edge
//! weights, path sampling by weight pushing, and an implicitly-exploring loss
//! estimator whose reveal probabilities are computed in polynomial time.
//!
//! The [`games`] module casts online Colonel Blotto and Hide-and-Seek as
//! instances of this problem and [`harness`] runs seeded regret experiments.

pub mod dag;
pub mod error;
pub mod exp3oe;
pub mod games;
pub mod harness;
pub mod logspace;
pub mod mis;
pub mod side_obs;

pub use dag::{
    edge_marginal, edge_marginals, path_probability, sample_path, weight_push, Dag, EdgeId,
    FlowTable, LogWeights, Path, VertexId,
};
pub use error::{Error, Result};
pub use exp3oe::{
    regret_bound_rhs, tune_parameters, Feedback, Learner, LearnerParams, RoundRecord, TuningCase,
};
pub use mis::{independence_number, IndependenceNumber};
pub use side_obs::{
    compute_q, compute_q_bruteforce, q_sum, qt_bound, ObsDiagnostics, ObservationGraph, StageQ,
};
