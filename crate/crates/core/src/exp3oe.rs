//! The Exp3-OE learner.
//!
//! The learner keeps one cumulative estimated loss `S(e)` per edge; the edge
//! weight is `exp(-eta * S(e))` and a path's weight is the product over its
//! edges. Each stage it samples a path by weight pushing, observes the
//! revealed losses and adds `loss / (q(e) + beta)` to every revealed edge,
//! where `q(e)` is the probability under the pre-update weights that the
//! drawn path reveals `e`.

use std::sync::Arc;

use rand::Rng;

use crate::dag::{
    edge_marginals, sample_path, weight_push, Dag, EdgeId, FlowTable, LogWeights, Path,
};
use crate::error::{Error, Result};
use crate::side_obs::{q_sum_from, ObservationGraph, StageQ};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerParams {
    /// Learning rate.
    pub eta: f64,
    /// Implicit exploration added to every reveal probability.
    pub beta: f64,
    pub horizon: usize,
}

impl LearnerParams {
    pub fn new(eta: f64, beta: f64, horizon: usize) -> Result<Self> {
        let params = Self { eta, beta, horizon };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Losses revealed at one stage.
#[derive(Clone, Debug)]
pub struct Feedback {
    pub obs_graph: ObservationGraph,
    /// Sorted revealed edge ids.
    pub revealed: Vec<EdgeId>,
    /// `losses[i]` is the loss of `revealed[i]`.
    pub losses: Vec<f64>,
}

impl Feedback {
    /// Feedback for playing `path` against the full loss vector `losses`.
    pub fn observe(obs_graph: ObservationGraph, path: &Path, losses: &[f64]) -> Result<Self> {
        if losses.len() != obs_graph.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: obs_graph.edge_count(),
                got: losses.len(),
            });
        }
        let revealed = obs_graph.revealed_set(path);
        let losses = revealed.iter().map(|&e| losses[e]).collect();
        Ok(Self {
            obs_graph,
            revealed,
            losses,
        })
    }
}

/// Trace of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub stage: usize,
    pub path: Vec<EdgeId>,
    /// Realized loss of the played path.
    pub path_loss: f64,
    pub revealed: Vec<EdgeId>,
    /// Reveal probability of each revealed edge.
    pub q: Vec<f64>,
    /// Estimated loss added to each revealed edge.
    pub estimates: Vec<f64>,
    /// `Q_t`, when requested.
    pub q_sum: Option<f64>,
}

/// Exp3-OE state: a single-owner state machine over one DAG.
#[derive(Clone, Debug)]
pub struct Learner {
    dag: Arc<Dag>,
    params: LearnerParams,
    cum_est_loss: Vec<f64>,
    stage: usize,
}

impl Learner {
    pub fn new(dag: Arc<Dag>, params: LearnerParams) -> Result<Self> {
        params.validate()?;
        let edge_count = dag.edge_count();
        Ok(Self {
            dag,
            params,
            cum_est_loss: vec![0.0; edge_count],
            stage: 1,
        })
    }

    pub fn dag(&self) -> &Arc<Dag> {
        &self.dag
    }

    pub fn params(&self) -> LearnerParams {
        self.params
    }

    /// Replaces `eta` and `beta`; the cumulative estimates are kept.
    pub fn set_params(&mut self, params: LearnerParams) -> Result<()> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    /// Index of the next stage to be played, starting at 1.
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn cumulative_estimated_loss(&self) -> &[f64] {
        &self.cum_est_loss
    }

    /// `ln w(e) = -eta * S(e)`.
    pub fn log_weights(&self) -> LogWeights {
        let eta = self.params.eta;
        LogWeights::from_log(self.cum_est_loss.iter().map(|s| -eta * s).collect())
            .expect("cumulative losses are finite")
    }

    /// Samples this stage's path.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Path, FlowTable)> {
        let weights = self.log_weights();
        let flow = weight_push(&self.dag, &weights)?;
        let path = sample_path(&self.dag, &flow, &weights, rng)?;
        Ok((path, flow))
    }

    /// Applies the stage's feedback. With `with_q_sum`, also computes
    /// `Q_t = sum_e r(e) / (q(e) + beta)`, which needs `q` for every edge.
    pub fn update(
        &mut self,
        path: &Path,
        feedback: &Feedback,
        with_q_sum: bool,
    ) -> Result<RoundRecord> {
        let obs = &feedback.obs_graph;
        if obs.edge_count() != self.dag.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: self.dag.edge_count(),
                got: obs.edge_count(),
            });
        }
        if feedback.revealed != obs.revealed_set(path) {
            return Err(Error::InconsistentFeedback(
                "revealed set differs from the one implied by the observation graph".into(),
            ));
        }
        if feedback.losses.len() != feedback.revealed.len() {
            return Err(Error::InconsistentFeedback(format!(
                "{} losses for {} revealed edges",
                feedback.losses.len(),
                feedback.revealed.len()
            )));
        }
        for (&edge, &loss) in feedback.revealed.iter().zip(&feedback.losses) {
            if !(0.0..=1.0).contains(&loss) {
                return Err(Error::LossOutOfRange { edge, loss });
            }
        }

        let weights = self.log_weights();
        let flow = weight_push(&self.dag, &weights)?;
        let marginals = with_q_sum.then(|| edge_marginals(&self.dag, &flow, &weights));
        let mut stage_q = StageQ::with_flow(&self.dag, &weights, flow);

        let (q, q_sum) = match marginals {
            Some(r) => {
                let all = stage_q.all(obs);
                let q: Vec<f64> = feedback.revealed.iter().map(|&e| all[e]).collect();
                (q, Some(q_sum_from(&r, &all, self.params.beta)))
            }
            None => (
                feedback
                    .revealed
                    .iter()
                    .map(|&e| stage_q.q(obs, e))
                    .collect(),
                None,
            ),
        };

        let estimates: Vec<f64> = feedback
            .losses
            .iter()
            .zip(&q)
            .map(|(loss, q)| loss / (q + self.params.beta))
            .collect();
        for (&e, est) in feedback.revealed.iter().zip(&estimates) {
            self.cum_est_loss[e] += est;
        }

        let path_loss = path
            .edges()
            .iter()
            .map(|e| {
                let i = feedback
                    .revealed
                    .binary_search(e)
                    .expect("path edges are revealed");
                feedback.losses[i]
            })
            .sum();
        let record = RoundRecord {
            stage: self.stage,
            path: path.edges().to_vec(),
            path_loss,
            revealed: feedback.revealed.clone(),
            q,
            estimates,
            q_sum,
        };
        self.stage += 1;
        Ok(record)
    }
}

/// Graph and observation-structure statistics that select a parameter
/// regime.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuningCase {
    pub symmetric: bool,
    pub a0: bool,
    /// Upper bound on the independence numbers of all observation graphs.
    pub alpha: u64,
    /// Longest path length.
    pub n: usize,
    pub edge_count: usize,
    /// Natural log of the number of paths.
    pub log_path_count: f64,
}

impl TuningCase {
    pub fn for_dag(dag: &Dag, symmetric: bool, a0: bool, alpha: u64) -> Self {
        Self {
            symmetric,
            a0,
            alpha,
            n: dag.max_path_length(),
            edge_count: dag.edge_count(),
            log_path_count: dag.log_path_count(),
        }
    }
}

/// `(eta, beta)` for horizon `horizon` in the regime matching `case`.
///
/// A graph with a single path has nothing to learn; `ln P` is floored at
/// `ln 2` so that `eta` stays positive.
pub fn tune_parameters(case: &TuningCase, horizon: usize) -> Result<LearnerParams> {
    if case.alpha == 0 || case.n == 0 || case.edge_count == 0 || horizon == 0 {
        return Err(Error::InvalidParameter(format!(
            "degenerate tuning case {case:?}"
        )));
    }
    let t = horizon as f64;
    let alpha = case.alpha as f64;
    let n = case.n as f64;
    let e = case.edge_count as f64;
    let log_p = case.log_path_count.max(std::f64::consts::LN_2);

    let (beta, eta) = match (case.symmetric, case.a0) {
        (false, false) => {
            // Positive root of a*b^2 + c*b - 1 = 0, in cancellation-free form.
            let a = t * n * (1.0 + alpha * alpha.ln() + e + n);
            let c = t * n * n * e * e;
            let beta = 2.0 / (c + (c * c + 4.0 * a).sqrt());
            let inner = alpha + n * (e * e / beta).ceil() + e;
            let eta = log_p.sqrt() / (n * n * t * (1.0 + alpha * inner.ln())).sqrt();
            (beta, eta)
        }
        (true, false) => {
            let beta = 1.0 / (n * alpha * t).sqrt();
            let eta = 2.0 * log_p.sqrt() / (n * n * alpha * t).sqrt();
            (beta, eta)
        }
        (false, true) => {
            // Positive root of a*b^2 + 2c*b - 1 = 0.
            let a = t * alpha * (3.0 + 2.0 * e);
            let c = t * alpha * e * e;
            let beta = 1.0 / (c + (c * c + a).sqrt());
            let m = (2.0 * e * e / beta).ceil();
            let eta =
                2.0 * log_p.sqrt() / (t * n * alpha * (1.0 + 2.0 * (alpha + m + e).ln())).sqrt();
            (beta, eta)
        }
        (true, true) => {
            let beta = 1.0 / (alpha * t).sqrt();
            let eta = 2.0 * log_p.sqrt() / (n * alpha * t).sqrt();
            (beta, eta)
        }
    };
    LearnerParams::new(eta, beta, horizon)
}

/// Expected-regret bound `ln(P)/eta + (beta + n*eta/2) * sum_t Q_t`.
pub fn regret_bound_rhs(
    params: &LearnerParams,
    n: usize,
    log_path_count: f64,
    q_sums: &[f64],
) -> Result<f64> {
    if q_sums.is_empty() {
        return Err(Error::InvalidParameter("no Q_t values given".into()));
    }
    let total: f64 = q_sums.iter().sum();
    Ok(log_path_count / params.eta + (params.beta + n as f64 * params.eta / 2.0) * total)
}

/// Exp3-OE with the doubling trick for an unknown horizon.
///
/// Epoch `m` (from 0) covers stages `2^m ..= 2^(m+1) - 1` and restarts the
/// learner with parameters tuned for horizon `2^m`.
#[derive(Clone, Debug)]
pub struct DoublingLearner {
    case: TuningCase,
    learner: Learner,
    epoch: u32,
    stage: usize,
}

impl DoublingLearner {
    pub fn new(dag: Arc<Dag>, case: TuningCase) -> Result<Self> {
        let learner = Learner::new(dag, tune_parameters(&case, 1)?)?;
        Ok(Self {
            case,
            learner,
            epoch: 0,
            stage: 1,
        })
    }

    /// Epoch containing global stage `t >= 1`.
    pub fn epoch_of(t: usize) -> u32 {
        usize::BITS - 1 - t.leading_zeros()
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn inner(&self) -> &Learner {
        &self.learner
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Path, FlowTable)> {
        self.learner.draw(rng)
    }

    pub fn update(
        &mut self,
        path: &Path,
        feedback: &Feedback,
        with_q_sum: bool,
    ) -> Result<RoundRecord> {
        let mut record = self.learner.update(path, feedback, with_q_sum)?;
        record.stage = self.stage;
        self.stage += 1;
        let epoch = Self::epoch_of(self.stage);
        if epoch != self.epoch {
            self.epoch = epoch;
            let params = tune_parameters(&self.case, 1 << epoch)?;
            self.learner = Learner::new(self.learner.dag().clone(), params)?;
        }
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::fixtures::diamond;
    use crate::dag::path_probability;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diamond_learner(eta: f64, beta: f64) -> Learner {
        Learner::new(
            Arc::new(diamond()),
            LearnerParams::new(eta, beta, 100).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn params_are_validated() {
        assert!(LearnerParams::new(0.0, 0.1, 1).is_err());
        assert!(LearnerParams::new(0.1, -1.0, 1).is_err());
        assert!(LearnerParams::new(0.1, 0.1, 0).is_err());
        assert!(LearnerParams::new(f64::NAN, 0.1, 1).is_err());
    }

    #[test]
    fn initial_state_is_uniform() {
        let learner = diamond_learner(0.1, 0.1);
        assert_eq!(learner.stage(), 1);
        assert!(learner.log_weights().as_slice().iter().all(|&w| w == 0.0));
        let w = learner.log_weights();
        let flow = weight_push(learner.dag(), &w).unwrap();
        for p in learner.dag().enumerate_paths(10).unwrap() {
            assert!((path_probability(&flow, &w, &p) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn update_increments_revealed_edges() {
        let mut learner = diamond_learner(0.1, 0.25);
        let obs =
            ObservationGraph::from_revealers(4, vec![vec![], vec![], vec![0], vec![]]).unwrap();
        let path = learner.dag().path(vec![0, 3]).unwrap();
        let losses = [0.2, 0.9, 0.6, 0.4];
        let feedback = Feedback::observe(obs, &path, &losses).unwrap();
        assert_eq!(feedback.revealed, vec![0, 2, 3]);
        let record = learner.update(&path, &feedback, true).unwrap();
        // q(e3) = 0.75 so the increment is 0.6 / (0.75 + 0.25).
        assert!((learner.cumulative_estimated_loss()[2] - 0.6).abs() < 1e-12);
        assert_eq!(learner.cumulative_estimated_loss()[1], 0.0);
        assert!((learner.cumulative_estimated_loss()[0] - 0.2 / 0.75).abs() < 1e-12);
        assert!((record.path_loss - 0.6).abs() < 1e-12);
        assert_eq!(record.stage, 1);
        assert_eq!(learner.stage(), 2);
        assert!((record.q_sum.unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn update_rejects_bad_feedback() {
        let mut learner = diamond_learner(0.1, 0.25);
        let path = learner.dag().path(vec![0, 3]).unwrap();
        let obs = ObservationGraph::self_loops(4);
        let mut feedback = Feedback::observe(obs.clone(), &path, &[0.1; 4]).unwrap();
        feedback.revealed = vec![0];
        feedback.losses = vec![0.1];
        assert!(matches!(
            learner.update(&path, &feedback, false),
            Err(Error::InconsistentFeedback(_))
        ));
        let feedback = Feedback::observe(obs, &path, &[0.1, 0.1, 0.1, 1.5]).unwrap();
        assert!(matches!(
            learner.update(&path, &feedback, false),
            Err(Error::LossOutOfRange { edge: 3, .. })
        ));
        assert_eq!(learner.stage(), 1);
    }

    #[test]
    fn penalized_edge_is_avoided() {
        let mut learner = diamond_learner(1.0, 0.1);
        let obs = ObservationGraph::complete(4);
        let path = learner.dag().path(vec![1, 2]).unwrap();
        for _ in 0..20 {
            let fb = Feedback::observe(obs.clone(), &path, &[1.0, 0.0, 0.0, 0.0]).unwrap();
            learner.update(&path, &fb, false).unwrap();
        }
        let w = learner.log_weights();
        let flow = weight_push(learner.dag(), &w).unwrap();
        let through_e1: f64 = learner
            .dag()
            .enumerate_paths(10)
            .unwrap()
            .iter()
            .filter(|p| p.contains(0))
            .map(|p| path_probability(&flow, &w, p))
            .sum();
        assert!(through_e1 < 1e-3, "{through_e1}");
    }

    #[test]
    fn draw_is_deterministic_per_seed() {
        let learner = diamond_learner(0.1, 0.1);
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..50).map(|_| learner.draw(&mut rng).unwrap().0).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..50).map(|_| learner.draw(&mut rng).unwrap().0).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn tuning_case_four() {
        let case = TuningCase {
            symmetric: true,
            a0: true,
            alpha: 4,
            n: 2,
            edge_count: 4,
            log_path_count: 4.0_f64.ln(),
        };
        let p = tune_parameters(&case, 10_000).unwrap();
        assert!((p.beta - 0.005).abs() < 1e-15);
        let expected = 2.0 * 4.0_f64.ln().sqrt() / 80_000.0_f64.sqrt();
        assert!((p.eta - expected).abs() < 1e-15);
        assert!((p.eta - 8.326e-3).abs() < 1e-6);
    }

    #[test]
    fn tuning_case_two() {
        let case = TuningCase {
            symmetric: true,
            a0: false,
            alpha: 4,
            n: 2,
            edge_count: 4,
            log_path_count: 4.0_f64.ln(),
        };
        let p = tune_parameters(&case, 10_000).unwrap();
        assert!((p.beta - 1.0 / 80_000.0_f64.sqrt()).abs() < 1e-15);
        assert!((p.beta - 3.536e-3).abs() < 1e-6);
        let expected = 2.0 * 4.0_f64.ln().sqrt() / (4.0 * 4.0 * 10_000.0_f64).sqrt();
        assert!((p.eta - expected).abs() < 1e-15);
    }

    /// The cancellation-free roots must agree with the textbook quadratic
    /// formula wherever the latter is still accurate.
    #[test]
    fn quadratic_roots_match_textbook_form() {
        for (t, alpha, n, e) in [(10.0, 2.0, 2.0, 3.0), (100.0, 3.0, 3.0, 5.0)] {
            let case = TuningCase {
                symmetric: false,
                a0: false,
                alpha: alpha as u64,
                n: n as usize,
                edge_count: e as usize,
                log_path_count: 1.0,
            };
            let got = tune_parameters(&case, t as usize).unwrap().beta;
            let a: f64 = t * n * (1.0 + alpha * f64::ln(alpha) + e + n);
            let c: f64 = t * n * n * e * e;
            let textbook = (-c + (c * c + 4.0 * a).sqrt()) / (2.0 * a);
            assert!((got / textbook - 1.0).abs() < 1e-6);
            assert!((a * got * got + c * got - 1.0).abs() < 1e-12);

            let case = TuningCase { a0: true, ..case };
            let got = tune_parameters(&case, t as usize).unwrap().beta;
            let a: f64 = t * alpha * (3.0 + 2.0 * e);
            let c: f64 = t * alpha * e * e;
            let textbook = (-c + (c * c + a).sqrt()) / a;
            assert!((got / textbook - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn case_three_beta_satisfies_its_constraint() {
        for (t, alpha, n, e) in [(1_000, 12, 3, 18), (10_000, 4, 2, 4), (50, 1, 1, 1)] {
            let case = TuningCase {
                symmetric: false,
                a0: true,
                alpha,
                n,
                edge_count: e,
                log_path_count: 2.0,
            };
            let beta = tune_parameters(&case, t).unwrap().beta;
            let (t, alpha, e) = (t as f64, alpha as f64, e as f64);
            let limit =
                1.0 / (t * alpha * (1.0 + 2.0 * (1.0 + (e * e / beta).ceil() + e).ln())).sqrt();
            assert!(beta > 0.0 && beta <= limit, "{beta} > {limit}");
        }
    }

    #[test]
    fn case_one_beta_satisfies_its_constraint() {
        for (t, alpha, n, e) in [(1_000, 3, 4, 20), (10_000, 2, 2, 4)] {
            let case = TuningCase {
                symmetric: false,
                a0: false,
                alpha,
                n,
                edge_count: e,
                log_path_count: 2.0,
            };
            let beta = tune_parameters(&case, t).unwrap().beta;
            let (t, alpha, n, e) = (t as f64, alpha as f64, n as f64, e as f64);
            let inner = alpha + n * (e * e / beta).ceil() + e;
            let limit = 1.0 / (t * n * (1.0 + alpha * inner.ln())).sqrt();
            assert!(beta > 0.0 && beta <= limit, "{beta} > {limit}");
        }
    }

    #[test]
    fn regret_bound_examples() {
        let p = LearnerParams::new(0.1, 0.05, 10).unwrap();
        let got = regret_bound_rhs(&p, 2, 4.0_f64.ln(), &[40.0, 60.0]).unwrap();
        assert!((got - (4.0_f64.ln() / 0.1 + 0.15 * 100.0)).abs() < 1e-12);
        assert!((got - 28.8629).abs() < 1e-4);
        let zero = regret_bound_rhs(&p, 2, 4.0_f64.ln(), &[0.0]).unwrap();
        assert_eq!(zero, 4.0_f64.ln() / 0.1);
        let more = regret_bound_rhs(&p, 2, 4.0_f64.ln(), &[40.0, 60.5]).unwrap();
        assert!(more > got);
        assert!(regret_bound_rhs(&p, 2, 1.0, &[]).is_err());
    }

    #[test]
    fn doubling_epochs() {
        assert_eq!(DoublingLearner::epoch_of(1), 0);
        assert_eq!(DoublingLearner::epoch_of(2), 1);
        assert_eq!(DoublingLearner::epoch_of(3), 1);
        assert_eq!(DoublingLearner::epoch_of(4), 2);
        assert_eq!(DoublingLearner::epoch_of(1023), 9);

        let dag = Arc::new(diamond());
        let case = TuningCase::for_dag(&dag, true, true, 4);
        let mut learner = DoublingLearner::new(dag.clone(), case).unwrap();
        let obs = ObservationGraph::self_loops(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 1..=9 {
            let (path, _) = learner.draw(&mut rng).unwrap();
            let fb = Feedback::observe(obs.clone(), &path, &[0.5; 4]).unwrap();
            let record = learner.update(&path, &fb, false).unwrap();
            assert_eq!(record.stage, t);
        }
        // Stage 10 belongs to epoch 3 (stages 8..=15); the inner learner was
        // restarted at stage 8 and has seen stages 8 and 9.
        assert_eq!(learner.epoch(), 3);
        assert_eq!(learner.inner().stage(), 3);
        assert_eq!(learner.inner().params(), tune_parameters(&case, 8).unwrap());
    }
}
