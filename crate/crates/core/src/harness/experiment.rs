//! Seeded, repeated runs of Exp3-OE against a game environment.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Adversary, ExperimentConfig, Game, ObservationMode, Tuning};
use crate::dag::{Dag, Path};
use crate::error::{Error, Result};
use crate::exp3oe::{
    regret_bound_rhs, tune_parameters, Feedback, Learner, LearnerParams, TuningCase,
};
use crate::games::{
    build_cb_graph, build_hs_graph, CbEnv, CbGraph, HsCondition, HsEnv, HsGraph, StageOutcome,
};
use crate::side_obs::ObservationGraph;

/// A built game graph.
#[derive(Clone, Debug)]
pub enum GameInstance {
    Blotto(CbGraph),
    HideSeek(HsGraph, HsCondition),
}

impl GameInstance {
    pub fn build(game: &Game) -> Result<Self> {
        Ok(match *game {
            Game::Blotto { k, n } => Self::Blotto(build_cb_graph(k, n)?),
            Game::HideSeek {
                k,
                n,
                kappa,
                condition,
            } => Self::HideSeek(build_hs_graph(k, n, kappa)?, condition),
        })
    }

    pub fn dag(&self) -> &Arc<Dag> {
        match self {
            Self::Blotto(g) => g.dag(),
            Self::HideSeek(g, _) => g.dag(),
        }
    }

    pub fn alpha_bound(&self) -> u64 {
        match self {
            Self::Blotto(g) => g.alpha_bound(),
            Self::HideSeek(g, _) => g.alpha_bound(),
        }
    }

    /// Parameter regime for the observation graphs the learner will see.
    ///
    /// Blotto graphs change every round but always satisfy (A0) and are
    /// never symmetric. The Hide-and-Seek graph is the same every round, so
    /// it is inspected directly.
    pub fn tuning_case(&self, observation: ObservationMode) -> TuningCase {
        let dag = self.dag();
        let (symmetric, a0, alpha) = match (observation, self) {
            (ObservationMode::SelfLoops, _) => (true, true, dag.edge_count() as u64),
            (ObservationMode::Full, _) => (true, dag.max_path_length() <= 1, 1),
            (ObservationMode::Game, Self::Blotto(g)) => (false, true, g.alpha_bound()),
            (ObservationMode::Game, Self::HideSeek(g, c)) => {
                let obs = g.observation_graph(*c);
                (obs.is_symmetric(), obs.satisfies_a0(dag), g.alpha_bound())
            }
        };
        TuningCase::for_dag(dag, symmetric, a0, alpha)
    }

    fn environment(&self, config: &ExperimentConfig) -> Result<Environment> {
        match (self, &config.adversary) {
            (Self::Blotto(g), Adversary::Blotto(a)) => Ok(Environment::Blotto(CbEnv::new(
                g.clone(),
                a.clone(),
                config.values,
            )?)),
            (Self::HideSeek(g, c), Adversary::HideSeek(a)) => {
                Ok(Environment::HideSeek(HsEnv::new(g.clone(), *c, a.clone())?))
            }
            _ => Err(Error::InvalidParameter(
                "adversary does not belong to the configured game".into(),
            )),
        }
    }
}

enum Environment {
    Blotto(CbEnv),
    HideSeek(HsEnv),
}

impl Environment {
    fn stage<R: Rng + ?Sized>(&mut self, path: &Path, rng: &mut R) -> Result<StageOutcome> {
        match self {
            Self::Blotto(env) => env.stage(path, rng),
            Self::HideSeek(env) => env.stage(path, rng),
        }
    }
}

/// Learner parameters the config resolves to.
pub fn resolve_params(config: &ExperimentConfig, instance: &GameInstance) -> Result<LearnerParams> {
    match config.tuning {
        Tuning::Auto => tune_parameters(&instance.tuning_case(config.observation), config.horizon),
        Tuning::Explicit { eta, beta } => LearnerParams::new(eta, beta, config.horizon),
    }
}

/// Per-stage averages over repetitions, plus per-repetition summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretSeries {
    /// Mean cumulative realized loss of the learner after each stage.
    pub mean_cum_loss: Vec<f64>,
    /// Mean cumulative loss of each repetition's best fixed path in
    /// hindsight, evaluated on that repetition's losses up to the stage.
    pub best_cum_loss: Vec<f64>,
    pub regret: Vec<f64>,
    /// Mean `Q_t`, when diagnostics are on.
    pub mean_qt: Option<Vec<f64>>,
    /// Regret of each repetition at the horizon.
    pub terminal_regrets: Vec<f64>,
    /// `Q_t` trace of each repetition, when diagnostics are on.
    pub q_traces: Option<Vec<Vec<f64>>>,
    pub params: LearnerParams,
    /// Longest path length of the graph.
    pub path_length: usize,
    pub log_path_count: f64,
}

impl RegretSeries {
    pub fn horizon(&self) -> usize {
        self.regret.len()
    }

    pub fn repetitions(&self) -> usize {
        self.terminal_regrets.len()
    }

    pub fn mean_terminal_regret(&self) -> f64 {
        mean(&self.terminal_regrets)
    }

    /// Standard error of the mean terminal regret; zero for a single
    /// repetition.
    pub fn terminal_std_error(&self) -> f64 {
        std_error(&self.terminal_regrets)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

struct Repetition {
    cum_loss: Vec<f64>,
    best_cum_loss: Vec<f64>,
    q_trace: Option<Vec<f64>>,
}

/// Random stream of repetition `rep`: the master seed with stream id
/// `rep`, so repetitions are independent of scheduling.
pub fn repetition_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn run_repetition(
    config: &ExperimentConfig,
    instance: &GameInstance,
    params: LearnerParams,
    rep: usize,
) -> Result<Repetition> {
    let dag = instance.dag();
    let edge_count = dag.edge_count();
    let mut rng = repetition_rng(config.seed, rep);
    let mut learner = Learner::new(Arc::clone(dag), params)?;
    let mut env = instance.environment(config)?;
    let fixed_obs = match config.observation {
        ObservationMode::Game => None,
        ObservationMode::SelfLoops => Some(ObservationGraph::self_loops(edge_count)),
        ObservationMode::Full => Some(ObservationGraph::complete(edge_count)),
    };

    let t_max = config.horizon;
    let mut cum_loss = Vec::with_capacity(t_max);
    let mut best_cum_loss = Vec::with_capacity(t_max);
    let mut q_trace = config.diagnostics.then(|| Vec::with_capacity(t_max));
    let mut edge_totals = vec![0.0; edge_count];
    let mut total = 0.0;
    for _ in 0..t_max {
        let (path, _) = learner.draw(&mut rng)?;
        let outcome = env.stage(&path, &mut rng)?;
        let obs = fixed_obs.clone().unwrap_or(outcome.obs_graph);
        let feedback = Feedback::observe(obs, &path, &outcome.losses)?;
        let record = learner.update(&path, &feedback, config.diagnostics)?;
        if let (Some(trace), Some(q)) = (q_trace.as_mut(), record.q_sum) {
            trace.push(q);
        }
        total += outcome.path_loss;
        for (acc, l) in edge_totals.iter_mut().zip(&outcome.losses) {
            *acc += l;
        }
        cum_loss.push(total);
        best_cum_loss.push(dag.best_fixed_path(&edge_totals)?.1);
    }
    Ok(Repetition {
        cum_loss,
        best_cum_loss,
        q_trace,
    })
}

/// Runs every repetition (in parallel) and averages them in repetition
/// order, so the result depends only on the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RegretSeries> {
    config.validate()?;
    let instance = GameInstance::build(&config.game)?;
    let params = resolve_params(config, &instance)?;
    let reps: Vec<Repetition> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, &instance, params, rep))
        .collect::<Result<_>>()?;

    let t_max = config.horizon;
    let count = reps.len() as f64;
    let average = |pick: &dyn Fn(&Repetition) -> &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; t_max];
        for r in &reps {
            for (a, v) in acc.iter_mut().zip(pick(r)) {
                *a += v;
            }
        }
        acc.into_iter().map(|a| a / count).collect()
    };
    let mean_cum_loss = average(&|r| &r.cum_loss);
    let best_cum_loss = average(&|r| &r.best_cum_loss);
    let regret = mean_cum_loss
        .iter()
        .zip(&best_cum_loss)
        .map(|(l, b)| l - b)
        .collect();
    let mean_qt = config
        .diagnostics
        .then(|| average(&|r| r.q_trace.as_deref().expect("diagnostics record Q_t")));
    let terminal_regrets = reps
        .iter()
        .map(|r| r.cum_loss[t_max - 1] - r.best_cum_loss[t_max - 1])
        .collect();
    let q_traces = config.diagnostics.then(|| {
        reps.into_iter()
            .map(|r| r.q_trace.unwrap_or_default())
            .collect()
    });

    let dag = instance.dag();
    Ok(RegretSeries {
        mean_cum_loss,
        best_cum_loss,
        regret,
        mean_qt,
        terminal_regrets,
        q_traces,
        params,
        path_length: dag.max_path_length(),
        log_path_count: dag.log_path_count(),
    })
}

/// Outcome of checking realized regret against the expected-regret bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub horizon: usize,
    pub repetitions: usize,
    pub params: LearnerParams,
    pub mean_regret: f64,
    pub regret_std_error: f64,
    /// Bound evaluated on each repetition's `Q_t` trace, then averaged.
    pub mean_rhs: f64,
    /// `mean_regret <= mean_rhs + 3 * regret_std_error`.
    pub pass: bool,
}

impl std::fmt::Display for BoundReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "T={} reps={}", self.horizon, self.repetitions)?;
        writeln!(f, "eta={} beta={}", self.params.eta, self.params.beta)?;
        writeln!(
            f,
            "mean regret {:.6} (standard error {:.6})",
            self.mean_regret, self.regret_std_error
        )?;
        writeln!(f, "bound on realized Q_t {:.6}", self.mean_rhs)?;
        write!(f, "{}", if self.pass { "PASS" } else { "FAIL" })
    }
}

/// Evaluates the bound on a series recorded with diagnostics on.
pub fn bound_report(series: &RegretSeries) -> Result<BoundReport> {
    let traces = series.q_traces.as_ref().ok_or_else(|| {
        Error::InvalidParameter("bound check needs Q_t traces; enable diagnostics".into())
    })?;
    let rhs: Vec<f64> = traces
        .iter()
        .map(|trace| {
            regret_bound_rhs(
                &series.params,
                series.path_length,
                series.log_path_count,
                trace,
            )
        })
        .collect::<Result<_>>()?;
    let mean_regret = series.mean_terminal_regret();
    let regret_std_error = series.terminal_std_error();
    let mean_rhs = mean(&rhs);
    Ok(BoundReport {
        horizon: series.horizon(),
        repetitions: series.repetitions(),
        params: series.params,
        mean_regret,
        regret_std_error,
        mean_rhs,
        pass: mean_regret <= mean_rhs + 3.0 * regret_std_error,
    })
}

/// Runs `config` with diagnostics forced on and checks the bound.
pub fn verify_bound(config: &ExperimentConfig) -> Result<BoundReport> {
    let mut config = config.clone();
    config.diagnostics = true;
    bound_report(&run_experiment(&config)?)
}
