//! Multi-agent DQN feature selection.
//!
//! One agent per feature decides whether its feature is selected. All
//! agents observe the same aggregated state of the current subset (see
//! [`state`]), receive the same reward for the subset they jointly chose,
//! and learn from their own replay buffers with a target network.
//!
//! Each episode starts from the full feature set. The subset with the lowest
//! cross-validated MSE seen during training is returned, refitted on the
//! full training split and scored once on the validation split.

pub mod agent;
pub mod env;
pub mod network;
pub mod replay;
pub mod state;

use serde::{Deserialize, Serialize};

pub use agent::{bellman_target, epsilon_greedy, learn_step, QAgent};
pub use env::{env_step, subset_cv_mse, Environment, StepOutcome};
pub use network::{Adam, QNetwork, QValues, Sample, WeightInit};
pub use replay::{ReplayBuffer, Transition};
pub use state::{state_repr, FeatureStatistics, STATE_DIM};

pub use crate::subset::FeatureSubset;

use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::forest::{self, ForestParams};
use crate::reward::RewardParams;
use crate::rng;
use crate::stats;

const POLICY_STREAM: u64 = 1;
const AGENT_STREAM: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarlfsConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub epsilon: f64,
    /// When true `epsilon` is the probability of the greedy action; when
    /// false it is the probability of a random action.
    pub epsilon_is_greedy_prob: bool,
    pub gamma: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub buffer_capacity: usize,
    pub target_sync_every: u64,
    pub hidden_layers: Vec<usize>,
    pub weight_init: WeightInit,
    pub state_dim: usize,
    pub cv_folds: usize,
    pub cv_seed: u64,
    pub seed: u64,
    pub reward: RewardParams,
    /// Regressor used to score subsets and for the final refit.
    pub forest: ForestParams,
}

impl Default for MarlfsConfig {
    fn default() -> Self {
        MarlfsConfig {
            episodes: 100,
            steps_per_episode: 30,
            epsilon: 0.9,
            epsilon_is_greedy_prob: true,
            gamma: 0.9,
            batch_size: 32,
            learning_rate: 0.01,
            buffer_capacity: 2000,
            target_sync_every: 100,
            hidden_layers: vec![64, 8],
            weight_init: WeightInit::GlorotUniform,
            state_dim: STATE_DIM,
            cv_folds: 5,
            cv_seed: 0,
            seed: 0,
            reward: RewardParams::default(),
            forest: ForestParams::default(),
        }
    }
}

impl MarlfsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad(format!(
                "batch_size {} must be in 1..={}",
                self.batch_size, self.buffer_capacity
            ));
        }
        if self.steps_per_episode < 1 {
            return bad("steps_per_episode must be at least 1".into());
        }
        if self.state_dim != STATE_DIM {
            return bad(format!("state_dim must be {STATE_DIM}"));
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive".into());
        }
        self.reward.validate()?;
        self.forest.validate()
    }

    pub fn greedy_prob(&self) -> f64 {
        if self.epsilon_is_greedy_prob {
            self.epsilon
        } else {
            1.0 - self.epsilon
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.state_dim)
            .chain(self.hidden_layers.iter().copied())
            .chain(std::iter::once(2))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub reward: f64,
    pub mse_cv: Option<f64>,
    pub subset_size: usize,
    /// Mean learn-step loss over the agents that updated this step.
    pub mean_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best_subset: FeatureSubset,
    pub best_cv_mse: f64,
    /// Episode and step at which `best_subset` was first reached.
    pub best_found_at: (usize, usize),
    pub trace: Vec<StepRecord>,
    pub distinct_subsets_evaluated: usize,
    pub cv_seed: u64,
    pub forest_seed: u64,
    pub validation_mse: f64,
    pub validation_mae: f64,
}

impl SelectionResult {
    pub fn reward_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.reward).collect()
    }

    pub fn subset_size_trace(&self) -> Vec<usize> {
        self.trace.iter().map(|r| r.subset_size).collect()
    }
}

/// Fits a forest on the selected training columns and scores it on the
/// same columns of `val`. Returns (mse, mae).
pub fn evaluate_subset(
    train: &DataTable,
    val: &DataTable,
    subset: &FeatureSubset,
    params: &ForestParams,
) -> Result<(f64, f64)> {
    let cols = subset.indices();
    if cols.is_empty() {
        return Err(Error::Degenerate("cannot evaluate an empty subset".into()));
    }
    let model = forest::fit_forest(&train.x.select_columns(&cols), &train.y, params)?;
    let pred = model.predict_matrix(&val.x.select_columns(&cols))?;
    Ok((stats::mse(&val.y, &pred)?, stats::mae(&val.y, &pred)?))
}

pub fn run_marlfs(train: &DataTable, val: &DataTable, cfg: &MarlfsConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let n = train.n_features();
    if n == 0 {
        return Err(Error::Degenerate("no features to select from".into()));
    }
    if val.feature_names != train.feature_names {
        return Err(Error::Schema(
            "training and validation features differ".into(),
        ));
    }

    let corr = stats::corr_matrix(&train.x, &train.feature_names)?;
    let features = FeatureStatistics::compute(train)?;
    let mut agents = (0..n)
        .map(|i| QAgent::new(cfg, rng::derive_seed(cfg.seed, AGENT_STREAM + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut policy_rng = rng::stream(cfg.seed, POLICY_STREAM);
    let mut env = Environment::new(train, &corr, cfg);
    let greedy_prob = cfg.greedy_prob();

    let mut best: Option<(FeatureSubset, f64, (usize, usize))> = None;
    let mut trace = Vec::with_capacity(cfg.episodes * cfg.steps_per_episode);

    for episode in 0..cfg.episodes {
        let mut state = state_repr(&FeatureSubset::full(n), &features, &corr);
        for step in 0..cfg.steps_per_episode {
            let actions = agents
                .iter()
                .map(|a| Ok(epsilon_greedy(a.online.forward(&state)?, greedy_prob, &mut policy_rng)))
                .collect::<Result<Vec<u8>>>()?;
            let outcome = env.step(&actions)?;
            let next_state = state_repr(&outcome.subset, &features, &corr);
            let terminal = step + 1 == cfg.steps_per_episode;

            let mut losses = Vec::new();
            for (agent, &action) in agents.iter_mut().zip(&actions) {
                agent.remember(Transition {
                    state: state.clone(),
                    action,
                    reward: outcome.reward,
                    next_state: next_state.clone(),
                    terminal,
                });
                if let Some(loss) = learn_step(agent, cfg)? {
                    losses.push(loss);
                }
            }

            if let Some(mse) = outcome.mse_cv {
                if best.as_ref().is_none_or(|(_, b, _)| mse < *b) {
                    best = Some((outcome.subset.clone(), mse, (episode, step)));
                }
            }
            trace.push(StepRecord {
                episode,
                step,
                reward: outcome.reward,
                mse_cv: outcome.mse_cv,
                subset_size: outcome.subset.cardinality(),
                mean_loss: (!losses.is_empty()).then(|| stats::mean(&losses)),
            });
            state = next_state;
        }
        log::debug!(
            "episode {episode}: best cv mse so far {:?}",
            best.as_ref().map(|b| b.1)
        );
    }

    let (best_subset, best_cv_mse, best_found_at) = best.ok_or_else(|| {
        Error::Degenerate("every visited subset was empty".into())
    })?;
    let (validation_mse, validation_mae) = evaluate_subset(train, val, &best_subset, &cfg.forest)?;
    Ok(SelectionResult {
        best_subset,
        best_cv_mse,
        best_found_at,
        trace,
        distinct_subsets_evaluated: env.evaluations(),
        cv_seed: cfg.cv_seed,
        forest_seed: cfg.forest.seed,
        validation_mse,
        validation_mae,
    })
}
