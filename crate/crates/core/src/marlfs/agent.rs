use rand::Rng as _;

use super::network::{Adam, QNetwork, QValues, Sample};
use super::replay::{ReplayBuffer, Transition};
use super::MarlfsConfig;
use crate::error::Result;
use crate::rng::{self, Rng};

/// One feature's learner: online and target networks, its own replay
/// buffer, optimizer state and sampling stream.
#[derive(Debug, Clone)]
pub struct QAgent {
    pub online: QNetwork,
    pub target: QNetwork,
    pub buffer: ReplayBuffer,
    pub optimizer: Adam,
    pub learn_steps: u64,
    rng: Rng,
}

impl QAgent {
    pub fn new(cfg: &MarlfsConfig, seed: u64) -> Result<Self> {
        let mut init_rng = rng::stream(seed, 0);
        let online = QNetwork::new(&cfg.layer_sizes(), cfg.weight_init, &mut init_rng)?;
        Ok(QAgent {
            target: online.clone(),
            optimizer: Adam::new(online.n_params(), cfg.learning_rate),
            online,
            buffer: ReplayBuffer::new(cfg.buffer_capacity)?,
            learn_steps: 0,
            rng: rng::stream(seed, 1),
        })
    }

    pub fn with_network(net: QNetwork, cfg: &MarlfsConfig, seed: u64) -> Result<Self> {
        Ok(QAgent {
            target: net.clone(),
            optimizer: Adam::new(net.n_params(), cfg.learning_rate),
            online: net,
            buffer: ReplayBuffer::new(cfg.buffer_capacity)?,
            learn_steps: 0,
            rng: rng::stream(seed, 1),
        })
    }

    pub fn remember(&mut self, t: Transition) {
        self.buffer.push(t);
    }
}

/// Greedy action with probability `greedy_prob` (ties select), otherwise a
/// uniformly random action.
pub fn epsilon_greedy(q: QValues, greedy_prob: f64, rng: &mut Rng) -> u8 {
    if rng.gen::<f64>() < greedy_prob {
        u8::from(q[1] >= q[0])
    } else {
        rng.gen_range(0..2u8)
    }
}

/// `r` for terminal transitions, else `r + gamma * max(q_next)`.
pub fn bellman_target(reward: f64, gamma: f64, q_next: QValues, terminal: bool) -> f64 {
    if terminal {
        reward
    } else {
        reward + gamma * q_next[0].max(q_next[1])
    }
}

/// Builds the regression batch: each sampled transition paired with its
/// Bellman target computed on the target network.
pub fn training_batch<'a>(
    target: &QNetwork,
    transitions: &[&'a Transition],
    gamma: f64,
) -> Result<Vec<Sample<'a>>> {
    transitions
        .iter()
        .map(|t| {
            let q_next = target.forward(&t.next_state)?;
            Ok(Sample {
                state: &t.state,
                action: t.action as usize,
                target: bellman_target(t.reward, gamma, q_next, t.terminal),
            })
        })
        .collect()
}

/// One DQN update. Returns `None` without touching the agent when the
/// buffer holds fewer than `batch_size` transitions.
pub fn learn_step(agent: &mut QAgent, cfg: &MarlfsConfig) -> Result<Option<f64>> {
    let Some(batch) = agent.buffer.sample(cfg.batch_size, &mut agent.rng) else {
        return Ok(None);
    };
    let samples = training_batch(&agent.target, &batch, cfg.gamma)?;
    let (loss, grads) = agent.online.loss_and_gradient(&samples)?;
    agent.optimizer.step(&mut agent.online, &grads)?;
    agent.learn_steps += 1;
    if cfg.target_sync_every > 0 && agent.learn_steps.is_multiple_of(cfg.target_sync_every) {
        agent.target = agent.online.clone();
    }
    Ok(Some(loss))
}
