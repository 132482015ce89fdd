//! Deep Q-learning: epsilon-greedy action selection, FIFO replay with
//! uniform without-replacement sampling, TD targets from a periodically
//! synced target network, and mean-squared-error updates via plain SGD.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::Transition;
use crate::env::Observation;
use crate::error::{Error, Result};
use crate::neural::{
    accumulate_gradient_from_logits, forward, init_params, sgd_step, NetworkSpec, ParameterVector,
};

#[derive(Debug, Clone)]
pub struct DqnConfig {
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Geometric decay applied once per environment slot.
    pub epsilon_decay: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Target network refresh period in training steps; 1 recovers the
    /// shared-parameter update where target and prediction use the same
    /// weights.
    pub target_sync_period: usize,
    pub discount: f64,
    pub learning_rate: f64,
    /// When false, each update uses the freshest transitions instead of a
    /// replay sample.
    pub use_replay: bool,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            epsilon_start: 1.0,
            epsilon_end: 0.01,
            epsilon_decay: 0.999,
            replay_capacity: 10_000,
            batch_size: 32,
            target_sync_period: 100,
            discount: 0.99,
            learning_rate: 0.001,
            use_replay: true,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon_end)
            || !(0.0..=1.0).contains(&self.epsilon_start)
            || self.epsilon_end > self.epsilon_start
        {
            return Err(Error::InvalidParameter(
                "need 0 <= epsilon_end <= epsilon_start <= 1".into(),
            ));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(Error::InvalidParameter(
                "epsilon_decay must lie in (0, 1]".into(),
            ));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return Err(Error::InvalidParameter(
                "replay_capacity must be at least batch_size (and batch_size at least 1)".into(),
            ));
        }
        if self.target_sync_period == 0 {
            return Err(Error::InvalidParameter(
                "target_sync_period must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::InvalidParameter("discount must lie in [0, 1]".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(
                "learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Exploration rate after `step` environment slots:
/// `max(epsilon_end, epsilon_start * decay^step)`.
pub fn epsilon_schedule(step: u64, config: &DqnConfig) -> f64 {
    (config.epsilon_start * config.epsilon_decay.powi(step as i32))
        .max(config.epsilon_end)
}

/// Epsilon-greedy selection over the network's action values. Ties break
/// toward the lowest index.
pub fn dqn_select_action<R: Rng>(
    params: &ParameterVector,
    observation: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let actions = params.spec.output_size();
    if rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..actions));
    }
    let q = forward(params, observation)?;
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    Ok(best)
}

/// TD target `r + gamma * max_a' Q(s', a'; target)`, with the bootstrap term
/// dropped on terminal transitions.
pub fn dqn_td_target(
    transition: &Transition,
    discount: f64,
    target_params: &ParameterVector,
) -> Result<f64> {
    if transition.terminal {
        return Ok(transition.reward);
    }
    let q_next = forward(target_params, &transition.next_observation)?;
    let max_next = q_next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(transition.reward + discount * max_next)
}

/// One SGD step on the mean squared TD error over the batch. Only the taken
/// action's output contributes per sample. Returns the updated parameters and
/// the pre-step loss.
pub fn dqn_update(
    params: &ParameterVector,
    batch: &[Transition],
    discount: f64,
    alpha: f64,
    target_params: &ParameterVector,
) -> Result<(ParameterVector, f64)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let n = batch.len() as f64;
    let actions = params.spec.output_size();
    let mut grad = ParameterVector::zeros(params.spec.clone());
    let mut loss = 0.0;
    let mut logit_grad = vec![0.0; actions];
    for transition in batch {
        if transition.action >= actions {
            return Err(Error::ActionOutOfRange {
                index: transition.action,
                levels: actions,
            });
        }
        let target = dqn_td_target(transition, discount, target_params)?;
        let q = forward(params, &transition.observation)?;
        let err = target - q[transition.action];
        loss += err * err / n;
        // d/dQ(s,a) of mean (target - Q)^2.
        logit_grad[transition.action] = -2.0 * err / n;
        accumulate_gradient_from_logits(
            params,
            &transition.observation,
            &logit_grad,
            &mut grad.values,
        )?;
        logit_grad[transition.action] = 0.0;
    }
    let updated = sgd_step(params, &grad, alpha)?;
    Ok((updated, loss))
}

/// FIFO replay buffer with uniform without-replacement batch sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: std::collections::VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            data: std::collections::VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Append, evicting the oldest transition at capacity.
    pub fn push(&mut self, transition: Transition) {
        if self.data.len() == self.capacity {
            self.data.pop_front();
        }
        self.data.push_back(transition);
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.data.get(index)
    }

    /// Uniform sample of `batch` distinct transitions (Floyd's algorithm).
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Result<Vec<Transition>> {
        if batch == 0 || batch > self.data.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot sample {batch} of {} stored transitions",
                self.data.len()
            )));
        }
        let n = self.data.len();
        let mut picked: Vec<usize> = Vec::with_capacity(batch);
        for i in (n - batch)..n {
            let j = rng.gen_range(0..=i);
            if picked.contains(&j) {
                picked.push(i);
            } else {
                picked.push(j);
            }
        }
        Ok(picked.into_iter().map(|i| self.data[i].clone()).collect())
    }
}

/// A per-cell DQN controller driving one action head evaluated per user.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    params: ParameterVector,
    target: ParameterVector,
    replay: ReplayBuffer,
    config: DqnConfig,
    rng: ChaCha12Rng,
    env_steps: u64,
    updates: u64,
    fresh: Vec<Transition>,
}

impl DqnAgent {
    pub fn new(
        spec: &NetworkSpec,
        config: DqnConfig,
        init_rng: &mut ChaCha12Rng,
        explore_rng: ChaCha12Rng,
    ) -> Result<Self> {
        config.validate()?;
        let params = init_params(spec, init_rng);
        let target = params.clone();
        let replay = ReplayBuffer::new(config.replay_capacity);
        Ok(Self {
            params,
            target,
            replay,
            config,
            rng: explore_rng,
            env_steps: 0,
            updates: 0,
            fresh: Vec::new(),
        })
    }

    pub fn parameters(&self) -> &ParameterVector {
        &self.params
    }

    pub fn target_parameters(&self) -> &ParameterVector {
        &self.target
    }

    /// Exploration rate for the upcoming slot.
    pub fn epsilon(&self) -> f64 {
        epsilon_schedule(self.env_steps, &self.config)
    }

    /// Pick one power level per served user.
    pub fn act(&mut self, observation: &Observation) -> Result<Vec<usize>> {
        let eps = self.epsilon();
        observation
            .per_user
            .iter()
            .map(|features| dqn_select_action(&self.params, features, eps, &mut self.rng))
            .collect()
    }

    /// Store this slot's per-user transitions and run one training update if
    /// enough data is available. Returns the pre-step loss when an update ran.
    pub fn learn(&mut self, transitions: Vec<Transition>) -> Result<Option<f64>> {
        self.env_steps += 1;
        let batch = if self.config.use_replay {
            for t in transitions {
                self.replay.push(t);
            }
            if self.replay.len() < self.config.batch_size {
                return Ok(None);
            }
            self.replay.sample(self.config.batch_size, &mut self.rng)?
        } else {
            self.fresh = transitions;
            if self.fresh.is_empty() {
                return Ok(None);
            }
            self.fresh.clone()
        };
        if self.updates % self.config.target_sync_period as u64 == 0 {
            self.target = self.params.clone();
        }
        let (updated, loss) = dqn_update(
            &self.params,
            &batch,
            self.config.discount,
            self.config.learning_rate,
            &self.target,
        )?;
        self.params = updated;
        self.updates += 1;
        Ok(Some(loss))
    }

    /// Adopt broadcast parameters. A vector identical to the current one is a
    /// no-op; otherwise the target network is re-synced at the same instant.
    pub fn receive_parameters(&mut self, global: &ParameterVector) {
        if global != &self.params {
            self.params = global.clone();
            self.target = global.clone();
        }
    }
}
