//! Monte-Carlo policy gradient: a stochastic softmax policy sampled per
//! user, discounted returns standardized per episode, and one SGD step on
//! the summed log-probability loss at each episode end.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{Trajectory, TrajectoryStep};
use crate::env::Observation;
use crate::error::{Error, Result};
use crate::neural::{
    accumulate_gradient_from_logits, forward_logits, init_params, log_softmax, sgd_step,
    softmax, NetworkSpec, OutputHead, ParameterVector,
};

/// Variance floor applied when standardizing per-episode returns.
const RETURN_VARIANCE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ReinforceConfig {
    pub discount: f64,
    pub learning_rate: f64,
}

impl Default for ReinforceConfig {
    fn default() -> Self {
        Self {
            discount: 0.99,
            learning_rate: 0.001,
        }
    }
}

impl ReinforceConfig {
    pub fn validate(&self) -> Result<()> {
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

/// Sample an action from the softmax policy; returns the action index and
/// the log-probability of that action.
pub fn reinforce_select_action<R: Rng>(
    params: &ParameterVector,
    observation: &[f64],
    rng: &mut R,
) -> Result<(usize, f64)> {
    if params.spec.head != OutputHead::Softmax {
        return Err(Error::InvalidParameter(
            "policy sampling needs a softmax head".into(),
        ));
    }
    let logits = forward_logits(params, observation)?;
    let log_probs = log_softmax(&logits);
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let last = log_probs.len() - 1;
    for (i, lp) in log_probs.iter().enumerate() {
        cumulative += lp.exp();
        if u < cumulative || i == last {
            return Ok((i, *lp));
        }
    }
    unreachable!("the loop always returns on the last index")
}

/// Discounted returns `G_t = sum_{k >= t} gamma^(k-t) r_k`, computed backward.
pub fn reinforce_returns(trajectory: &Trajectory, discount: f64) -> Result<Vec<f64>> {
    if trajectory.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    let mut returns = vec![0.0; trajectory.len()];
    let mut running = 0.0;
    for (i, step) in trajectory.steps.iter().enumerate().rev() {
        running = step.reward + discount * running;
        returns[i] = running;
    }
    Ok(returns)
}

/// Per-episode standardization: subtract the mean, divide by the standard
/// deviation with a variance floor. Invariant to shifting or positively
/// scaling all rewards.
fn standardize(returns: &[f64]) -> Vec<f64> {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
    let denom = var.max(RETURN_VARIANCE_FLOOR).sqrt();
    returns.iter().map(|g| (g - mean) / denom).collect()
}

/// Gradient of `-sum_t log pi(a_t | s_t) * G_hat_t` and the loss value.
fn policy_gradient(
    params: &ParameterVector,
    trajectory: &Trajectory,
    discount: f64,
) -> Result<(ParameterVector, f64)> {
    if params.spec.head != OutputHead::Softmax {
        return Err(Error::InvalidParameter(
            "policy gradient needs a softmax head".into(),
        ));
    }
    let normalized = standardize(&reinforce_returns(trajectory, discount)?);
    let actions = params.spec.output_size();
    let mut grad = ParameterVector::zeros(params.spec.clone());
    let mut loss = 0.0;
    let mut logit_grad = vec![0.0; actions];
    for (step, &g_hat) in trajectory.steps.iter().zip(&normalized) {
        if step.action >= actions {
            return Err(Error::ActionOutOfRange {
                index: step.action,
                levels: actions,
            });
        }
        let logits = forward_logits(params, &step.observation)?;
        let log_probs = log_softmax(&logits);
        loss -= log_probs[step.action] * g_hat;
        if g_hat == 0.0 {
            continue;
        }
        // d/dz_j of -log pi(a) * G = -G * (1{j = a} - p_j).
        let probs = softmax(&logits);
        for (j, lg) in logit_grad.iter_mut().enumerate() {
            let indicator = if j == step.action { 1.0 } else { 0.0 };
            *lg = -g_hat * (indicator - probs[j]);
        }
        accumulate_gradient_from_logits(params, &step.observation, &logit_grad, &mut grad.values)?;
    }
    Ok((grad, loss))
}

/// One SGD step on the policy-gradient loss of a single trajectory. Returns
/// the updated parameters and the pre-step loss.
pub fn reinforce_update(
    params: &ParameterVector,
    trajectory: &Trajectory,
    discount: f64,
    alpha: f64,
) -> Result<(ParameterVector, f64)> {
    let (grad, loss) = policy_gradient(params, trajectory, discount)?;
    Ok((sgd_step(params, &grad, alpha)?, loss))
}

/// A per-cell REINFORCE controller. Keeps one trajectory per served user and
/// applies a single SGD step on the user-averaged gradient at episode end.
#[derive(Debug, Clone)]
pub struct ReinforceAgent {
    params: ParameterVector,
    config: ReinforceConfig,
    rng: ChaCha12Rng,
    trajectories: Vec<Trajectory>,
    pending: Vec<(Vec<f64>, usize, f64)>,
}

impl ReinforceAgent {
    pub fn new(
        spec: &NetworkSpec,
        users: usize,
        config: ReinforceConfig,
        init_rng: &mut ChaCha12Rng,
        explore_rng: ChaCha12Rng,
    ) -> Result<Self> {
        config.validate()?;
        if spec.head != OutputHead::Softmax {
            return Err(Error::InvalidParameter(
                "a REINFORCE agent needs a softmax head".into(),
            ));
        }
        if users == 0 {
            return Err(Error::InvalidParameter("users must be at least 1".into()));
        }
        Ok(Self {
            params: init_params(spec, init_rng),
            config,
            rng: explore_rng,
            trajectories: vec![Trajectory::default(); users],
            pending: Vec::new(),
        })
    }

    pub fn parameters(&self) -> &ParameterVector {
        &self.params
    }

    /// Sample one power level per served user and remember the log-probs
    /// until the slot's reward arrives.
    pub fn act(&mut self, observation: &Observation) -> Result<Vec<usize>> {
        debug_assert!(self.pending.is_empty(), "record_reward not called");
        let mut actions = Vec::with_capacity(observation.per_user.len());
        for features in &observation.per_user {
            let (action, log_prob) =
                reinforce_select_action(&self.params, features, &mut self.rng)?;
            self.pending.push((features.clone(), action, log_prob));
            actions.push(action);
        }
        Ok(actions)
    }

    /// Complete the pending slot with the cell reward shared by all users.
    pub fn record_reward(&mut self, reward: f64) {
        for (user, (observation, action, log_prob)) in self.pending.drain(..).enumerate() {
            self.trajectories[user].steps.push(TrajectoryStep {
                observation,
                action,
                log_prob,
                reward,
            });
        }
    }

    /// Episode-end update: average the per-user policy gradients and take one
    /// SGD step. Returns the mean loss, or None when nothing was recorded
    /// (for example after a mid-episode synchronization discarded the trace).
    pub fn finish_episode(&mut self) -> Result<Option<f64>> {
        self.pending.clear();
        let active: Vec<&Trajectory> =
            self.trajectories.iter().filter(|t| !t.is_empty()).collect();
        if active.is_empty() {
            return Ok(None);
        }
        let mut grad = ParameterVector::zeros(self.params.spec.clone());
        let mut loss = 0.0;
        for trajectory in &active {
            let (g, l) = policy_gradient(&self.params, trajectory, self.config.discount)?;
            for (acc, v) in grad.values.iter_mut().zip(&g.values) {
                *acc += v;
            }
            loss += l;
        }
        let scale = 1.0 / active.len() as f64;
        for v in grad.values.iter_mut() {
            *v *= scale;
        }
        self.params = sgd_step(&self.params, &grad, self.config.learning_rate)?;
        for t in self.trajectories.iter_mut() {
            t.steps.clear();
        }
        Ok(Some(loss * scale))
    }

    /// Drop the in-flight episode trace. Called when broadcast parameters
    /// replace the policy that generated it.
    pub fn discard_in_flight(&mut self) {
        self.pending.clear();
        for t in self.trajectories.iter_mut() {
            t.steps.clear();
        }
    }

    /// Adopt broadcast parameters. Identical parameters are a no-op; changed
    /// parameters make the stored log-probabilities off-policy, so the
    /// in-flight trajectory is discarded.
    pub fn receive_parameters(&mut self, global: &ParameterVector) {
        if global != &self.params {
            self.params = global.clone();
            self.discard_in_flight();
        }
    }
}
