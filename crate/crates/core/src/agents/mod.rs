//! The trainable controllers: a DQN agent (epsilon-greedy behavior, replay,
//! TD targets, MSE loss) and a REINFORCE agent (stochastic softmax policy,
//! discounted-return policy gradient).
//!
//! Each base station owns one agent. An agent serves `L` users with a single
//! shared network evaluated once per user on that user's observation slice;
//! the per-user gradients of one update are averaged before the SGD step.

mod dqn;
mod reinforce;

pub use dqn::{
    dqn_select_action, dqn_td_target, dqn_update, epsilon_schedule, DqnAgent, DqnConfig,
    ReplayBuffer,
};
pub use reinforce::{
    reinforce_returns, reinforce_select_action, reinforce_update, ReinforceAgent, ReinforceConfig,
};

/// One learning sample: `(s, a, r, s')` plus the terminal flag.
#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_observation: Vec<f64>,
    pub terminal: bool,
}

/// One slot of an on-policy episode trace.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub observation: Vec<f64>,
    pub action: usize,
    /// Log-probability of the taken action under the policy that chose it.
    pub log_prob: f64,
    pub reward: f64,
}

/// An ordered episode trace for one served user.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
