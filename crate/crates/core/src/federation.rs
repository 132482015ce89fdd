//! The central unit: collects agents' parameter vectors on a fixed slot
//! schedule, computes the user-count-weighted average, and broadcasts the
//! global model back. Synchronization is a barrier with full participation;
//! the distributed baseline never aggregates.

use std::time::{Duration, Instant};

use crate::agents::{DqnAgent, ReinforceAgent};
use crate::error::{Error, Result};
use crate::neural::ParameterVector;
use crate::seeding::fnv1a64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FederationMode {
    Federated,
    Distributed,
}

#[derive(Debug, Clone)]
pub struct FederationConfig {
    /// Aggregation period in environment slots.
    pub xi: usize,
    pub mode: FederationMode,
    /// Served-user count per cell; the contribution weights.
    pub user_counts: Vec<usize>,
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.xi == 0 {
            return Err(Error::InvalidParameter("xi must be at least 1".into()));
        }
        if self.user_counts.is_empty() {
            return Err(Error::Empty("user_counts"));
        }
        if self.user_counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidParameter(
                "every cell must serve at least one user".into(),
            ));
        }
        Ok(())
    }
}

/// One completed aggregation round.
#[derive(Debug, Clone)]
pub struct FederationRound {
    pub round_index: usize,
    /// Environment slot at which the round ran.
    pub global_step: u64,
    pub contributors: Vec<usize>,
    pub global: ParameterVector,
    pub duration: Duration,
    pub checksums_before: Vec<u64>,
    pub checksums_after: Vec<u64>,
}

/// Normalized contribution weights `l_i / sum_j l_j`.
pub fn contribution_weights(user_counts: &[usize]) -> Result<Vec<f64>> {
    if user_counts.is_empty() {
        return Err(Error::Empty("user_counts"));
    }
    if user_counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidParameter(
            "user counts must be at least 1".into(),
        ));
    }
    let total: usize = user_counts.iter().sum();
    Ok(user_counts
        .iter()
        .map(|&c| c as f64 / total as f64)
        .collect())
}

/// Elementwise weighted mean of parameter vectors sharing one shape.
///
/// Two fast paths keep the operation exactly idempotent: bit-identical
/// inputs come back unchanged, and a weight vector with a single 1.0 entry
/// returns that contributor as-is.
pub fn aggregate(params: &[&ParameterVector], weights: &[f64]) -> Result<ParameterVector> {
    if params.is_empty() {
        return Err(Error::Empty("params"));
    }
    if params.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: params.len(),
            actual: weights.len(),
        });
    }
    let spec = &params[0].spec;
    for p in params {
        if &p.spec != spec {
            return Err(Error::SpecMismatch);
        }
    }
    if params.iter().all(|p| p.values == params[0].values) {
        return Ok(params[0].clone());
    }
    let lone = weights.iter().position(|&w| w != 0.0);
    if let Some(i) = lone {
        if weights[i] == 1.0 && weights.iter().enumerate().all(|(j, &w)| j == i || w == 0.0) {
            return Ok(params[i].clone());
        }
    }
    let mut values = vec![0.0; params[0].values.len()];
    for (p, &w) in params.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (acc, &v) in values.iter_mut().zip(&p.values) {
            *acc += w * v;
        }
    }
    Ok(ParameterVector {
        values,
        spec: spec.clone(),
    })
}

/// Whether a round is due after environment slot `global_step` (1-based).
pub fn should_aggregate(global_step: u64, config: &FederationConfig) -> bool {
    config.mode == FederationMode::Federated && global_step % config.xi as u64 == 0
}

/// Anything that can contribute parameters to a round and adopt the result.
pub trait FederatedAgent {
    fn parameters(&self) -> &ParameterVector;
    /// Replace the live parameters with the broadcast global model. Adopting
    /// a vector identical to the current one must be a no-op.
    fn receive_parameters(&mut self, global: &ParameterVector);
}

impl FederatedAgent for DqnAgent {
    fn parameters(&self) -> &ParameterVector {
        DqnAgent::parameters(self)
    }

    fn receive_parameters(&mut self, global: &ParameterVector) {
        DqnAgent::receive_parameters(self, global)
    }
}

impl FederatedAgent for ReinforceAgent {
    fn parameters(&self) -> &ParameterVector {
        ReinforceAgent::parameters(self)
    }

    fn receive_parameters(&mut self, global: &ParameterVector) {
        ReinforceAgent::receive_parameters(self, global)
    }
}

/// FNV-1a checksum over the little-endian parameter bytes; recorded in the
/// round log before and after each broadcast.
pub fn param_checksum(params: &ParameterVector) -> u64 {
    let mut bytes = Vec::with_capacity(params.values.len() * 8);
    for v in &params.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fnv1a64(&bytes)
}

/// Run one synchronous round: average all agents' parameters with the given
/// weights and broadcast the result. Full participation is required; a
/// weight-count mismatch aborts the round.
pub fn synchronize<A: FederatedAgent>(
    agents: &mut [A],
    weights: &[f64],
    round_index: usize,
    global_step: u64,
) -> Result<FederationRound> {
    if agents.is_empty() {
        return Err(Error::Empty("agents"));
    }
    if agents.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            actual: agents.len(),
        });
    }
    let start = Instant::now();
    let checksums_before: Vec<u64> = agents.iter().map(|a| param_checksum(a.parameters())).collect();
    let vectors: Vec<&ParameterVector> = agents.iter().map(|a| a.parameters()).collect();
    let global = aggregate(&vectors, weights)?;
    for agent in agents.iter_mut() {
        agent.receive_parameters(&global);
    }
    let checksums_after: Vec<u64> = agents.iter().map(|a| param_checksum(a.parameters())).collect();
    Ok(FederationRound {
        round_index,
        global_step,
        contributors: (0..weights.len()).collect(),
        global,
        duration: start.elapsed(),
        checksums_before,
        checksums_after,
    })
}
