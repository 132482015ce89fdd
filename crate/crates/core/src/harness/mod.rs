//! Experiment orchestration: wires channel, environment, agents and the
//! central unit together, runs seeded multi-episode training, logs metrics
//! and federation rounds to CSV, and emits SVG learning curves.

pub mod config;
pub mod metrics;
pub mod plot;

use std::path::{Path, PathBuf};

pub use config::{AgentKind, ModeKind, RunConfig};
pub use metrics::{
    compare_trends, convergence_episode, final_window_mean, moving_average, MetricsRecord,
    MetricsTable, TrendDirection, TrendReport, SECRECY_COLUMN, SECRECY_SMOOTHED_COLUMN,
};
pub use plot::{emit_plot, render_svg};

use crate::agents::{DqnAgent, ReinforceAgent, Transition};
use crate::channel::Topology;
use crate::env::{Environment, Observation, PowerAction};
use crate::error::{Error, Result};
use crate::federation::{
    contribution_weights, should_aggregate, synchronize, FederatedAgent, FederationRound,
};
use crate::neural::{save_params, ParameterVector};
use crate::seeding::{mix, stream};

/// One per-cell controller of the configured kind.
pub enum Controller {
    Dqn(DqnAgent),
    Reinforce(ReinforceAgent),
}

impl Controller {
    pub fn new(config: &RunConfig, cell: usize) -> Result<Self> {
        let spec = config.network_spec()?;
        let mut init_rng = stream(config.run.seed, "agent-init", cell as u64);
        let explore_rng = stream(config.run.seed, "agent-explore", cell as u64);
        Ok(match config.run.agent {
            AgentKind::Dqn => Controller::Dqn(DqnAgent::new(
                &spec,
                config.dqn_config(),
                &mut init_rng,
                explore_rng,
            )?),
            AgentKind::Reinforce => Controller::Reinforce(ReinforceAgent::new(
                &spec,
                config.topology.users_per_cell,
                config.reinforce_config(),
                &mut init_rng,
                explore_rng,
            )?),
        })
    }

    pub fn act(&mut self, observation: &Observation) -> Result<Vec<usize>> {
        match self {
            Controller::Dqn(agent) => agent.act(observation),
            Controller::Reinforce(agent) => agent.act(observation),
        }
    }

    /// Feed back one slot's outcome. Returns the training loss when an
    /// update happened in this slot (DQN trains per slot).
    pub fn observe(
        &mut self,
        observation: &Observation,
        actions: &[usize],
        reward: f64,
        next_observation: &Observation,
        terminal: bool,
    ) -> Result<Option<f64>> {
        match self {
            Controller::Dqn(agent) => {
                let transitions: Vec<Transition> = observation
                    .per_user
                    .iter()
                    .zip(actions)
                    .zip(&next_observation.per_user)
                    .map(|((obs, &action), next)| Transition {
                        observation: obs.clone(),
                        action,
                        reward,
                        next_observation: next.clone(),
                        terminal,
                    })
                    .collect();
                agent.learn(transitions)
            }
            Controller::Reinforce(agent) => {
                agent.record_reward(reward);
                Ok(None)
            }
        }
    }

    /// Episode-boundary update; only REINFORCE trains here.
    pub fn finish_episode(&mut self) -> Result<Option<f64>> {
        match self {
            Controller::Dqn(_) => Ok(None),
            Controller::Reinforce(agent) => agent.finish_episode(),
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Controller::Dqn(agent) => Some(agent.epsilon()),
            Controller::Reinforce(_) => None,
        }
    }
}

impl FederatedAgent for Controller {
    fn parameters(&self) -> &ParameterVector {
        match self {
            Controller::Dqn(agent) => agent.parameters(),
            Controller::Reinforce(agent) => agent.parameters(),
        }
    }

    fn receive_parameters(&mut self, global: &ParameterVector) {
        match self {
            Controller::Dqn(agent) => agent.receive_parameters(global),
            Controller::Reinforce(agent) => agent.receive_parameters(global),
        }
    }
}

/// Results and file locations of one experiment run.
pub struct RunOutput {
    pub config: RunConfig,
    pub episodes: Vec<MetricsRecord>,
    pub rounds: Vec<FederationRound>,
    pub output_dir: PathBuf,
    pub metrics_path: PathBuf,
    pub rounds_path: PathBuf,
    pub config_path: PathBuf,
    pub checkpoint_paths: Vec<PathBuf>,
}

impl RunOutput {
    /// Per-episode network secrecy sum, the headline learning curve.
    pub fn secrecy_series(&self) -> Vec<f64> {
        self.episodes.iter().map(|r| r.network_secrecy_sum).collect()
    }
}

fn write_rounds_csv(path: &Path, cells: usize, rounds: &[FederationRound]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["round".to_string(), "global_step".to_string()];
    for b in 0..cells {
        header.push(format!("agent_{b}_before"));
    }
    for b in 0..cells {
        header.push(format!("agent_{b}_after"));
    }
    writer.write_record(header)?;
    for round in rounds {
        let mut row = vec![round.round_index.to_string(), round.global_step.to_string()];
        row.extend(round.checksums_before.iter().map(|c| format!("{c:016x}")));
        row.extend(round.checksums_after.iter().map(|c| format!("{c:016x}")));
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Run one experiment end to end. Rejects an invalid configuration before
/// touching the filesystem; the run itself is fully deterministic for a
/// given `(seed, config)` pair on one platform.
pub fn run_experiment(config: &RunConfig) -> Result<RunOutput> {
    config.validate().map_err(|e| Error::Config(format!("invalid config: {e}")))?;

    let output_dir = config.run.output_dir.clone();
    std::fs::create_dir_all(&output_dir)?;
    let config_path = output_dir.join("config_resolved.toml");
    std::fs::write(&config_path, config.to_toml_string()?)?;

    let cells = config.topology.cells;
    let users = config.topology.users_per_cell;
    let topology = Topology::grid(cells, users, config.topology.cell_radius)?;
    let mut env = Environment::new(topology, config.fading_params(), config.env_config())?;
    let mut agents: Vec<Controller> = (0..cells)
        .map(|b| Controller::new(config, b))
        .collect::<Result<_>>()?;
    let federation = config.federation_config();
    let weights = contribution_weights(&federation.user_counts)?;

    let slots = config.env.slots_per_episode;
    let master_seed = config.run.seed;
    let mut global_step: u64 = 0;
    let mut episode_records = Vec::with_capacity(config.run.episodes);
    let mut step_records: Vec<MetricsRecord> = Vec::new();
    let mut rounds: Vec<FederationRound> = Vec::new();

    for episode in 0..config.run.episodes {
        let episode_seed = mix(master_seed, "episode", episode as u64);
        let mut observations = env.reset(episode_seed)?;
        let mut secrecy_acc = vec![0.0; cells];
        let mut network_acc = 0.0;
        let mut reward_acc = vec![0.0; cells];
        let mut loss_acc = vec![0.0; cells];
        let mut loss_counts = vec![0usize; cells];

        for t in 0..slots {
            let mut levels = Vec::with_capacity(cells);
            for (b, agent) in agents.iter_mut().enumerate() {
                levels.push(agent.act(&observations[b])?);
            }
            let outcome = env.step(&PowerAction { levels: levels.clone() })?;
            global_step += 1;

            let mut slot_losses: Vec<Option<f64>> = Vec::with_capacity(cells);
            for (b, agent) in agents.iter_mut().enumerate() {
                let loss = agent.observe(
                    &observations[b],
                    &levels[b],
                    outcome.rewards[b],
                    &outcome.observations[b],
                    outcome.terminal,
                )?;
                slot_losses.push(loss);
            }
            // The episode-boundary update runs before a round that falls on
            // the final slot, so a completed on-policy trajectory is never
            // discarded.
            if t + 1 == slots {
                for (b, agent) in agents.iter_mut().enumerate() {
                    if let Some(loss) = agent.finish_episode()? {
                        slot_losses[b] = Some(loss);
                    }
                }
            }
            if should_aggregate(global_step, &federation) {
                rounds.push(synchronize(&mut agents, &weights, rounds.len(), global_step)?);
            }

            for b in 0..cells {
                secrecy_acc[b] += outcome.cell_secrecy_sum[b];
                reward_acc[b] += outcome.rewards[b];
                if let Some(loss) = slot_losses[b] {
                    loss_acc[b] += loss;
                    loss_counts[b] += 1;
                }
            }
            network_acc += outcome.network_secrecy_sum;

            if config.run.step_records {
                step_records.push(MetricsRecord {
                    episode,
                    global_step,
                    epsilon: agents[0].epsilon(),
                    network_secrecy_sum: outcome.network_secrecy_sum,
                    cell_secrecy: outcome.cell_secrecy_sum.clone(),
                    agent_reward: outcome.rewards.clone(),
                    agent_loss: slot_losses.clone(),
                });
            }

            observations = outcome.observations;
        }

        let inv = 1.0 / slots as f64;
        episode_records.push(MetricsRecord {
            episode,
            global_step,
            epsilon: agents[0].epsilon(),
            network_secrecy_sum: network_acc * inv,
            cell_secrecy: secrecy_acc.iter().map(|s| s * inv).collect(),
            agent_reward: reward_acc.iter().map(|r| r * inv).collect(),
            agent_loss: (0..cells)
                .map(|b| {
                    (loss_counts[b] > 0).then(|| loss_acc[b] / loss_counts[b] as f64)
                })
                .collect(),
        });
    }

    let metrics_path = output_dir.join("metrics.csv");
    metrics::write_metrics_csv(
        &metrics_path,
        cells,
        &episode_records,
        config.run.step_records.then_some(step_records.as_slice()),
        config.run.smoothing_window,
    )?;
    let rounds_path = output_dir.join("rounds.csv");
    write_rounds_csv(&rounds_path, cells, &rounds)?;
    let mut checkpoint_paths = Vec::with_capacity(cells);
    for (b, agent) in agents.iter().enumerate() {
        let path = output_dir.join(format!("agent_{b}.nnp"));
        save_params(agent.parameters(), &path)?;
        checkpoint_paths.push(path);
    }

    Ok(RunOutput {
        config: config.clone(),
        episodes: episode_records,
        rounds,
        output_dir,
        metrics_path,
        rounds_path,
        config_path,
        checkpoint_paths,
    })
}

/// One sweep grid point.
pub struct SweepEntry {
    pub key: String,
    pub value: f64,
    pub repetition: usize,
    pub seed: u64,
    pub final_window_mean: f64,
    pub metrics_path: PathBuf,
}

/// Vary one numeric parameter over a list of values, running
/// `run.repetitions` seeded repetitions per value. Each repetition's seed is
/// derived from the base seed so grid points are independently reproducible.
pub fn run_sweep(
    base: &RunConfig,
    key: &str,
    values: &[f64],
    output_dir: &Path,
) -> Result<Vec<SweepEntry>> {
    if values.is_empty() {
        return Err(Error::Empty("sweep values"));
    }
    let mut entries = Vec::new();
    for &value in values {
        let mut with_value = base.clone();
        with_value.set_param(key, value)?;
        for rep in 0..base.run.repetitions {
            let mut cfg = with_value.clone();
            cfg.run.seed = mix(base.run.seed, "repetition", rep as u64);
            cfg.run.output_dir = output_dir.join(format!(
                "{}-{}",
                key.replace('.', "-"),
                value
            )).join(format!("rep-{rep}"));
            let output = run_experiment(&cfg)?;
            entries.push(SweepEntry {
                key: key.to_string(),
                value,
                repetition: rep,
                seed: cfg.run.seed,
                final_window_mean: final_window_mean(
                    &output.secrecy_series(),
                    base.run.smoothing_window,
                ),
                metrics_path: output.metrics_path,
            });
        }
    }
    let summary_path = output_dir.join("sweep_summary.csv");
    let mut writer = csv::Writer::from_path(&summary_path)?;
    writer.write_record(["param", "value", "repetition", "seed", "final_window_mean"])?;
    for e in &entries {
        writer.write_record([
            e.key.clone(),
            format!("{}", e.value),
            e.repetition.to_string(),
            e.seed.to_string(),
            format!("{}", e.final_window_mean),
        ])?;
    }
    writer.flush()?;
    Ok(entries)
}

/// Load the named metric from two sets of metrics CSVs and compare their
/// final-window means.
pub fn compare_csv_sets(
    paths_a: &[PathBuf],
    paths_b: &[PathBuf],
    metric: &str,
    window: usize,
) -> Result<TrendReport> {
    let load = |paths: &[PathBuf]| -> Result<Vec<Vec<f64>>> {
        paths
            .iter()
            .map(|p| MetricsTable::load(p)?.episode_column(metric))
            .collect()
    };
    compare_trends(&load(paths_a)?, &load(paths_b)?, metric, window)
}
