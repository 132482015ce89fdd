//! Run configuration: TOML file with one section per module, strict about
//! unknown keys so a typo never silently falls back to a default. Defaults
//! follow the reference parameter set (25 cells, 4 users each, xi = 100,
//! 38 dBm, 10 power levels, unit noise, learning rate 0.001, discount 0.99,
//! fading rate 1.5); the desk profile is a small configuration sized for
//! laptop-scale experiments and the acceptance suite.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{DqnConfig, ReinforceConfig};
use crate::channel::FadingParams;
use crate::env::{EnvConfig, OBS_FEATURES};
use crate::error::{Error, Result};
use crate::federation::{FederationConfig, FederationMode};
use crate::neural::{NetworkSpec, OutputHead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Dqn,
    Reinforce,
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentKind::Dqn => write!(f, "dqn"),
            AgentKind::Reinforce => write!(f, "reinforce"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Federated,
    Distributed,
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModeKind::Federated => write!(f, "federated"),
            ModeKind::Distributed => write!(f, "distributed"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub episodes: usize,
    pub seed: u64,
    pub agent: AgentKind,
    pub mode: ModeKind,
    pub output_dir: PathBuf,
    pub smoothing_window: usize,
    pub repetitions: usize,
    /// Also write one row per slot to the metrics CSV.
    pub step_records: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            episodes: 500,
            seed: 1,
            agent: AgentKind::Reinforce,
            mode: ModeKind::Federated,
            output_dir: PathBuf::from("runs/latest"),
            smoothing_window: 50,
            repetitions: 5,
            step_records: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySection {
    pub cells: usize,
    pub users_per_cell: usize,
    pub cell_radius: f64,
}

impl Default for TopologySection {
    fn default() -> Self {
        Self {
            cells: 25,
            users_per_cell: 4,
            cell_radius: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub lambda_user: f64,
    pub lambda_eve: f64,
    pub path_loss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub reference_distance: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let d = FadingParams::default();
        Self {
            lambda_user: d.lambda_user,
            lambda_eve: d.lambda_eve,
            path_loss_exponent: d.path_loss_exponent,
            shadowing_sigma_db: d.shadowing_sigma_db,
            reference_distance: d.reference_distance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub p_max_dbm: f64,
    pub power_levels: usize,
    pub noise_power: f64,
    pub slots_per_episode: usize,
    pub discount: f64,
    pub frozen_channel: bool,
    pub gain_floor_db: f64,
    pub gain_ceiling_db: f64,
    pub secrecy_cap: f64,
}

impl Default for EnvSection {
    fn default() -> Self {
        let d = EnvConfig::default();
        Self {
            p_max_dbm: d.p_max_dbm,
            power_levels: d.power_levels,
            noise_power: d.noise_power,
            slots_per_episode: d.slots_per_episode,
            discount: d.discount,
            frozen_channel: d.frozen_channel,
            gain_floor_db: d.gain_floor_db,
            gain_ceiling_db: d.gain_ceiling_db,
            secrecy_cap: d.secrecy_cap,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub hidden_layers: Vec<usize>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            hidden_layers: vec![64, 64],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DqnSection {
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync_period: usize,
    pub use_replay: bool,
    pub learning_rate: f64,
    /// Override of the environment discount for TD targets.
    pub discount: Option<f64>,
}

impl Default for DqnSection {
    fn default() -> Self {
        let d = DqnConfig::default();
        Self {
            epsilon_start: d.epsilon_start,
            epsilon_end: d.epsilon_end,
            epsilon_decay: d.epsilon_decay,
            replay_capacity: d.replay_capacity,
            batch_size: d.batch_size,
            target_sync_period: d.target_sync_period,
            use_replay: d.use_replay,
            learning_rate: d.learning_rate,
            discount: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ReinforceSection {
    pub learning_rate: f64,
    /// Override of the environment discount for episode returns.
    pub discount: Option<f64>,
}

impl Default for ReinforceSection {
    fn default() -> Self {
        Self {
            learning_rate: ReinforceConfig::default().learning_rate,
            discount: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FederationSection {
    pub xi: usize,
}

impl Default for FederationSection {
    fn default() -> Self {
        Self { xi: 100 }
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub topology: TopologySection,
    pub channel: ChannelSection,
    pub env: EnvSection,
    pub network: NetworkSection,
    pub dqn: DqnSection,
    pub reinforce: ReinforceSection,
    pub federation: FederationSection,
}

impl RunConfig {
    /// Small configuration for desk-scale experiments: 4 cells of 2 users,
    /// 4 power levels, 50-slot episodes, with geometry and learning rates
    /// calibrated so the reference comparisons resolve within 500 episodes.
    pub fn desk() -> Self {
        let mut cfg = Self::default();
        cfg.topology.cells = 4;
        cfg.topology.users_per_cell = 2;
        cfg.topology.cell_radius = 1.0;
        cfg.channel.shadowing_sigma_db = 4.0;
        cfg.env.power_levels = 4;
        cfg.env.slots_per_episode = 50;
        cfg.env.discount = 0.5;
        cfg.env.gain_floor_db = -60.0;
        cfg.env.gain_ceiling_db = 20.0;
        cfg.run.episodes = 500;
        cfg.run.repetitions = 5;
        cfg.network.hidden_layers = vec![32, 32];
        cfg.reinforce.learning_rate = 0.06;
        cfg.reinforce.discount = Some(0.9);
        cfg.dqn.learning_rate = 0.005;
        cfg.dqn.epsilon_decay = 0.9995;
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.episodes == 0 {
            return Err(Error::Config("run.episodes must be at least 1".into()));
        }
        if self.run.repetitions == 0 {
            return Err(Error::Config("run.repetitions must be at least 1".into()));
        }
        if self.run.smoothing_window == 0 {
            return Err(Error::Config(
                "run.smoothing_window must be at least 1".into(),
            ));
        }
        if self.topology.cells == 0 || self.topology.users_per_cell == 0 {
            return Err(Error::Config(
                "topology needs at least one cell and one user per cell".into(),
            ));
        }
        if !(self.topology.cell_radius > 0.0) {
            return Err(Error::Config("topology.cell_radius must be positive".into()));
        }
        if self.network.hidden_layers.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer sizes must be at least 1".into()));
        }
        self.fading_params()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.env_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.dqn_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.reinforce_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.federation_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn fading_params(&self) -> FadingParams {
        FadingParams {
            lambda_user: self.channel.lambda_user,
            lambda_eve: self.channel.lambda_eve,
            path_loss_exponent: self.channel.path_loss_exponent,
            shadowing_sigma_db: self.channel.shadowing_sigma_db,
            reference_distance: self.channel.reference_distance,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            p_max_dbm: self.env.p_max_dbm,
            power_levels: self.env.power_levels,
            noise_power: self.env.noise_power,
            slots_per_episode: self.env.slots_per_episode,
            discount: self.env.discount,
            frozen_channel: self.env.frozen_channel,
            gain_floor_db: self.env.gain_floor_db,
            gain_ceiling_db: self.env.gain_ceiling_db,
            secrecy_cap: self.env.secrecy_cap,
        }
    }

    pub fn dqn_config(&self) -> DqnConfig {
        DqnConfig {
            epsilon_start: self.dqn.epsilon_start,
            epsilon_end: self.dqn.epsilon_end,
            epsilon_decay: self.dqn.epsilon_decay,
            replay_capacity: self.dqn.replay_capacity,
            batch_size: self.dqn.batch_size,
            target_sync_period: self.dqn.target_sync_period,
            discount: self.dqn.discount.unwrap_or(self.env.discount),
            learning_rate: self.dqn.learning_rate,
            use_replay: self.dqn.use_replay,
        }
    }

    pub fn reinforce_config(&self) -> ReinforceConfig {
        ReinforceConfig {
            discount: self.reinforce.discount.unwrap_or(self.env.discount),
            learning_rate: self.reinforce.learning_rate,
        }
    }

    pub fn federation_config(&self) -> FederationConfig {
        FederationConfig {
            xi: self.federation.xi,
            mode: match self.run.mode {
                ModeKind::Federated => FederationMode::Federated,
                ModeKind::Distributed => FederationMode::Distributed,
            },
            user_counts: vec![self.topology.users_per_cell; self.topology.cells],
        }
    }

    /// Network shape for the configured agent kind: per-user observation
    /// features in, one output per power level.
    pub fn network_spec(&self) -> Result<NetworkSpec> {
        let mut layers = Vec::with_capacity(self.network.hidden_layers.len() + 2);
        layers.push(OBS_FEATURES);
        layers.extend_from_slice(&self.network.hidden_layers);
        layers.push(self.env.power_levels);
        let head = match self.run.agent {
            AgentKind::Dqn => OutputHead::Linear,
            AgentKind::Reinforce => OutputHead::Softmax,
        };
        NetworkSpec::new(layers, head)
    }

    /// Set one numeric parameter by `section.key` path (used by the sweep
    /// command). Integer-valued fields reject fractional values.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<()> {
        let as_usize = |v: f64| -> Result<usize> {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "{key} needs a non-negative integer, got {v}"
                )));
            }
            Ok(v as usize)
        };
        match key {
            "federation.xi" | "xi" => self.federation.xi = as_usize(value)?,
            "topology.cells" | "cells" => self.topology.cells = as_usize(value)?,
            "topology.users_per_cell" | "users_per_cell" => {
                self.topology.users_per_cell = as_usize(value)?
            }
            "topology.cell_radius" | "cell_radius" => self.topology.cell_radius = value,
            "env.power_levels" | "power_levels" => self.env.power_levels = as_usize(value)?,
            "env.slots_per_episode" | "slots_per_episode" => {
                self.env.slots_per_episode = as_usize(value)?
            }
            "env.p_max_dbm" | "p_max_dbm" => self.env.p_max_dbm = value,
            "run.episodes" | "episodes" => self.run.episodes = as_usize(value)?,
            "dqn.learning_rate" => self.dqn.learning_rate = value,
            "reinforce.learning_rate" => self.reinforce.learning_rate = value,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter '{other}'"
                )))
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_parameters() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.topology.cells, 25);
        assert_eq!(cfg.topology.users_per_cell, 4);
        assert_eq!(cfg.federation.xi, 100);
        assert_eq!(cfg.env.p_max_dbm, 38.0);
        assert_eq!(cfg.env.power_levels, 10);
        assert_eq!(cfg.env.noise_power, 1.0);
        assert_eq!(cfg.dqn.learning_rate, 0.001);
        assert_eq!(cfg.env.discount, 0.99);
        assert_eq!(cfg.channel.lambda_user, 1.5);
        assert_eq!(cfg.channel.lambda_eve, 1.5);
        cfg.validate().unwrap();
        RunConfig::desk().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_preserves_everything() {
        let cfg = RunConfig::desk();
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let err = RunConfig::from_toml_str("[run]\nepisodess = 3\n").unwrap_err();
        assert!(err.to_string().contains("episodess"), "{err}");
        assert!(RunConfig::from_toml_str("[typo_section]\nx = 1\n").is_err());
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = RunConfig::from_toml_str("[topology]\ncells = 3\n").unwrap();
        assert_eq!(cfg.topology.cells, 3);
        assert_eq!(cfg.topology.users_per_cell, 4);
        assert_eq!(cfg.run.episodes, 500);
    }

    #[test]
    fn validation_rejects_nonsense() {
        let mut cfg = RunConfig::desk();
        cfg.run.episodes = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::desk();
        cfg.env.power_levels = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::desk();
        cfg.dqn.epsilon_end = 2.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sweep_parameters_apply() {
        let mut cfg = RunConfig::desk();
        cfg.set_param("xi", 10.0).unwrap();
        assert_eq!(cfg.federation.xi, 10);
        cfg.set_param("topology.cells", 9.0).unwrap();
        assert_eq!(cfg.topology.cells, 9);
        assert!(cfg.set_param("xi", 9.5).is_err());
        assert!(cfg.set_param("nonsense", 1.0).is_err());
    }
}
