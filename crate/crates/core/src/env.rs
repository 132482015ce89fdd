//! The multi-cell MDP: maps discrete power levels to transmit powers,
//! computes interference, SINRs, rates, secrecy capacities and per-cell
//! rewards for every slot, and assembles the per-agent observations.

use rand_chacha::ChaCha12Rng;

use crate::channel::{draw_channel_state, ChannelRealization, FadingParams, Topology};
use crate::error::{Error, Result};
use crate::seeding::stream;

/// Features per served user in an agent's observation, in order: own serving
/// gain, own-cell wiretap gain, previous transmit power, previous secrecy
/// rate, previous aggregate interference.
pub const OBS_FEATURES: usize = 5;

/// Environment parameters.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    /// Maximum transmit power in dBm; converted to linear watts internally.
    pub p_max_dbm: f64,
    /// Number of discrete power levels (at least 2).
    pub power_levels: usize,
    /// Noise variance, linear.
    pub noise_power: f64,
    /// Slots per episode.
    pub slots_per_episode: usize,
    /// Discount factor of the MDP; consumed by the agents.
    pub discount: f64,
    /// Keep the slot-0 channel for the whole episode (oracle test mode).
    pub frozen_channel: bool,
    /// Lower edge of the dB dynamic range used to encode gains into [-1, 1].
    pub gain_floor_db: f64,
    /// Upper edge of that range.
    pub gain_ceiling_db: f64,
    /// Secrecy rates are divided by this cap and clamped when encoded.
    pub secrecy_cap: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            p_max_dbm: 38.0,
            power_levels: 10,
            noise_power: 1.0,
            slots_per_episode: 100,
            discount: 0.99,
            frozen_channel: false,
            gain_floor_db: -120.0,
            gain_ceiling_db: 0.0,
            secrecy_cap: 10.0,
        }
    }
}

impl EnvConfig {
    /// Maximum transmit power in watts: `10^((dBm - 30) / 10)`.
    pub fn p_max_linear(&self) -> f64 {
        10f64.powf((self.p_max_dbm - 30.0) / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p_max_dbm.is_finite() {
            return Err(Error::InvalidParameter("p_max_dbm must be finite".into()));
        }
        if self.power_levels < 2 {
            return Err(Error::InvalidParameter(
                "power_levels must be at least 2".into(),
            ));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::InvalidParameter(
                "noise_power must be positive".into(),
            ));
        }
        if self.slots_per_episode == 0 {
            return Err(Error::InvalidParameter(
                "slots_per_episode must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::InvalidParameter(
                "discount must lie in [0, 1]".into(),
            ));
        }
        if !(self.gain_floor_db < self.gain_ceiling_db) {
            return Err(Error::InvalidParameter(
                "gain_floor_db must be below gain_ceiling_db".into(),
            ));
        }
        if !(self.secrecy_cap > 0.0) {
            return Err(Error::InvalidParameter(
                "secrecy_cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-agent observation: one feature vector per served user.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub per_user: Vec<Vec<f64>>,
}

/// Discrete power-level index per (cell, user).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerAction {
    pub levels: Vec<Vec<usize>>,
}

impl PowerAction {
    fn validate(&self, cells: usize, users: usize, power_levels: usize) -> Result<()> {
        if self.levels.len() != cells {
            return Err(Error::DimensionMismatch {
                expected: cells,
                actual: self.levels.len(),
            });
        }
        for row in &self.levels {
            if row.len() != users {
                return Err(Error::DimensionMismatch {
                    expected: users,
                    actual: row.len(),
                });
            }
            for &idx in row {
                if idx >= power_levels {
                    return Err(Error::ActionOutOfRange {
                        index: idx,
                        levels: power_levels,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Everything computed for one slot.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Index of the slot that was executed.
    pub slot: usize,
    /// Applied transmit powers, watts, per (cell, user).
    pub powers: Vec<Vec<f64>>,
    /// Aggregate interference at each user, linear.
    pub interference: Vec<Vec<f64>>,
    pub user_sinr: Vec<Vec<f64>>,
    pub user_rate: Vec<Vec<f64>>,
    pub eve_sinr: Vec<Vec<f64>>,
    pub eve_rate: Vec<Vec<f64>>,
    /// Secrecy capacity per (cell, user), clamped at zero.
    pub secrecy: Vec<Vec<f64>>,
    pub cell_secrecy_sum: Vec<f64>,
    /// Per-cell reward: own secrecy sum plus all other cells' user rates.
    pub rewards: Vec<f64>,
    pub network_secrecy_sum: f64,
    /// Observation each agent acts on next slot.
    pub observations: Vec<Observation>,
    pub terminal: bool,
}

/// Transmit power for a level index: `index * P_max / (levels - 1)`.
pub fn action_power(index: usize, config: &EnvConfig) -> Result<f64> {
    if index >= config.power_levels {
        return Err(Error::ActionOutOfRange {
            index,
            levels: config.power_levels,
        });
    }
    Ok(index as f64 * config.p_max_linear() / (config.power_levels - 1) as f64)
}

/// Combined intra-cell and inter-cell interference at user `l` of cell `b`.
///
/// Intra-cell: other users of cell `b` weighted by their own serving gains.
/// Inter-cell: every other base station's total transmit power weighted by
/// the gain from that base station to the victim user.
pub fn interference(
    powers: &[Vec<f64>],
    channel: &ChannelRealization,
    cell: usize,
    user: usize,
) -> f64 {
    let mut total = 0.0;
    for (i, &p) in powers[cell].iter().enumerate() {
        if i != user {
            total += p * channel.gain(cell, i, cell);
        }
    }
    for (other, row) in powers.iter().enumerate() {
        if other != cell {
            let cross_gain = channel.gain(other, user, cell);
            for &p in row {
                total += p * cross_gain;
            }
        }
    }
    total
}

/// SINR of a served user.
pub fn sinr_user(power: f64, gain: f64, interference: f64, noise: f64) -> f64 {
    power * gain / (interference + noise)
}

/// Wiretap SINR: worst case, only noise impairs the eavesdropper.
pub fn sinr_eve(power: f64, eve_gain: f64, noise: f64) -> f64 {
    power * eve_gain / noise
}

/// Shannon rate in bits/s/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Secrecy capacity: main-link rate minus wiretap rate, clamped at zero.
pub fn secrecy_capacity(user_rate: f64, eve_rate: f64) -> f64 {
    (user_rate - eve_rate).max(0.0)
}

fn cell_reward(secrecy: &[Vec<f64>], user_rate: &[Vec<f64>], cell: usize) -> f64 {
    let own: f64 = secrecy[cell].iter().sum();
    let others: f64 = user_rate
        .iter()
        .enumerate()
        .filter(|(b, _)| *b != cell)
        .map(|(_, rates)| rates.iter().sum::<f64>())
        .sum();
    own + others
}

/// Reward of cell `b`: its secrecy sum plus the achieved user rates of all
/// other cells.
pub fn reward(outcome: &StepOutcome, cell: usize) -> f64 {
    cell_reward(&outcome.secrecy, &outcome.user_rate, cell)
}

/// Affine dB encoding of a linear power quantity into [-1, 1].
fn encode_db(linear: f64, floor_db: f64, ceiling_db: f64) -> f64 {
    let db = 10.0 * linear.log10(); // log10(0) = -inf clamps to the floor
    let unit = (db - floor_db) / (ceiling_db - floor_db);
    (2.0 * unit - 1.0).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone)]
struct PrevSlot {
    powers: Vec<Vec<f64>>,
    secrecy: Vec<Vec<f64>>,
    interference: Vec<Vec<f64>>,
}

/// The multi-cell environment. One instance is owned by one run; all
/// stochasticity comes from streams derived from the episode seed passed to
/// [`Environment::reset`].
#[derive(Debug, Clone)]
pub struct Environment {
    topology: Topology,
    fading: FadingParams,
    config: EnvConfig,
    slot: usize,
    channel_rng: Option<ChaCha12Rng>,
    realization: Option<ChannelRealization>,
    prev: Option<PrevSlot>,
}

impl Environment {
    pub fn new(topology: Topology, fading: FadingParams, config: EnvConfig) -> Result<Self> {
        config.validate()?;
        fading.validate()?;
        topology.validate()?;
        Ok(Self {
            topology,
            fading,
            config,
            slot: 0,
            channel_rng: None,
            realization: None,
            prev: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn is_terminal(&self) -> bool {
        self.slot >= self.config.slots_per_episode
    }

    /// The gains the next [`Environment::step`] will act on. Available to
    /// oracle tests; agents only ever see the encoded observation features.
    pub fn current_channel(&self) -> Option<&ChannelRealization> {
        self.realization.as_ref()
    }

    /// Start an episode: scatter users and eavesdroppers, reseed the channel
    /// stream, zero the previous-slot features and draw the slot-0 gains.
    pub fn reset(&mut self, episode_seed: u64) -> Result<Vec<Observation>> {
        let mut placement_rng = stream(episode_seed, "placement", 0);
        self.topology.randomize_placements(&mut placement_rng);
        self.topology.validate()?;
        let mut channel_rng = stream(episode_seed, "channel", 0);
        self.realization = Some(draw_channel_state(
            &self.topology,
            &self.fading,
            0,
            &mut channel_rng,
        )?);
        self.channel_rng = Some(channel_rng);
        self.slot = 0;
        self.prev = None;
        Ok(self.build_observations())
    }

    /// Apply one joint action: compute every SINR, rate, secrecy capacity and
    /// reward on the current gains, advance the slot, and (unless frozen)
    /// draw the next slot's gains for the returned observations.
    pub fn step(&mut self, actions: &PowerAction) -> Result<StepOutcome> {
        if self.realization.is_none() {
            return Err(Error::NotReset);
        }
        if self.is_terminal() {
            return Err(Error::EpisodeTerminal);
        }
        let cells = self.topology.cell_count;
        let users = self.topology.users_per_cell;
        actions.validate(cells, users, self.config.power_levels)?;

        let p_max = self.config.p_max_linear();
        let noise = self.config.noise_power;
        let mut powers = vec![vec![0.0; users]; cells];
        for b in 0..cells {
            for l in 0..users {
                powers[b][l] = action_power(actions.levels[b][l], &self.config)?;
            }
        }

        let realization = self.realization.as_ref().unwrap();
        let mut interf = vec![vec![0.0; users]; cells];
        let mut user_sinr = vec![vec![0.0; users]; cells];
        let mut user_rate = vec![vec![0.0; users]; cells];
        let mut eve_sinr = vec![vec![0.0; users]; cells];
        let mut eve_rate = vec![vec![0.0; users]; cells];
        let mut secrecy = vec![vec![0.0; users]; cells];
        for b in 0..cells {
            for l in 0..users {
                let i = interference(&powers, realization, b, l);
                let gs = sinr_user(powers[b][l], realization.gain(b, l, b), i, noise);
                let ge = sinr_eve(powers[b][l], realization.eve_gain[b], noise);
                let ru = rate(gs);
                let re = rate(ge);
                let sec = secrecy_capacity(ru, re);
                // Structural invariants of the action grid and the clamp.
                assert!(powers[b][l] <= p_max * (1.0 + 1e-12));
                assert!(sec >= 0.0);
                interf[b][l] = i;
                user_sinr[b][l] = gs;
                user_rate[b][l] = ru;
                eve_sinr[b][l] = ge;
                eve_rate[b][l] = re;
                secrecy[b][l] = sec;
            }
        }

        let cell_secrecy_sum: Vec<f64> = secrecy.iter().map(|row| row.iter().sum()).collect();
        let rewards: Vec<f64> = (0..cells)
            .map(|b| cell_reward(&secrecy, &user_rate, b))
            .collect();
        let network_secrecy_sum: f64 = cell_secrecy_sum.iter().sum();

        let executed_slot = self.slot;
        self.slot += 1;
        let terminal = self.is_terminal();
        self.prev = Some(PrevSlot {
            powers: powers.clone(),
            secrecy: secrecy.clone(),
            interference: interf.clone(),
        });
        if !terminal && !self.config.frozen_channel {
            let rng = self.channel_rng.as_mut().expect("reset seeded the stream");
            self.realization = Some(draw_channel_state(
                &self.topology,
                &self.fading,
                self.slot,
                rng,
            )?);
        }

        Ok(StepOutcome {
            slot: executed_slot,
            powers,
            interference: interf,
            user_sinr,
            user_rate,
            eve_sinr,
            eve_rate,
            secrecy,
            cell_secrecy_sum,
            rewards,
            network_secrecy_sum,
            observations: self.build_observations(),
            terminal,
        })
    }

    fn build_observations(&self) -> Vec<Observation> {
        let realization = self.realization.as_ref().expect("channel drawn");
        let cells = self.topology.cell_count;
        let users = self.topology.users_per_cell;
        let p_max = self.config.p_max_linear();
        let (floor, ceiling) = (self.config.gain_floor_db, self.config.gain_ceiling_db);
        (0..cells)
            .map(|b| {
                let per_user = (0..users)
                    .map(|l| match &self.prev {
                        Some(prev) => vec![
                            encode_db(realization.gain(b, l, b), floor, ceiling),
                            encode_db(realization.eve_gain[b], floor, ceiling),
                            prev.powers[b][l] / p_max,
                            (prev.secrecy[b][l] / self.config.secrecy_cap).clamp(0.0, 1.0),
                            encode_db(prev.interference[b][l], floor, ceiling),
                        ],
                        // Slot 0: the previous-slot features are exactly zero.
                        None => vec![
                            encode_db(realization.gain(b, l, b), floor, ceiling),
                            encode_db(realization.eve_gain[b], floor, ceiling),
                            0.0,
                            0.0,
                            0.0,
                        ],
                    })
                    .collect();
                Observation { per_user }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(levels: usize, p_max_dbm: f64) -> EnvConfig {
        EnvConfig {
            p_max_dbm,
            power_levels: levels,
            slots_per_episode: 10,
            ..EnvConfig::default()
        }
    }

    fn manual_channel(main: Vec<Vec<Vec<f64>>>, eve: Vec<f64>) -> ChannelRealization {
        ChannelRealization {
            main_gain: main,
            eve_gain: eve,
            slot: 0,
        }
    }

    fn test_env(cells: usize, users: usize, cfg: EnvConfig) -> Environment {
        let topology = Topology::grid(cells, users, 2.0).unwrap();
        Environment::new(topology, FadingParams::default(), cfg).unwrap()
    }

    #[test]
    fn action_power_grid() {
        // 30 dBm is exactly one watt.
        let cfg = config(10, 30.0);
        assert_eq!(action_power(0, &cfg).unwrap(), 0.0);
        let p_max = cfg.p_max_linear();
        assert!((action_power(9, &cfg).unwrap() - p_max).abs() < 1e-15);
        assert!((action_power(1, &cfg).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            action_power(10, &cfg),
            Err(Error::ActionOutOfRange { .. })
        ));
    }

    #[test]
    fn dbm_conversion() {
        let cfg = config(4, 38.0);
        assert!((cfg.p_max_linear() - 10f64.powf(0.8)).abs() < 1e-12);
    }

    #[test]
    fn interference_single_user_network_is_zero() {
        let chan = manual_channel(vec![vec![vec![0.9]]], vec![0.4]);
        assert_eq!(interference(&[vec![1.0]], &chan, 0, 0), 0.0);
    }

    #[test]
    fn interference_intra_cell() {
        // One cell, two users; the other user transmits 1 W through its own
        // serving gain 0.5.
        let mut main = vec![vec![vec![0.0; 1]; 2]; 1];
        main[0][0][0] = 0.9;
        main[0][1][0] = 0.5;
        let chan = manual_channel(main, vec![0.1]);
        let powers = vec![vec![0.0, 1.0]];
        assert!((interference(&powers, &chan, 0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interference_inter_cell() {
        // Two cells, one user each; the neighbor transmits 2 W and reaches
        // the victim with gain 0.25.
        let mut main = vec![vec![vec![0.0; 2]; 1]; 2];
        main[0][0][0] = 0.9;
        main[1][0][1] = 0.8;
        main[1][0][0] = 0.25; // neighbor toward user 0 of cell 0
        main[0][0][1] = 0.1;
        let chan = manual_channel(main, vec![0.1, 0.1]);
        let powers = vec![vec![0.0], vec![2.0]];
        assert!((interference(&powers, &chan, 0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sinr_and_rate_examples() {
        assert_eq!(sinr_user(0.0, 2.0, 1.0, 1.0), 0.0);
        assert_eq!(sinr_user(1.0, 2.0, 0.0, 1.0), 2.0);
        assert_eq!(sinr_user(1.0, 2.0, 1.0, 1.0), 1.0);
        assert_eq!(sinr_eve(0.0, 3.0, 1.0), 0.0);
        assert_eq!(sinr_eve(1.0, 3.0, 1.0), 3.0);
        assert_eq!(sinr_eve(2.0, 3.0, 1.0), 2.0 * sinr_eve(1.0, 3.0, 1.0));
        assert_eq!(rate(0.0), 0.0);
        assert_eq!(rate(1.0), 1.0);
        assert!((rate(3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn secrecy_capacity_clamps() {
        assert!((secrecy_capacity(2.0, 0.5) - 1.5).abs() < 1e-15);
        assert_eq!(secrecy_capacity(0.5, 2.0), 0.0);
        assert_eq!(secrecy_capacity(1.0, 1.0), 0.0);
    }

    #[test]
    fn reward_examples() {
        let secrecy = vec![vec![1.0, 0.5], vec![0.25, 0.0]];
        let rates = vec![vec![1.5, 1.0], vec![1.25, 0.75]];
        // B = 1: reward is the own secrecy sum.
        assert_eq!(cell_reward(&secrecy[..1].to_vec(), &rates[..1].to_vec(), 0), 1.5);
        // B = 2: own secrecy 1.5 plus the other cell's rates 2.0.
        assert!((cell_reward(&secrecy, &rates, 0) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn encode_db_spans_unit_range() {
        assert_eq!(encode_db(1.0, -120.0, 0.0), 1.0);
        assert!((encode_db(1e-6, -120.0, 0.0)).abs() < 1e-12); // mid range
        assert!((encode_db(1e-12, -120.0, 0.0) + 1.0).abs() < 1e-12); // floor
        assert_eq!(encode_db(0.0, -120.0, 0.0), -1.0);
        assert_eq!(encode_db(1e3, -120.0, 0.0), 1.0); // clamped above
    }

    #[test]
    fn reset_zeroes_previous_slot_features() {
        let mut env = test_env(2, 2, config(4, 38.0));
        let obs = env.reset(77).unwrap();
        assert_eq!(env.slot(), 0);
        assert_eq!(obs.len(), 2);
        for agent in &obs {
            assert_eq!(agent.per_user.len(), 2);
            for features in &agent.per_user {
                assert_eq!(features.len(), OBS_FEATURES);
                assert_eq!(features[2], 0.0);
                assert_eq!(features[3], 0.0);
                assert_eq!(features[4], 0.0);
                assert!(features.iter().all(|f| f.is_finite() && (-1.0..=1.0).contains(f)));
            }
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let mut env = test_env(3, 2, config(4, 38.0));
        let a = env.reset(123).unwrap();
        let b = env.reset(123).unwrap();
        assert_eq!(a, b);
        let c = env.reset(124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn step_zero_actions_give_zero_secrecy() {
        let mut env = test_env(2, 2, config(4, 38.0));
        env.reset(5).unwrap();
        let outcome = env
            .step(&PowerAction {
                levels: vec![vec![0, 0], vec![0, 0]],
            })
            .unwrap();
        assert_eq!(outcome.network_secrecy_sum, 0.0);
        assert!(outcome.rewards.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn step_rejects_bad_actions_and_terminal() {
        let mut cfg = config(4, 38.0);
        cfg.slots_per_episode = 1;
        let mut env = test_env(1, 1, cfg);
        env.reset(5).unwrap();
        assert!(env
            .step(&PowerAction {
                levels: vec![vec![7]],
            })
            .is_err());
        env.step(&PowerAction { levels: vec![vec![1]] }).unwrap();
        assert!(matches!(
            env.step(&PowerAction { levels: vec![vec![1]] }),
            Err(Error::EpisodeTerminal)
        ));
    }

    #[test]
    fn frozen_channel_repeats_outcomes() {
        let mut cfg = config(4, 38.0);
        cfg.frozen_channel = true;
        let mut env = test_env(2, 1, cfg);
        env.reset(9).unwrap();
        let action = PowerAction {
            levels: vec![vec![3], vec![2]],
        };
        let first = env.step(&action).unwrap();
        let second = env.step(&action).unwrap();
        assert_eq!(first.rewards, second.rewards);
        assert_eq!(first.network_secrecy_sum, second.network_secrecy_sum);
        assert_eq!(first.user_sinr, second.user_sinr);
    }

    #[test]
    fn step_composes_the_scalar_operations() {
        // Single cell, single user: the outcome must equal the hand-composed
        // pipeline action_power -> sinr -> rate -> secrecy -> reward.
        let mut cfg = config(4, 38.0);
        cfg.frozen_channel = true;
        let mut env = test_env(1, 1, cfg.clone());
        env.reset(31).unwrap();
        let gain = env.current_channel().unwrap().gain(0, 0, 0);
        let eve_gain = env.current_channel().unwrap().eve_gain[0];
        let outcome = env.step(&PowerAction { levels: vec![vec![2]] }).unwrap();

        let p = action_power(2, &cfg).unwrap();
        let gs = sinr_user(p, gain, 0.0, cfg.noise_power);
        let ge = sinr_eve(p, eve_gain, cfg.noise_power);
        let sec = secrecy_capacity(rate(gs), rate(ge));
        assert_eq!(outcome.user_sinr[0][0], gs);
        assert_eq!(outcome.eve_sinr[0][0], ge);
        assert_eq!(outcome.secrecy[0][0], sec);
        assert_eq!(outcome.rewards[0], sec);
        assert_eq!(outcome.network_secrecy_sum, sec);
        assert_eq!(reward(&outcome, 0), outcome.rewards[0]);
    }

    #[test]
    fn eve_sinr_ignores_other_cells_powers() {
        let mut cfg = config(4, 38.0);
        cfg.frozen_channel = true;
        let mut env = test_env(2, 2, cfg);
        env.reset(41).unwrap();
        let quiet = env
            .step(&PowerAction {
                levels: vec![vec![2, 0], vec![0, 0]],
            })
            .unwrap();
        let loud = env
            .step(&PowerAction {
                levels: vec![vec![2, 3], vec![3, 3]],
            })
            .unwrap();
        assert_eq!(quiet.eve_sinr[0][0], loud.eve_sinr[0][0]);
    }

    #[test]
    fn raising_one_power_raises_others_interference() {
        let mut cfg = config(4, 38.0);
        cfg.frozen_channel = true;
        for seed in 0..5 {
            let mut env = test_env(2, 2, cfg.clone());
            env.reset(1000 + seed).unwrap();
            let low = env
                .step(&PowerAction {
                    levels: vec![vec![1, 1], vec![1, 1]],
                })
                .unwrap();
            let high = env
                .step(&PowerAction {
                    levels: vec![vec![2, 1], vec![1, 1]],
                })
                .unwrap();
            // Own SINR numerator p * g strictly increases; the user's own
            // interference term is unaffected by its own power.
            let num_low = low.user_sinr[0][0] * (low.interference[0][0] + 1.0);
            let num_high = high.user_sinr[0][0] * (high.interference[0][0] + 1.0);
            assert!(num_high > num_low);
            assert_eq!(low.interference[0][0], high.interference[0][0]);
            for (b, l) in [(0usize, 1usize), (1, 0), (1, 1)] {
                assert!(
                    high.interference[b][l] > low.interference[b][l],
                    "interference at ({b},{l}) did not increase"
                );
            }
        }
    }

    #[test]
    fn secrecy_and_power_invariants_hold_over_episodes() {
        let cfg = config(4, 38.0);
        let p_max = cfg.p_max_linear();
        let t = cfg.slots_per_episode;
        let mut env = test_env(2, 2, cfg);
        let mut rng = crate::seeding::stream(3, "actions", 0);
        use rand::Rng;
        for episode in 0..5 {
            env.reset(episode).unwrap();
            for _ in 0..t {
                let levels = vec![
                    vec![rng.gen_range(0..4), rng.gen_range(0..4)],
                    vec![rng.gen_range(0..4), rng.gen_range(0..4)],
                ];
                let outcome = env.step(&PowerAction { levels }).unwrap();
                for row in &outcome.powers {
                    for &p in row {
                        assert!(p >= 0.0 && p <= p_max * (1.0 + 1e-12));
                    }
                }
                for row in &outcome.secrecy {
                    for &s in row {
                        assert!(s >= 0.0);
                    }
                }
                for (b, &r) in outcome.rewards.iter().enumerate() {
                    assert!(r >= 0.0, "negative reward in cell {b}");
                }
                for agent in &outcome.observations {
                    for features in &agent.per_user {
                        assert!(features
                            .iter()
                            .all(|f| f.is_finite() && (-1.0..=1.0).contains(f)));
                    }
                }
                let cell_sum: f64 = outcome.cell_secrecy_sum.iter().sum();
                assert!((cell_sum - outcome.network_secrecy_sum).abs() < 1e-9);
            }
            assert!(env.is_terminal());
        }
    }
}
