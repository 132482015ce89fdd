//! Shared test helpers: an independent brute-force evaluator that recomputes
//! every SINR, rate, secrecy capacity and reward directly from raw gains,
//! bypassing the environment's own pipeline.

use secrl::channel::ChannelRealization;

/// Recompute per-cell rewards and the network secrecy sum from first
/// principles for one slot of applied powers.
pub fn brute_force_rewards(
    realization: &ChannelRealization,
    powers: &[Vec<f64>],
    noise: f64,
) -> (Vec<f64>, f64) {
    let cells = powers.len();
    let users = powers[0].len();

    let mut user_rate = vec![vec![0.0; users]; cells];
    let mut secrecy = vec![vec![0.0; users]; cells];
    for b in 0..cells {
        for l in 0..users {
            // Intra-cell: other users of cell b through their own serving
            // gains; inter-cell: every other base station's powers through
            // the gain from that station to this user.
            let mut interference = 0.0;
            for i in 0..users {
                if i != l {
                    interference += powers[b][i] * realization.main_gain[b][i][b];
                }
            }
            for other in 0..cells {
                if other != b {
                    for c in 0..users {
                        interference += powers[other][c] * realization.main_gain[other][l][b];
                    }
                }
            }
            let sinr = powers[b][l] * realization.main_gain[b][l][b] / (interference + noise);
            let sinr_eve = powers[b][l] * realization.eve_gain[b] / noise;
            let rate = (1.0 + sinr).log2();
            let rate_eve = (1.0 + sinr_eve).log2();
            user_rate[b][l] = rate;
            secrecy[b][l] = if rate > rate_eve { rate - rate_eve } else { 0.0 };
        }
    }

    let mut rewards = vec![0.0; cells];
    let mut network = 0.0;
    for b in 0..cells {
        let own: f64 = secrecy[b].iter().sum();
        let mut others = 0.0;
        for other in 0..cells {
            if other != b {
                others += user_rate[other].iter().sum::<f64>();
            }
        }
        rewards[b] = own + others;
        network += own;
    }
    (rewards, network)
}

/// Relative comparison with an absolute floor for values near zero.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= rel * scale
}
