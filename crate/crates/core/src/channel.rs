//! Stochastic channel generation: exponentially distributed small-scale power
//! gains, power-law path loss with log-normal shadowing, and per-slot channel
//! realizations for the whole network.
//!
//! Fading is block fading: gains are constant within a slot and redrawn
//! independently each slot. All draws come from a caller-supplied RNG so a
//! fixed seed reproduces the full gain sequence bit for bit.

use rand::Rng;

use crate::error::{Error, Result};

/// Network geometry: base stations on a square grid, users and one
/// eavesdropper per cell placed inside each cell's disc.
#[derive(Debug, Clone)]
pub struct Topology {
    pub cell_count: usize,
    pub users_per_cell: usize,
    pub cell_radius: f64,
    /// One position per base station, meters.
    pub bs_positions: Vec<[f64; 2]>,
    /// `user_positions[cell][user]`, meters.
    pub user_positions: Vec<Vec<[f64; 2]>>,
    /// One eavesdropper position per cell, meters.
    pub eve_positions: Vec<[f64; 2]>,
}

impl Topology {
    /// Base stations on a square grid with spacing `2 * cell_radius`; users
    /// and eavesdroppers start at their serving base station until
    /// [`Topology::randomize_placements`] scatters them.
    pub fn grid(cell_count: usize, users_per_cell: usize, cell_radius: f64) -> Result<Self> {
        if cell_count == 0 || users_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "cell_count and users_per_cell must be at least 1".into(),
            ));
        }
        if !(cell_radius > 0.0) || !cell_radius.is_finite() {
            return Err(Error::InvalidParameter(
                "cell_radius must be positive and finite".into(),
            ));
        }
        let side = (cell_count as f64).sqrt().ceil() as usize;
        let spacing = 2.0 * cell_radius;
        let bs_positions: Vec<[f64; 2]> = (0..cell_count)
            .map(|b| {
                let row = b / side;
                let col = b % side;
                [col as f64 * spacing, row as f64 * spacing]
            })
            .collect();
        let user_positions = bs_positions
            .iter()
            .map(|&p| vec![p; users_per_cell])
            .collect();
        let eve_positions = bs_positions.clone();
        Ok(Self {
            cell_count,
            users_per_cell,
            cell_radius,
            bs_positions,
            user_positions,
            eve_positions,
        })
    }

    /// Redraw every user and eavesdropper position uniformly at random inside
    /// its serving cell's disc. Called at each episode reset.
    pub fn randomize_placements<R: Rng>(&mut self, rng: &mut R) {
        for b in 0..self.cell_count {
            let center = self.bs_positions[b];
            for l in 0..self.users_per_cell {
                self.user_positions[b][l] = uniform_in_disc(center, self.cell_radius, rng);
            }
            self.eve_positions[b] = uniform_in_disc(center, self.cell_radius, rng);
        }
    }

    /// Checks the placement invariant: every user and eavesdropper lies within
    /// `cell_radius` of its serving base station, all coordinates finite.
    pub fn validate(&self) -> Result<()> {
        let max_d = self.cell_radius * (1.0 + 1e-12);
        for b in 0..self.cell_count {
            let bs = self.bs_positions[b];
            if !bs[0].is_finite() || !bs[1].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "base station {b} has a non-finite position"
                )));
            }
            for (l, &u) in self.user_positions[b].iter().enumerate() {
                if !u[0].is_finite() || !u[1].is_finite() || distance(bs, u) > max_d {
                    return Err(Error::InvalidParameter(format!(
                        "user ({b},{l}) lies outside its serving cell"
                    )));
                }
            }
            let e = self.eve_positions[b];
            if !e[0].is_finite() || !e[1].is_finite() || distance(bs, e) > max_d {
                return Err(Error::InvalidParameter(format!(
                    "eavesdropper of cell {b} lies outside its cell"
                )));
            }
        }
        Ok(())
    }
}

/// Euclidean distance between two points.
pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn uniform_in_disc<R: Rng>(center: [f64; 2], radius: f64, rng: &mut R) -> [f64; 2] {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// Fading model parameters shared by main and wiretap links.
#[derive(Debug, Clone)]
pub struct FadingParams {
    /// Rate of the exponential small-scale power gain on user links.
    pub lambda_user: f64,
    /// Rate of the exponential small-scale power gain on wiretap links.
    pub lambda_eve: f64,
    /// Path-loss exponent.
    pub path_loss_exponent: f64,
    /// Log-normal shadowing standard deviation, dB. Zero disables shadowing.
    pub shadowing_sigma_db: f64,
    /// Distances below this are clamped before applying the power law.
    pub reference_distance: f64,
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_user > 0.0) || !(self.lambda_eve > 0.0) {
            return Err(Error::InvalidParameter(
                "fading rate parameters must be positive".into(),
            ));
        }
        if self.path_loss_exponent < 0.0 {
            return Err(Error::InvalidParameter(
                "path_loss_exponent must be non-negative".into(),
            ));
        }
        if self.shadowing_sigma_db < 0.0 {
            return Err(Error::InvalidParameter(
                "shadowing_sigma_db must be non-negative".into(),
            ));
        }
        if !(self.reference_distance > 0.0) {
            return Err(Error::InvalidParameter(
                "reference_distance must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for FadingParams {
    fn default() -> Self {
        Self {
            lambda_user: 1.5,
            lambda_eve: 1.5,
            path_loss_exponent: 3.0,
            shadowing_sigma_db: 8.0,
            reference_distance: 1.0,
        }
    }
}

/// Linear channel power gains for one time slot.
///
/// `main_gain[b][l][c]` is the gain from the transmitter of cell `b` toward
/// user `l` served by cell `c`; `eve_gain[b]` is the gain from base station
/// `b` to the eavesdropper in its own cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub main_gain: Vec<Vec<Vec<f64>>>,
    pub eve_gain: Vec<f64>,
    pub slot: usize,
}

impl ChannelRealization {
    /// Gain from base station `tx_cell` toward user `user` of cell `user_cell`.
    #[inline]
    pub fn gain(&self, tx_cell: usize, user: usize, user_cell: usize) -> f64 {
        self.main_gain[tx_cell][user][user_cell]
    }
}

/// Inverse CDF of the exponential distribution: the gain whose CDF value is `u`.
#[inline]
pub fn exp_inverse_cdf(lambda: f64, u: f64) -> f64 {
    -(-u).ln_1p() / lambda
}

/// One small-scale power gain draw from Exponential(`lambda`).
pub fn sample_power_gain<R: Rng>(lambda: f64, rng: &mut R) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "exponential rate must be positive and finite, got {lambda}"
        )));
    }
    let u: f64 = rng.gen();
    // Keep the output strictly positive even at u == 0.
    Ok(exp_inverse_cdf(lambda, u).max(f64::MIN_POSITIVE))
}

/// Standard normal draw via Box-Muller; consumes two uniforms.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Large-scale fading with an explicit shadowing value in dB:
/// `max(d, d_ref)^(-kappa) * 10^(shadow_db / 10)`.
#[inline]
pub fn large_scale_with_shadow(distance: f64, params: &FadingParams, shadow_db: f64) -> f64 {
    let d = distance.max(params.reference_distance);
    d.powf(-params.path_loss_exponent) * 10f64.powf(shadow_db / 10.0)
}

/// Large-scale fading (path loss plus log-normal shadowing) at `distance`.
pub fn large_scale_fading<R: Rng>(distance: f64, params: &FadingParams, rng: &mut R) -> f64 {
    let shadow_db = if params.shadowing_sigma_db > 0.0 {
        params.shadowing_sigma_db * standard_normal(rng)
    } else {
        0.0
    };
    large_scale_with_shadow(distance, params, shadow_db)
}

/// Draw the full set of gains for slot `slot`.
///
/// Draw order is fixed (all main gains in `(tx_cell, user, user_cell)` order,
/// then the per-cell wiretap gains) so that a given RNG state always yields
/// the same realization.
pub fn draw_channel_state<R: Rng>(
    topology: &Topology,
    params: &FadingParams,
    slot: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    let cells = topology.cell_count;
    let users = topology.users_per_cell;
    let mut main_gain = vec![vec![vec![0.0; cells]; users]; cells];
    for (b, row) in main_gain.iter_mut().enumerate() {
        let tx = topology.bs_positions[b];
        for (l, per_cell) in row.iter_mut().enumerate() {
            for (c, gain) in per_cell.iter_mut().enumerate() {
                let small = sample_power_gain(params.lambda_user, rng)?;
                let rho = large_scale_fading(distance(tx, topology.user_positions[c][l]), params, rng);
                *gain = small * rho;
            }
        }
    }
    let mut eve_gain = vec![0.0; cells];
    for (b, gain) in eve_gain.iter_mut().enumerate() {
        let small = sample_power_gain(params.lambda_eve, rng)?;
        let rho = large_scale_fading(
            distance(topology.bs_positions[b], topology.eve_positions[b]),
            params,
            rng,
        );
        *gain = small * rho;
    }
    Ok(ChannelRealization {
        main_gain,
        eve_gain,
        slot,
    })
}
