//! Homodyne measurement layers.
//!
//! The exponentiated layer applies, for every monitored `O_l`,
//!
//! ```text
//! exp(c_l O_l) = cosh(c_l) + sinh(c_l) O_l,   c_l = dξ_l + 2γ⟨O_l⟩ dt
//! ```
//!
//! and renormalizes once. Expanding to first order with `dξ² = γ dt` and
//! `O² = 1` reproduces the measurement terms of the stochastic Schrödinger
//! equation; [`euler_maruyama_layer`] integrates those terms literally and
//! serves as the reference.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MonitorOp;
use crate::state::{StateVector, C64};

const NORM_TOL: f64 = 1e-8;
const NOISE_DOMAIN: u64 = 0x6e6f_6973_6500_0001;
/// Operator indices occupy the low bits of the draw counter.
const OP_BITS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Exponentiated,
    EulerMaruyama,
}

/// Counter-based Gaussian noise for one trajectory.
///
/// Draw `(step, op)` reads a fixed pair of words from a ChaCha8 stream keyed by
/// the master seed and selected by the trajectory index, so every value is a
/// pure function of `(seed, trajectory, step, op)`.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    gamma: f64,
    dt: f64,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory: u64, gamma: f64, dt: f64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(stream_key(master_seed, NOISE_DOMAIN));
        rng.set_stream(trajectory);
        Self { rng, gamma, dt }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Standard normal variate for `(step, op)`.
    pub fn standard_normal(&mut self, step: u64, op: usize) -> f64 {
        self.seek(step, op);
        self.next_normal()
    }

    /// `dξ` for `(step, op)`: Gaussian with mean 0 and variance `γ dt`.
    pub fn draw(&mut self, step: u64, op: usize) -> f64 {
        if self.gamma == 0.0 {
            return 0.0;
        }
        (self.gamma * self.dt).sqrt() * self.standard_normal(step, op)
    }

    /// `dξ` for ops `0..n_ops` of one step, identical to calling [`Self::draw`]
    /// for each op.
    pub fn draw_layer(&mut self, step: u64, n_ops: usize) -> Vec<f64> {
        if self.gamma == 0.0 {
            return vec![0.0; n_ops];
        }
        let scale = (self.gamma * self.dt).sqrt();
        self.seek(step, 0);
        (0..n_ops).map(|_| scale * self.next_normal()).collect()
    }

    fn seek(&mut self, step: u64, op: usize) {
        debug_assert!(op < 1 << OP_BITS);
        let counter = (u128::from(step) << OP_BITS) | op as u128;
        // Four 32-bit words per draw.
        self.rng.set_word_pos(counter * 4);
    }

    fn next_normal(&mut self) -> f64 {
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// 32-byte ChaCha key from a master seed and a domain tag.
pub(crate) fn stream_key(master_seed: u64, domain: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key
}

fn check_normalized(state: &StateVector) -> Result<()> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::UnnormalizedState(n));
    }
    Ok(())
}

/// Kraus exponents `c_l = dξ_l + 2γ⟨O_l⟩dt`, all evaluated on `state`.
pub fn kraus_exponents(state: &StateVector, ops: &[MonitorOp], noise: &[f64], gamma: f64, dt: f64) -> Vec<f64> {
    ops.iter()
        .zip(noise)
        .map(|(op, dxi)| dxi + 2.0 * gamma * state.expectation(op) * dt)
        .collect()
}

/// Applies `Π_l exp(c_l O_l)` and renormalizes once.
pub fn apply_kraus(state: &mut StateVector, ops: &[MonitorOp], exponents: &[f64]) {
    for (op, &c) in ops.iter().zip(exponents) {
        state.apply_exp_op(op, c);
    }
    state.normalize();
}

/// Exponentiated homodyne update for measurement step `step`.
pub fn homodyne_layer(
    state: &mut StateVector,
    ops: &[MonitorOp],
    noise: &mut NoiseStream,
    step: u64,
) -> Result<()> {
    check_normalized(state)?;
    if noise.gamma() == 0.0 {
        return Ok(());
    }
    let dxi = noise.draw_layer(step, ops.len());
    let c = kraus_exponents(state, ops, &dxi, noise.gamma(), noise.dt());
    apply_kraus(state, ops, &c);
    Ok(())
}

/// First-order increment of the measurement terms,
/// `Σ_l [-½γ dt (O_l - ⟨O_l⟩)² + dξ_l (O_l - ⟨O_l⟩)] |ψ⟩`, then renormalization.
pub fn euler_maruyama_layer(
    state: &mut StateVector,
    ops: &[MonitorOp],
    noise: &mut NoiseStream,
    step: u64,
) -> Result<()> {
    check_normalized(state)?;
    if noise.gamma() == 0.0 {
        return Ok(());
    }
    let (gamma, dt) = (noise.gamma(), noise.dt());
    let dxi = noise.draw_layer(step, ops.len());
    let mut next: Vec<C64> = state.amplitudes().to_vec();
    for (op, &dx) in ops.iter().zip(&dxi) {
        let e = state.expectation(op);
        // (O - e)² = 1 - 2eO + e²
        let on_psi = -0.5 * gamma * dt * (1.0 + e * e) - dx * e;
        let on_o_psi = gamma * dt * e + dx;
        let o_psi = state.apply_op(op);
        for ((n, a), oa) in next.iter_mut().zip(state.amplitudes()).zip(o_psi.amplitudes()) {
            *n += a * on_psi + oa * on_o_psi;
        }
    }
    state.amplitudes_mut().copy_from_slice(&next);
    state.normalize();
    Ok(())
}

pub fn measurement_layer(
    scheme: Scheme,
    state: &mut StateVector,
    ops: &[MonitorOp],
    noise: &mut NoiseStream,
    step: u64,
) -> Result<()> {
    match scheme {
        Scheme::Exponentiated => homodyne_layer(state, ops, noise, step),
        Scheme::EulerMaruyama => euler_maruyama_layer(state, ops, noise, step),
    }
}
