//! Kinematic plant: base and arm follow their references through first-order
//! lags, which makes the realized end-effector velocity differ from the
//! commanded one. Sensor noise is added on measurement only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{DeltaGeometry, RigState};
use crate::types::{all_finite, DiagGain, Rot3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Position noise on the base (m).
    pub sigma_pos: f64,
    /// Gyroscope noise (rad/s²).
    pub sigma_gyro: f64,
    /// Accelerometer noise (m/s²). Kept for configuration parity; a kinematic
    /// plant has no accelerometer channel.
    pub sigma_accel: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            sigma_pos: 1e-4,
            sigma_gyro: 0.02,
            sigma_accel: 0.04,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn none() -> Self {
        NoiseParams {
            sigma_pos: 0.0,
            sigma_gyro: 0.0,
            sigma_accel: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("sigma_pos", self.sigma_pos),
            ("sigma_gyro", self.sigma_gyro),
            ("sigma_accel", self.sigma_accel),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    /// Base position time constant (s).
    pub tau_base: f64,
    /// Arm joint time constant (s).
    pub tau_arm: f64,
    pub yaw_rate_limit: f64,
    pub noise: NoiseParams,
    /// Integration step (s).
    pub dt: f64,
    /// Largest realized ‖Δ‖ considered nominal (m/s); exceeding it is reported.
    pub delta_cap: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            tau_base: 0.25,
            tau_arm: 0.05,
            yaw_rate_limit: 1.0,
            noise: NoiseParams::default(),
            dt: 1e-3,
            delta_cap: 0.01,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_base", self.tau_base), ("tau_arm", self.tau_arm), ("dt", self.dt)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt > self.tau_arm.min(self.tau_base) / 5.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "plant step {} does not resolve the fastest lag (needs dt ≤ τ/5)",
                self.dt
            )));
        }
        if !(self.yaw_rate_limit.is_finite() && self.yaw_rate_limit > 0.0) {
            return Err(Error::invalid(format!(
                "yaw_rate_limit must be positive, got {}",
                self.yaw_rate_limit
            )));
        }
        if !(self.delta_cap > 0.0) {
            return Err(Error::invalid(format!("delta_cap must be positive, got {}", self.delta_cap)));
        }
        self.noise.validate()
    }
}

/// References handed to the low-level trackers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantRefs {
    pub p_b_d: Vec3,
    pub q_d: Vec3,
    pub psi_d: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    if w == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        w
    }
}

/// Advances the true state by one plant step `params.dt`.
pub fn plant_step(
    params: &PlantParams,
    geometry: &DeltaGeometry,
    st: &RigState,
    refs: &PlantRefs,
) -> Result<RigState> {
    if !(all_finite(&refs.p_b_d) && all_finite(&refs.q_d) && refs.psi_d.is_finite()) {
        return Err(Error::NonFinite("plant references"));
    }
    geometry.check_limits(&refs.q_d)?;
    let dt = params.dt;
    let gain_base = -(-dt / params.tau_base).exp_m1();
    let gain_arm = -(-dt / params.tau_arm).exp_m1();

    let p_b = st.p_b + (refs.p_b_d - st.p_b) * gain_base;
    let q = st.q + (refs.q_d - st.q) * gain_arm;

    let psi = st.r_b.yaw_angle();
    let max_turn = params.yaw_rate_limit * dt;
    let turn = (wrap_angle(refs.psi_d - psi) * gain_base).clamp(-max_turn, max_turn);
    let r_b = if turn == 0.0 { st.r_b } else { Rot3::yaw(turn) * st.r_b };

    let p_e_d = if q == st.q { st.p_e_d } else { geometry.fk(&q)? };
    Ok(RigState {
        p_b,
        r_b,
        omega: Vec3::new(0.0, 0.0, turn / dt),
        p_e_d,
        q,
    })
}

/// Channel indices of the keyed noise stream.
mod channel {
    pub const POS: u64 = 0;
    pub const GYRO: u64 = 3;
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal sample determined entirely by `(seed, step, channel)`.
pub fn keyed_normal(seed: u64, step: u64, channel: u64) -> f64 {
    let key = mix(mix(mix(seed) ^ step) ^ channel);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

fn keyed_vec(seed: u64, step: u64, first_channel: u64) -> Vec3 {
    Vec3::new(
        keyed_normal(seed, step, first_channel),
        keyed_normal(seed, step, first_channel + 1),
        keyed_normal(seed, step, first_channel + 2),
    )
}

/// Noisy view of the state at measurement index `step`. Joint encoders are
/// taken as exact.
pub fn measure(params: &PlantParams, st: &RigState, step: u64) -> RigState {
    let n = &params.noise;
    let mut out = *st;
    if n.sigma_pos > 0.0 {
        out.p_b += keyed_vec(n.seed, step, channel::POS) * n.sigma_pos;
    }
    if n.sigma_gyro > 0.0 {
        // σ_gyro is an angular-acceleration density: one step of it perturbs
        // the rate by σ·dt and the attitude by that rate over dt.
        let rate_noise = keyed_vec(n.seed, step, channel::GYRO) * (n.sigma_gyro * params.dt);
        out.omega += rate_noise;
        out.r_b = Rot3::from_scaled_axis(rate_noise * params.dt) * st.r_b;
    }
    out
}

/// Closed-loop inverse kinematics command `ṗ_O − K·e`.
pub fn clik_baseline(k: &DiagGain, e: &Vec3, p_o_dot: &Vec3) -> Result<Vec3> {
    if !(all_finite(e) && all_finite(p_o_dot)) {
        return Err(Error::NonFinite("CLIK input"));
    }
    Ok(p_o_dot - k.apply(e))
}
