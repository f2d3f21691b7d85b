//! Preset tracking-error trajectory.
//!
//! Per axis the reference error `α_ν` solves
//! `α̇_ν = −l_E·α_ν + b_ν·exp(−(l_E + c_ν)·t)` with `α_ν(0) = e_ν(0)` and
//! `b_ν = l_E·e_ν(0) + ė_ν(0)`. It starts at the measured error and decays to
//! zero while staying a margin inside the performance envelope, provided `c_ν`
//! is large enough (see [`choose_c`]).

use serde::{Deserialize, Serialize};

use crate::envelope::EnvelopeParams;
use crate::error::{Error, Result};
use crate::types::{all_finite, Vec3};

/// Default factor applied on top of the minimum admissible `c_ν`.
pub const DEFAULT_C_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetTrajectory {
    e0: Vec3,
    e0_dot: Vec3,
    b: Vec3,
    c: Vec3,
    decay: f64,
}

/// Value and first two derivatives of the preset trajectory at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetSample {
    pub alpha: Vec3,
    pub alpha_dot: Vec3,
    pub alpha_ddot: Vec3,
}

impl PresetTrajectory {
    pub fn new(decay: f64, e0: Vec3, e0_dot: Vec3, c: Vec3) -> Result<Self> {
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::invalid(format!("decay rate must be positive, got {decay}")));
        }
        if !(all_finite(&e0) && all_finite(&e0_dot)) {
            return Err(Error::NonFinite("initial error or its rate"));
        }
        if c.iter().any(|ci| !(ci.is_finite() && *ci > 0.0)) {
            return Err(Error::invalid(format!("c must be positive per axis, got {:?}", c.as_slice())));
        }
        Ok(PresetTrajectory {
            e0,
            e0_dot,
            b: e0 * decay + e0_dot,
            c,
            decay,
        })
    }

    /// Builds the trajectory with `c` from [`choose_c`].
    pub fn from_envelope(
        env: &EnvelopeParams,
        e0: Vec3,
        e0_dot: Vec3,
        delta_z: f64,
        safety: f64,
    ) -> Result<Self> {
        let c = choose_c(env, e0, e0_dot, delta_z, safety)?;
        PresetTrajectory::new(env.decay(), e0, e0_dot, c)
    }

    pub fn e0(&self) -> Vec3 {
        self.e0
    }

    pub fn e0_dot(&self) -> Vec3 {
        self.e0_dot
    }

    pub fn b(&self) -> Vec3 {
        self.b
    }

    pub fn c(&self) -> Vec3 {
        self.c
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Whether `c_ν > |b_ν| / (ρ_ν,0 − margin − |e_ν(0)|)` holds on every axis,
    /// which keeps `|α_ν(t)| < ρ_ν(t) − margin` for all `t ≥ 0`.
    pub fn keeps_margin(&self, env: &EnvelopeParams, margin: f64) -> bool {
        let rho0 = env.rho0();
        let rho_inf = env.rho_inf();
        (0..3).all(|i| {
            let room = rho0[i] - margin - self.e0[i].abs();
            margin < rho_inf[i] && room > 0.0 && self.c[i] * room > self.b[i].abs()
        })
    }

    pub fn sample(&self, t: f64) -> Result<PresetSample> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let l = self.decay;
        let el = (-l * t).exp();
        let mut alpha = Vec3::zeros();
        let mut alpha_dot = Vec3::zeros();
        let mut alpha_ddot = Vec3::zeros();
        for i in 0..3 {
            let (b, c, e0) = (self.b[i], self.c[i], self.e0[i]);
            let ec = (-c * t).exp();
            // (1 − e^{−ct})/c, accurate for small c·t
            let rise = -(-c * t).exp_m1() / c;
            alpha[i] = (b * rise + e0) * el;
            // (b/c)[−l e^{−lt} + (c+l) e^{−(c+l)t}] − e0 l e^{−lt}
            alpha_dot[i] = b * el * (ec - l * rise) - e0 * l * el;
            // (b/c)[l² e^{−lt} − (c+l)² e^{−(c+l)t}] + e0 l² e^{−lt}
            alpha_ddot[i] = b * el * (l * l * rise - (2.0 * l + c) * ec) + e0 * l * l * el;
        }
        Ok(PresetSample {
            alpha,
            alpha_dot,
            alpha_ddot,
        })
    }

    /// Mean of `α̇` over `[t, t + dt]`, i.e. the exact secant of `α`.
    pub fn mean_rate(&self, t: f64, dt: f64) -> Result<Vec3> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("interval must be positive, got {dt}")));
        }
        let a0 = self.sample(t)?.alpha;
        let a1 = self.sample(t + dt)?.alpha;
        Ok((a1 - a0) / dt)
    }
}

/// Picks `c_ν = safety·|b_ν| / (ρ_ν,0 − δ_z − |e_ν(0)|)`, or `safety·l_E` when `b_ν = 0`.
///
/// `delta_z` is the bound on the sliding-surface offset `‖e − α‖`; it must fit
/// strictly inside both `ρ_ν,∞` and the initial slack `ρ_ν,0 − |e_ν(0)|`.
pub fn choose_c(
    env: &EnvelopeParams,
    e0: Vec3,
    e0_dot: Vec3,
    delta_z: f64,
    safety: f64,
) -> Result<Vec3> {
    if !(safety.is_finite() && safety >= 1.0) {
        return Err(Error::invalid(format!("safety factor must be >= 1, got {safety}")));
    }
    if !(delta_z.is_finite() && delta_z >= 0.0) {
        return Err(Error::invalid(format!("delta_z must be non-negative, got {delta_z}")));
    }
    if !(all_finite(&e0) && all_finite(&e0_dot)) {
        return Err(Error::NonFinite("initial error or its rate"));
    }
    let l = env.decay();
    let rho0 = env.rho0();
    let rho_inf = env.rho_inf();
    let mut c = Vec3::zeros();
    for i in 0..3 {
        if delta_z >= rho_inf[i] {
            return Err(Error::invalid(format!(
                "delta_z = {delta_z} must be below rho_inf[{i}] = {}",
                rho_inf[i]
            )));
        }
        let room = rho0[i] - delta_z - e0[i].abs();
        if !(room > 0.0) {
            return Err(Error::invalid(format!(
                "delta_z = {delta_z} must be below rho0[{i}] − |e0[{i}]| = {}",
                rho0[i] - e0[i].abs()
            )));
        }
        let b = l * e0[i] + e0_dot[i];
        c[i] = if b == 0.0 { safety * l } else { safety * b.abs() / room };
    }
    Ok(c)
}
