//! Exponential performance envelope.
//!
//! Each axis ν is bounded by
//!
//! ```text
//! ρ_ν(t) = (ρ_ν,0 − ρ_ν,∞)·exp(−l_E·t) + ρ_ν,∞
//! ```
//!
//! and the shared decay rate `l_E` is derived from the preset time `t_p` and a
//! tolerance `ε_p` through `ε_p = (‖ρ_0‖ − ‖ρ_∞‖)·exp(−l_E·t_p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{all_finite, Vec3};

/// Default tolerance as a fraction of `‖ρ_∞‖`.
pub const DEFAULT_TOLERANCE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    rho0: Vec3,
    rho_inf: Vec3,
    decay: f64,
    preset_time: f64,
    tolerance: f64,
}

impl EnvelopeParams {
    /// Builds an envelope with `ε_p = 0.1·‖ρ_∞‖`.
    pub fn new(rho0: Vec3, rho_inf: Vec3, t_p: f64, e0: Vec3) -> Result<Self> {
        Self::with_tolerance_ratio(rho0, rho_inf, t_p, e0, DEFAULT_TOLERANCE_RATIO)
    }

    pub fn with_tolerance_ratio(
        rho0: Vec3,
        rho_inf: Vec3,
        t_p: f64,
        e0: Vec3,
        ratio: f64,
    ) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::invalid(format!("tolerance ratio must be positive, got {ratio}")));
        }
        Self::with_tolerance(rho0, rho_inf, t_p, e0, ratio * rho_inf.norm())
    }

    pub fn with_tolerance(
        rho0: Vec3,
        rho_inf: Vec3,
        t_p: f64,
        e0: Vec3,
        epsilon_p: f64,
    ) -> Result<Self> {
        if !(all_finite(&rho0) && all_finite(&rho_inf) && all_finite(&e0)) {
            return Err(Error::NonFinite("envelope bounds or initial error"));
        }
        if !(t_p.is_finite() && t_p > 0.0) {
            return Err(Error::invalid(format!("preset time must be positive, got {t_p}")));
        }
        for i in 0..3 {
            if !(rho_inf[i] > 0.0) {
                return Err(Error::invalid(format!(
                    "rho_inf[{i}] = {} must be positive",
                    rho_inf[i]
                )));
            }
            if !(rho0[i] > rho_inf[i]) {
                return Err(Error::invalid(format!(
                    "rho0[{i}] = {} must exceed rho_inf[{i}] = {}",
                    rho0[i], rho_inf[i]
                )));
            }
            if !(rho0[i] > e0[i].abs()) {
                return Err(Error::invalid(format!(
                    "rho0[{i}] = {} must exceed the initial error magnitude {}",
                    rho0[i],
                    e0[i].abs()
                )));
            }
        }
        let span = rho0.norm() - rho_inf.norm();
        if !(epsilon_p > 0.0 && epsilon_p < span) {
            return Err(Error::invalid(format!(
                "tolerance {epsilon_p} must lie in (0, ‖rho0‖ − ‖rho_inf‖ = {span})"
            )));
        }
        let decay = (span / epsilon_p).ln() / t_p;
        Ok(EnvelopeParams {
            rho0,
            rho_inf,
            decay,
            preset_time: t_p,
            tolerance: epsilon_p,
        })
    }

    pub fn rho0(&self) -> Vec3 {
        self.rho0
    }

    pub fn rho_inf(&self) -> Vec3 {
        self.rho_inf
    }

    /// Shared exponential decay rate `l_E` (1/s).
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn preset_time(&self) -> f64 {
        self.preset_time
    }

    /// The tolerance `ε_p` (m).
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Per-axis boundary at time `t ≥ 0`.
    pub fn rho_at(&self, t: f64) -> Result<Vec3> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let w = (-self.decay * t).exp();
        Ok((self.rho0 - self.rho_inf) * w + self.rho_inf)
    }
}

pub fn make_envelope(rho0: Vec3, rho_inf: Vec3, t_p: f64, e0: Vec3) -> Result<EnvelopeParams> {
    EnvelopeParams::new(rho0, rho_inf, t_p, e0)
}

pub fn rho_at(p: &EnvelopeParams, t: f64) -> Result<Vec3> {
    p.rho_at(t)
}
