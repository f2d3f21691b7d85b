//! Sliding-mode tracking law producing the desired end-effector velocity.
//!
//! With `z = e − α` and the sliding vector `s = z + Λ∫z`, the command is
//!
//! ```text
//! ṗ_E,d = ṗ_O + α̇ − Λz − Ks
//! ```
//!
//! If the realized velocity differs from the command by at most `δ_E`, then
//! `‖s‖ ≤ δ_E/λ_min(K)` and `‖z‖ ≤ δ_z` (see [`TrackingGains::delta_z_bound`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{all_finite, DiagGain, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingGains {
    pub lambda: DiagGain,
    pub k: DiagGain,
    /// Assumed bound on the velocity realization error (m/s).
    pub delta_e: f64,
}

impl TrackingGains {
    pub fn new(lambda: DiagGain, k: DiagGain, delta_e: f64) -> Result<Self> {
        if !(delta_e.is_finite() && delta_e > 0.0) {
            return Err(Error::invalid(format!("delta_e must be positive, got {delta_e}")));
        }
        Ok(TrackingGains { lambda, k, delta_e })
    }

    /// `Λ = 0.2·I`, `K = 1.2·I`, `δ_E = 0.01`.
    pub fn reference() -> Self {
        TrackingGains {
            lambda: DiagGain::isotropic(0.2).unwrap(),
            k: DiagGain::isotropic(1.2).unwrap(),
            delta_e: 0.01,
        }
    }

    /// Upper bound on `‖z‖`:
    /// `(λ_min(Λ) + λ_max(Λ))·δ_E / (λ_min(Λ)·λ_min(K))`.
    pub fn delta_z_bound(&self) -> f64 {
        let (lmin, lmax) = (self.lambda.min(), self.lambda.max());
        (lmin + lmax) * self.delta_e / (lmin * self.k.min())
    }

    /// Upper bound on `‖s‖`: `δ_E / λ_min(K)`.
    pub fn sliding_bound(&self) -> f64 {
        self.delta_e / self.k.min()
    }

    /// Upper bound on `‖∫z‖`: `δ_E / (λ_min(K)·λ_min(Λ))`.
    pub fn integral_bound(&self) -> f64 {
        self.delta_e / (self.k.min() * self.lambda.min())
    }
}

impl Default for TrackingGains {
    fn default() -> Self {
        TrackingGains::reference()
    }
}

pub fn delta_z_bound(g: &TrackingGains) -> f64 {
    g.delta_z_bound()
}

/// Integrator state of the tracking law.
///
/// `z_int` is the trapezoidal integral of `z` up to the latest processed
/// sample; `z_prev` is that sample, `None` before the first call.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingState {
    pub z_int: Vec3,
    pub z_prev: Option<Vec3>,
    /// Time of the next expected sample.
    pub t: f64,
}

impl TrackingState {
    pub fn new() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Desired end-effector velocity `ṗ_E,d`.
    pub command: Vec3,
    pub z: Vec3,
    pub sliding: Vec3,
}

/// One controller tick.
///
/// `dt` is the time since the previous sample (ignored on the first call,
/// where the stored `z_int` is used as is).
pub fn control_step(
    g: &TrackingGains,
    st: &TrackingState,
    e: Vec3,
    p_o_dot: Vec3,
    alpha: Vec3,
    alpha_dot: Vec3,
    dt: f64,
) -> Result<(ControlOutput, TrackingState)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("control period must be positive, got {dt}")));
    }
    if !(all_finite(&e) && all_finite(&p_o_dot) && all_finite(&alpha) && all_finite(&alpha_dot)) {
        return Err(Error::NonFinite("tracking law input"));
    }
    let z = e - alpha;
    let z_int = match st.z_prev {
        Some(zp) => st.z_int + (zp + z) * (0.5 * dt),
        None => st.z_int,
    };
    let sliding = z + g.lambda.apply(&z_int);
    let command = p_o_dot + alpha_dot - g.lambda.apply(&z) - g.k.apply(&sliding);
    let next = TrackingState {
        z_int,
        z_prev: Some(z),
        t: st.t + dt,
    };
    Ok((ControlOutput { command, z, sliding }, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_z_with_reference_gains() {
        let g = TrackingGains::reference();
        assert_relative_eq!(g.delta_z_bound(), 0.4 * 0.01 / (0.2 * 1.2), max_relative = 1e-14);
        assert_relative_eq!(g.delta_z_bound(), 0.016_666_666_666_666_67, max_relative = 1e-12);
    }

    #[test]
    fn delta_z_isotropic_and_linear() {
        let g = TrackingGains::new(
            DiagGain::isotropic(0.7).unwrap(),
            DiagGain::new([2.0, 3.0, 4.0]).unwrap(),
            0.02,
        )
        .unwrap();
        assert_relative_eq!(g.delta_z_bound(), 2.0 * 0.02 / 2.0, max_relative = 1e-14);
        let g10 = TrackingGains { delta_e: 0.2, ..g };
        assert_relative_eq!(g10.delta_z_bound(), 10.0 * g.delta_z_bound(), max_relative = 1e-14);
    }

    #[test]
    fn on_preset_trajectory_command_is_feedforward() {
        let g = TrackingGains::reference();
        let a = Vec3::new(0.3, -0.1, 0.2);
        let ad = Vec3::new(-0.4, 0.1, 0.05);
        let (out, _) = control_step(&g, &TrackingState::new(), a, Vec3::zeros(), a, ad, 0.005).unwrap();
        assert_eq!(out.command, ad);
        let v = Vec3::new(0.1, 0.2, -0.3);
        let (out, _) = control_step(&g, &TrackingState::new(), a, v, a, Vec3::zeros(), 0.005).unwrap();
        assert_eq!(out.command, v);
    }

    #[test]
    fn hand_evaluated_command() {
        let g = TrackingGains::reference();
        let st = TrackingState {
            z_int: Vec3::new(0.05, 0.0, 0.0),
            ..TrackingState::new()
        };
        let e = Vec3::new(0.1, 0.0, 0.0);
        let (out, _) =
            control_step(&g, &st, e, Vec3::zeros(), Vec3::zeros(), Vec3::zeros(), 0.005).unwrap();
        assert_relative_eq!(out.sliding.x, 0.11, epsilon = 1e-15);
        assert_relative_eq!(out.command.x, -0.152, epsilon = 1e-15);
    }

    #[test]
    fn integrates_z_by_trapezoid() {
        let g = TrackingGains::reference();
        let zero = Vec3::zeros();
        let (_, st) = control_step(&g, &TrackingState::new(), Vec3::x(), zero, zero, zero, 0.1).unwrap();
        assert_eq!(st.z_int, zero);
        let (out, st) = control_step(&g, &st, Vec3::x() * 3.0, zero, zero, zero, 0.1).unwrap();
        assert_relative_eq!(st.z_int.x, 0.2, epsilon = 1e-15);
        assert_relative_eq!(out.sliding.x, 3.0 + 0.2 * 0.2, epsilon = 1e-15);
        assert_relative_eq!(st.t, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let g = TrackingGains::reference();
        let nan = Vec3::new(f64::NAN, 0.0, 0.0);
        let zero = Vec3::zeros();
        assert!(control_step(&g, &TrackingState::new(), nan, zero, zero, zero, 0.005).is_err());
        assert!(control_step(&g, &TrackingState::new(), zero, zero, zero, zero, 0.0).is_err());
    }

    #[test]
    fn ideal_loop_respects_sliding_bound() {
        // Continuous-time plant ṗ = command + Δ with |Δ| = δ_E, step 1e-4.
        let g = TrackingGains::reference();
        let dt = 1e-4;
        let mut st = TrackingState::new();
        let mut e = Vec3::new(0.5, -0.2, 0.1);
        let alpha = |t: f64| Vec3::new(0.5, -0.2, 0.1) * (-0.8 * t).exp();
        let mut max_s: f64 = 0.0;
        let mut max_zi: f64 = 0.0;
        for k in 0..100_000 {
            let t = k as f64 * dt;
            let ad = (alpha(t + dt) - alpha(t)) / dt;
            let (out, next) = control_step(&g, &st, e, Vec3::zeros(), alpha(t), ad, dt).unwrap();
            max_s = max_s.max(out.sliding.norm());
            max_zi = max_zi.max(next.z_int.norm());
            let disturbance = Vec3::new((3.0 * t).sin(), (5.0 * t).cos(), 0.3).normalize() * g.delta_e;
            e += (out.command + disturbance) * dt;
            st = next;
        }
        assert!(max_s <= g.sliding_bound() * 1.02, "{max_s}");
        assert!(max_zi <= g.integral_bound() * 1.02, "{max_zi}");
    }
}
