//! Run metrics computed from a recorded trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Vec3, Vec6};

/// Length of the terminal-error window (s).
pub const TERMINAL_WINDOW: f64 = 5.0;

const TIME_SLACK: f64 = 1e-9;

/// One recorded sample of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub p_e: Vec3,
    pub p_o: Vec3,
    pub e: Vec3,
    pub rho: Vec3,
    pub alpha: Vec3,
    pub cmd: Vec3,
    pub x_star: Vec6,
    pub p_b: Vec3,
    pub q: Vec3,
}

impl TraceRow {
    pub fn inside_envelope(&self) -> bool {
        (0..3).all(|i| self.e[i].abs() < self.rho[i])
    }
}

/// First time after which `‖e‖ ≤ ‖ρ_∞‖` holds for the rest of the trace, or
/// `+∞` if the last sample is still outside.
pub fn convergence_time(trace: &[TraceRow], rho_inf: &Vec3) -> f64 {
    let bound = rho_inf.norm();
    match trace.iter().rposition(|r| r.e.norm() > bound) {
        None => trace.first().map_or(0.0, |r| r.t),
        Some(i) => trace.get(i + 1).map_or(f64::INFINITY, |r| r.t),
    }
}

/// Mean and population standard deviation of `‖e‖` over the window
/// `[t_c, t_c + 5 s]` following convergence.
pub fn terminal_error(trace: &[TraceRow], rho_inf: &Vec3) -> Result<(f64, f64)> {
    let t_c = convergence_time(trace, rho_inf);
    let end = trace.last().map_or(0.0, |r| r.t);
    let needed = t_c + TERMINAL_WINDOW;
    if !(end >= needed - TIME_SLACK) {
        return Err(Error::WindowIncomplete { needed, end });
    }
    let window: Vec<f64> = trace
        .iter()
        .filter(|r| r.t >= t_c - TIME_SLACK && r.t <= needed + TIME_SLACK)
        .map(|r| r.e.norm())
        .collect();
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Mean of `‖e‖` over the whole trace.
pub fn average_error(trace: &[TraceRow]) -> f64 {
    if trace.is_empty() {
        return 0.0;
    }
    trace.iter().map(|r| r.e.norm()).sum::<f64>() / trace.len() as f64
}

/// `+∞` and NaN are written as `null`.
mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub avg_error: f64,
    #[serde(with = "nullable")]
    pub convergence_time: f64,
    /// `None` when the run did not converge early enough to fill the window.
    pub terminal_error: Option<f64>,
    pub terminal_error_std: Option<f64>,
    /// Plant ticks at which some `|e_ν| ≥ ρ_ν`.
    pub envelope_violations: usize,
    pub qp_nonconverged: usize,
    /// Largest `‖s‖` seen by the tracking law.
    pub max_sliding_norm: f64,
    /// Largest realized `‖ṗ_E − ṗ_E,d‖` over a control period.
    pub max_delta: f64,
}

/// The metrics that depend only on the recorded trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMetrics {
    pub avg_error: f64,
    #[serde(with = "nullable")]
    pub convergence_time: f64,
    pub terminal_error: Option<f64>,
    pub terminal_error_std: Option<f64>,
    /// Recorded rows outside the envelope.
    pub rows_outside: usize,
}

impl TraceMetrics {
    pub fn from_trace(trace: &[TraceRow], rho_inf: &Vec3) -> Self {
        let terminal = terminal_error(trace, rho_inf).ok();
        TraceMetrics {
            avg_error: average_error(trace),
            convergence_time: convergence_time(trace, rho_inf),
            terminal_error: terminal.map(|t| t.0),
            terminal_error_std: terminal.map(|t| t.1),
            rows_outside: trace.iter().filter(|r| !r.inside_envelope()).count(),
        }
    }
}
