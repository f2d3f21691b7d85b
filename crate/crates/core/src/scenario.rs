//! Scenario files: a TOML description of one point-to-point tracking task
//! together with every controller, allocation and plant setting.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alloc::{BoundsModel, SolverSettings};
use crate::envelope::{EnvelopeParams, DEFAULT_TOLERANCE_RATIO};
use crate::error::{Error, Result};
use crate::kinematics::{DeltaGeometry, MountingConfig, RigState};
use crate::plant::PlantParams;
use crate::preset::DEFAULT_C_SAFETY;
use crate::tracking::TrackingGains;
use crate::types::{DiagGain, Rot3, Vec3, Vec6};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Preset-trajectory sliding-mode law.
    #[default]
    Preset,
    /// Proportional closed-loop inverse kinematics.
    Clik,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "preset" => Ok(Method::Preset),
            "clik" => Ok(Method::Clik),
            other => Err(Error::Config(format!("unknown method {other:?} (expected preset or clik)"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Preset => "preset",
            Method::Clik => "clik",
        })
    }
}

fn default_rho_inf() -> Vec3 {
    Vec3::repeat(0.02)
}

fn default_weights() -> Vec6 {
    Vec6::from_row_slice(&[1.0, 1.0, 1.0, 0.05, 0.05, 0.05]) * 1e-2
}

fn default_clik_gain() -> DiagGain {
    DiagGain::isotropic(0.8).unwrap()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub start_p_e: Vec3,
    pub target_p_o: Vec3,
    #[serde(default)]
    pub target_velocity: Vec3,
    pub t_p: f64,
    pub rho0: Vec3,
    #[serde(default = "default_rho_inf")]
    pub rho_inf: Vec3,
    /// `ε_p` as a fraction of `‖ρ_∞‖`.
    #[serde(default = "default_tolerance_ratio")]
    pub tolerance_ratio: f64,
    /// Explicit preset-trajectory `c`; computed from the envelope when absent.
    #[serde(default)]
    pub c: Option<Vec3>,
    #[serde(default = "default_c_safety")]
    pub c_safety: f64,
    #[serde(default)]
    pub method: Method,
    pub duration: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Desired base yaw (rad).
    #[serde(default)]
    pub yaw: f64,
    #[serde(default = "default_control_dt")]
    pub control_dt: f64,
    #[serde(default = "default_trace_dt")]
    pub trace_dt: f64,
    #[serde(default = "default_clik_gain")]
    pub clik_gain: DiagGain,
    #[serde(default = "default_weights")]
    pub weights: Vec6,
    #[serde(default)]
    pub gains: TrackingGains,
    #[serde(default)]
    pub bounds: BoundsModel,
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default)]
    pub geometry: DeltaGeometry,
    #[serde(default)]
    pub mounting: MountingConfig,
    #[serde(default)]
    pub solver: SolverSettings,
}

fn default_tolerance_ratio() -> f64 {
    DEFAULT_TOLERANCE_RATIO
}

fn default_c_safety() -> f64 {
    DEFAULT_C_SAFETY
}

fn default_control_dt() -> f64 {
    0.005
}

fn default_trace_dt() -> f64 {
    0.01
}

const PRESETS: [(&str, &str); 4] = [
    ("example1", include_str!("../scenarios/example1.toml")),
    ("example1-gps1cm", include_str!("../scenarios/example1-gps1cm.toml")),
    ("example2", include_str!("../scenarios/example2.toml")),
    ("example3", include_str!("../scenarios/example3.toml")),
];

/// Names of the scenarios that ship with the library.
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn preset(name: &str) -> Result<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Scenario::from_toml_str(text))
            .unwrap_or_else(|| Err(Error::Config(format!("no preset scenario named {name:?}"))))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Scenario::from_toml_str(&text)
    }

    /// A file path if one exists, otherwise a preset name.
    pub fn load(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if path.exists() {
            Scenario::from_file(path)
        } else {
            Scenario::preset(spec)
        }
    }

    /// Replaces `t_p` and stretches the duration so the terminal window fits.
    pub fn with_preset_time(mut self, t_p: f64) -> Result<Self> {
        self.t_p = t_p;
        self.duration = self.duration.max(1.1 * t_p + 6.0);
        self.validate()?;
        Ok(self)
    }

    /// Initial end-effector error `p_E(0) − p_O(0)`.
    pub fn initial_error(&self) -> Vec3 {
        self.start_p_e - self.target_p_o
    }

    pub fn envelope(&self) -> Result<EnvelopeParams> {
        EnvelopeParams::with_tolerance_ratio(
            self.rho0,
            self.rho_inf,
            self.t_p,
            self.initial_error(),
            self.tolerance_ratio,
        )
    }

    /// Control ticks per trace row.
    pub fn trace_every(&self) -> usize {
        ((self.trace_dt / self.control_dt).round() as usize).max(1)
    }

    /// Plant steps per control tick.
    pub fn substeps(&self) -> usize {
        (self.control_dt / self.plant.dt).round() as usize
    }

    pub fn control_ticks(&self) -> usize {
        (self.duration / self.control_dt).round() as usize
    }

    /// Rig at rest with the arm centred in its box and the end effector at
    /// `start_p_e`.
    pub fn initial_state(&self) -> Result<RigState> {
        let p_e_d: Vec3 = ((self.bounds.s_min + self.bounds.s_max) * 0.5).fixed_rows::<3>(3).into();
        let q = self.geometry.ik(&p_e_d)?;
        let r_b = Rot3::yaw(self.yaw);
        let body = &self.mounting.r_d_b * &p_e_d + self.mounting.p_c_b;
        let p_b = self.start_p_e - &r_b * &body;
        Ok(RigState {
            p_b,
            r_b,
            omega: Vec3::zeros(),
            p_e_d,
            q,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(format!("scenario {:?}: {msg}", self.name)));
        if !(self.duration.is_finite() && self.duration >= self.t_p) {
            return cfg(format!("duration {} must be at least t_p = {}", self.duration, self.t_p));
        }
        if !(self.control_dt > 0.0 && self.trace_dt >= self.control_dt) {
            return cfg(format!(
                "control_dt {} and trace_dt {} must satisfy 0 < control_dt ≤ trace_dt",
                self.control_dt, self.trace_dt
            ));
        }
        let ratio = self.control_dt / self.plant.dt;
        if !(ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
            return cfg(format!(
                "control_dt {} must be a whole multiple of the plant step {}",
                self.control_dt, self.plant.dt
            ));
        }
        if self.seeds.is_empty() {
            return cfg("at least one seed is required".into());
        }
        if !(self.c_safety > 1.0) {
            return cfg(format!("c_safety must exceed 1, got {}", self.c_safety));
        }
        let wrap = |e: Error| Error::Config(format!("scenario {:?}: {e}", self.name));
        self.plant.validate().map_err(wrap)?;
        self.geometry.validate().map_err(wrap)?;
        self.bounds.validate().map_err(wrap)?;
        self.envelope().map_err(wrap)?;
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return cfg("allocation weights must be positive".into());
        }
        self.initial_state().map_err(wrap)?;
        Ok(())
    }
}
