//! Envelope-guaranteed kinematic tracking for a quadcopter carrying a delta arm.
//!
//! The controller drives the end-effector error along a preset trajectory that
//! stays inside an exponential performance envelope, and a small box QP splits
//! the commanded end-effector velocity between base and arm.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod envelope;
pub mod error;
pub mod kinematics;
pub mod metrics;
pub mod plant;
pub mod preset;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod tracking;
pub mod types;

pub use alloc::{
    assemble, integrate_references, solve_box_qp, AllocationProblem, BoundsModel, BoxQpSolver,
    QpSolution, References, SolverSettings,
};
pub use envelope::{make_envelope, rho_at, EnvelopeParams};
pub use error::{Error, Result};
pub use kinematics::{
    composite_fk, delta_fk, delta_ik, jacobian, DeltaGeometry, MountingConfig, RigState,
};
pub use metrics::{convergence_time, terminal_error, RunMetrics, TraceMetrics, TraceRow};
pub use plant::{clik_baseline, measure, plant_step, NoiseParams, PlantParams, PlantRefs};
pub use preset::{choose_c, PresetSample, PresetTrajectory};
pub use report::{batch, recompute_dir, write_batch, BatchReport, RecomputedReport};
pub use scenario::{Method, Scenario};
pub use sim::{run_scenario, run_scenario_with, RunOptions, RunOutput};
pub use tracking::{control_step, delta_z_bound, ControlOutput, TrackingGains, TrackingState};
pub use types::{skew, yaw_rotation, DiagGain, Jacobian, Mat3, Mat6, Rot3, Vec3, Vec6};
