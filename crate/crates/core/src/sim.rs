//! Closed-loop simulation of one scenario.
//!
//! Every control tick measures the rig, computes the desired end-effector
//! velocity, allocates it between base and arm, integrates the references and
//! then advances the plant over the hold interval.

use log::warn;

use crate::alloc::{assemble, integrate_references, BoxQpSolver};
use crate::error::{Error, Result};
use crate::kinematics::{composite_fk, jacobian};
use crate::metrics::{RunMetrics, TraceMetrics, TraceRow};
use crate::plant::{clik_baseline, measure, plant_step, NoiseParams, PlantRefs};
use crate::preset::PresetTrajectory;
use crate::scenario::{Method, Scenario};
use crate::tracking::{control_step, TrackingState};
use crate::types::{Vec3, Vec6};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Warm-start the allocation QP from the previous tick.
    pub warm_start: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { warm_start: true }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub seed: u64,
    pub trace: Vec<TraceRow>,
    pub metrics: RunMetrics,
    /// Solver iterations per control tick.
    pub qp_iterations: Vec<usize>,
}

/// The preset trajectory used by the scenario for initial error `e0`.
pub fn preset_for(sc: &Scenario, e0: Vec3) -> Result<PresetTrajectory> {
    let env = sc.envelope()?;
    let e0_dot = -sc.target_velocity;
    match sc.c {
        Some(c) => {
            let traj = PresetTrajectory::new(env.decay(), e0, e0_dot, c)?;
            if !traj.keeps_margin(&env, sc.gains.delta_z_bound()) {
                warn!(
                    "scenario {:?}: explicit c = {:?} does not keep the preset trajectory inside the envelope",
                    sc.name,
                    c.as_slice()
                );
            }
            Ok(traj)
        }
        None => PresetTrajectory::from_envelope(&env, e0, e0_dot, sc.gains.delta_z_bound(), sc.c_safety),
    }
}

pub fn run_scenario(sc: &Scenario, seed: u64) -> Result<RunOutput> {
    run_scenario_with(sc, seed, RunOptions::default())
}

pub fn run_scenario_with(sc: &Scenario, seed: u64, opts: RunOptions) -> Result<RunOutput> {
    sc.validate()?;
    let mut plant = sc.plant;
    plant.noise = NoiseParams { seed, ..plant.noise };
    let env = sc.envelope()?;
    let t_ctrl = sc.control_dt;
    let substeps = sc.substeps();
    let ticks = sc.control_ticks();
    let trace_every = sc.trace_every();

    let target_at = |t: f64| sc.target_p_o + sc.target_velocity * t;
    let mut truth = sc.initial_state()?;
    let mut s_d = truth.allocation_state();
    let mut x_prev = Vec6::zeros();
    let mut tracking = TrackingState::new();
    let mut solver = if opts.warm_start {
        BoxQpSolver::new(sc.solver)
    } else {
        BoxQpSolver::cold(sc.solver)
    };

    let mut trace = Vec::with_capacity(ticks / trace_every + 1);
    let mut qp_iterations = Vec::with_capacity(ticks + 1);
    let mut preset: Option<PresetTrajectory> = None;
    let mut violations = 0usize;
    let mut qp_nonconverged = 0usize;
    let mut max_sliding: f64 = 0.0;
    let mut max_delta: f64 = 0.0;
    let mut delta_over_cap = 0usize;

    let outside = |e: &Vec3, t: f64| -> Result<bool> {
        let rho = env.rho_at(t)?;
        Ok((0..3).any(|i| e[i].abs() >= rho[i]))
    };
    if outside(&(composite_fk(&truth, &sc.mounting) - target_at(0.0)), 0.0)? {
        violations += 1;
    }

    for k in 0..=ticks {
        let tick = |e: Error| e.at_tick(k);
        let t = k as f64 * t_ctrl;
        let p_o = target_at(t);
        let seen = measure(&plant, &truth, k as u64);
        let e_meas = composite_fk(&seen, &sc.mounting) - p_o;
        let traj = match &preset {
            Some(p) => *p,
            None => *preset.insert(preset_for(sc, e_meas).map_err(tick)?),
        };
        let alpha = traj.sample(t).map_err(tick)?.alpha;

        let cmd = match sc.method {
            Method::Preset => {
                // Secant of α over the hold interval: the zero-order-held
                // command then moves the error exactly as α moves.
                let alpha_rate = traj.mean_rate(t, t_ctrl).map_err(tick)?;
                let (out, next) = control_step(
                    &sc.gains,
                    &tracking,
                    e_meas,
                    sc.target_velocity,
                    alpha,
                    alpha_rate,
                    t_ctrl,
                )
                .map_err(tick)?;
                tracking = next;
                max_sliding = max_sliding.max(out.sliding.norm());
                out.command
            }
            Method::Clik => clik_baseline(&sc.clik_gain, &e_meas, &sc.target_velocity).map_err(tick)?,
        };

        let (j, drift) = jacobian(&seen, &sc.mounting);
        let problem = assemble(&j, &drift, &cmd, &sc.weights, &sc.bounds, &s_d, &x_prev, t_ctrl)
            .map_err(tick)?;
        let sol = solver.solve(&problem);
        qp_iterations.push(sol.iterations);
        if !sol.converged {
            qp_nonconverged += 1;
        }

        let p_e_now = composite_fk(&truth, &sc.mounting);
        if k % trace_every == 0 {
            trace.push(TraceRow {
                t,
                p_e: p_e_now,
                p_o,
                e: p_e_now - p_o,
                rho: env.rho_at(t).map_err(tick)?,
                alpha,
                cmd,
                x_star: sol.x,
                p_b: truth.p_b,
                q: truth.q,
            });
        }
        if k == ticks {
            break;
        }

        let refs = integrate_references(&sol.x, &s_d, t_ctrl, &sc.geometry).map_err(tick)?;
        s_d = refs.s_d;
        x_prev = sol.x;
        let plant_refs = PlantRefs {
            p_b_d: refs.p_b_d,
            q_d: refs.q_d,
            psi_d: sc.yaw,
        };
        for j in 0..substeps {
            truth = plant_step(&plant, &sc.geometry, &truth, &plant_refs).map_err(tick)?;
            let tj = t + (j + 1) as f64 * plant.dt;
            let e_true = composite_fk(&truth, &sc.mounting) - target_at(tj);
            if outside(&e_true, tj).map_err(tick)? {
                violations += 1;
            }
        }
        let realized = (composite_fk(&truth, &sc.mounting) - p_e_now) / t_ctrl;
        let delta = (realized - cmd).norm();
        if delta > plant.delta_cap {
            delta_over_cap += 1;
        }
        max_delta = max_delta.max(delta);
    }

    if delta_over_cap > 0 {
        warn!(
            "scenario {:?} seed {seed}: realized velocity error exceeded {} m/s on {delta_over_cap} ticks (max {max_delta:.4})",
            sc.name, plant.delta_cap
        );
    }
    let tm = TraceMetrics::from_trace(&trace, &sc.rho_inf);
    let metrics = RunMetrics {
        avg_error: tm.avg_error,
        convergence_time: tm.convergence_time,
        terminal_error: tm.terminal_error,
        terminal_error_std: tm.terminal_error_std,
        envelope_violations: violations,
        qp_nonconverged,
        max_sliding_norm: max_sliding,
        max_delta,
    };
    Ok(RunOutput {
        seed,
        trace,
        metrics,
        qp_iterations,
    })
}
