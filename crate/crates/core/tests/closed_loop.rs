use amctl_core::plant::NoiseParams;
use amctl_core::{run_scenario, run_scenario_with, Method, RunOptions, Scenario};

fn median(v: &[usize]) -> usize {
    let mut s = v.to_vec();
    s.sort_unstable();
    s[s.len() / 2]
}

#[test]
fn shipped_presets_stay_inside_the_envelope() {
    for name in ["example1", "example1-gps1cm", "example2", "example3"] {
        let sc = Scenario::preset(name).unwrap();
        for seed in [0, 1] {
            let run = run_scenario(&sc, seed).unwrap();
            assert_eq!(run.metrics.envelope_violations, 0, "{name} seed {seed}");
            assert_eq!(run.metrics.qp_nonconverged, 0, "{name} seed {seed}");
            assert!(run.trace.iter().all(|r| r.inside_envelope()), "{name} seed {seed}");
        }
    }
}

#[test]
fn trace_covers_the_whole_run() {
    let sc = Scenario::preset("example3").unwrap();
    let run = run_scenario(&sc, 0).unwrap();
    assert_eq!(run.trace.len(), (sc.duration / sc.trace_dt).round() as usize + 1);
    assert_eq!(run.trace[0].t, 0.0);
    assert!((run.trace.last().unwrap().t - sc.duration).abs() < 1e-9);
    assert_eq!(run.qp_iterations.len(), sc.control_ticks() + 1);
}

#[test]
fn same_seed_is_bit_identical() {
    let sc = Scenario::preset("example2").unwrap();
    let a = run_scenario(&sc, 11).unwrap();
    let b = run_scenario(&sc, 11).unwrap();
    assert_eq!(a.trace, b.trace);
    let c = run_scenario(&sc, 12).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn warm_start_saves_iterations() {
    // A moving target keeps the rig in motion for the whole run, so the
    // acceleration box excludes zero and the active set carries over.
    let mut sc = Scenario::preset("example1").unwrap();
    sc.target_velocity = amctl_core::Vec3::new(0.1, 0.0, 0.0);
    let warm = run_scenario_with(&sc, 0, RunOptions { warm_start: true }).unwrap();
    let cold = run_scenario_with(&sc, 0, RunOptions { warm_start: false }).unwrap();
    assert!(
        median(&warm.qp_iterations) < median(&cold.qp_iterations),
        "warm {} cold {}",
        median(&warm.qp_iterations),
        median(&cold.qp_iterations)
    );
    // Same problems, same answers.
    for (w, c) in warm.trace.iter().zip(&cold.trace).take(50) {
        assert!((w.x_star - c.x_star).norm() < 1e-6);
    }
}

#[test]
fn starting_on_target_holds_still() {
    let mut sc = Scenario::preset("example1").unwrap();
    sc.target_p_o = sc.start_p_e;
    sc.rho0 = sc.rho_inf * 5.0;
    sc.plant.noise = NoiseParams::none();
    let run = run_scenario(&sc, 0).unwrap();
    assert!(run.trace.iter().all(|r| r.e.norm() < 1e-12));
    assert_eq!(run.metrics.convergence_time, 0.0);
    assert!(run.metrics.max_delta < 1e-9);
}

#[test]
fn preset_converges_before_clik() {
    let mut sc = Scenario::preset("example1").unwrap();
    let preset = run_scenario(&sc, 0).unwrap().metrics;
    sc.method = Method::Clik;
    let clik = run_scenario(&sc, 0).unwrap().metrics;
    assert!(preset.convergence_time < clik.convergence_time);
    assert!(preset.avg_error < clik.avg_error);
}

#[test]
fn fast_plant_keeps_the_sliding_vector_bounded() {
    let mut sc = Scenario::preset("example1").unwrap();
    sc.plant.tau_base = 1e-3;
    sc.plant.tau_arm = 1e-3;
    sc.plant.dt = 2e-4;
    sc.weights *= 0.01;
    let m = run_scenario(&sc, 0).unwrap().metrics;
    assert!(m.max_delta <= sc.gains.delta_e);
    assert!(m.max_sliding_norm <= sc.gains.sliding_bound() * 1.02);
}

#[test]
fn moving_target_is_tracked() {
    let mut sc = Scenario::preset("example1").unwrap();
    sc.target_velocity = amctl_core::Vec3::new(0.1, -0.05, 0.0);
    let run = run_scenario(&sc, 0).unwrap();
    assert_eq!(run.metrics.envelope_violations, 0);
    assert!(run.metrics.convergence_time.is_finite());
}
