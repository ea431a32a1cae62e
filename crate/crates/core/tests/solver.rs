use std::f64::consts::PI;
use std::sync::Arc;

use qgcyl::fields::StreamState;
use qgcyl::geometry::DomainSpec;
use qgcyl::grid::TransportGrid;
use qgcyl::scenario::scenario;
use qgcyl::solver::{write_diagnostics, ProblemData, RunConfig, Simulation, TrajectoryState};
use qgcyl::Error;

fn small(domain: DomainSpec) -> RunConfig {
    RunConfig {
        domain,
        n_modes: 24,
        vertical_modes: 4,
        dt: 0.05,
        t_final: 0.2,
        window_steps: 4,
        ..Default::default()
    }
}

fn square() -> DomainSpec {
    DomainSpec::rectangle(1.0, 1.0, 1.0)
}

/// A trajectory whose streams vanish, so the mollified velocity is zero.
fn frozen(sim: &Simulation, f: &[Vec<f64>], g: &[Vec<f64>; 2], nodes: usize) -> TrajectoryState {
    let (_, triple) = sim.solve_at(f, g).unwrap();
    TrajectoryState {
        times: (0..nodes).map(|k| 0.05 * k as f64).collect(),
        streams: vec![StreamState::zeros(&sim.disc); nodes],
        interior: vec![f.to_vec(); nodes],
        plates: vec![g.clone(); nodes],
        data: vec![triple; nodes],
        iterations: 0,
        history: Vec::new(),
    }
}

#[test]
fn zero_data_and_zero_velocity_give_zero() {
    let sim = Simulation::new(small(square()), ProblemData::zero()).unwrap();
    let (f, g) = sim.initial_fields();
    let p = frozen(&sim, &f, &g, 3);
    let q = sim.apply_s_epsilon(&p, &sim.forcing_window(0.0, 0.05, 2)).unwrap();
    assert!(q.streams.iter().all(|s| s.h_norm() == 0.0));
}

#[test]
fn zero_velocity_reproduces_the_initial_solve() {
    let mut data = ProblemData::zero();
    data.f0 = Arc::new(|x, y, _| (PI * x).sin() * (PI * y).sin());
    data.balance_j0 = true;
    let sim = Simulation::new(small(square()), data).unwrap();
    let (f, g) = sim.initial_fields();
    let (psi0, _) = sim.solve_at(&f, &g).unwrap();
    assert!(psi0.h_norm() > 0.0);
    let p = frozen(&sim, &f, &g, 4);
    let q = sim.apply_s_epsilon(&p, &sim.forcing_window(0.0, 0.05, 3)).unwrap();
    // Node 0 is carried over from the input trajectory.
    for s in &q.streams[1..] {
        assert!(s.h_distance(&psi0) < 1e-12 * psi0.h_norm(), "{:e}", s.h_distance(&psi0));
    }
}

#[test]
fn steady_disk_state_converges_at_once() {
    let domain = DomainSpec::disk(1.0, 1.0);
    let spec = scenario("steady-disk", &domain, 1.0, 0).unwrap();
    let sim = Simulation::new(small(domain), spec.data).unwrap();
    let (f, g) = sim.initial_fields();
    let (traj, _) = sim.picard_fixed_point(0.0, &f, &g, 0.05, 4).unwrap();
    assert!(traj.iterations <= 2, "{} iterations", traj.iterations);
    let first = &traj.streams[0];
    for s in &traj.streams {
        assert!(s.h_distance(first) < 1e-6);
    }
}

#[test]
fn generic_window_contracts() {
    let spec = scenario("generic", &square(), 1.0, 0).unwrap();
    let sim = Simulation::new(small(square()), spec.data).unwrap();
    let (f, g) = sim.initial_fields();
    let (traj, forcing) = sim.picard_fixed_point(0.0, &f, &g, 0.05, 4).unwrap();
    assert!(traj.iterations >= 2);
    let ratio = traj.contraction_ratio();
    assert!(ratio > 0.0 && ratio < 1.0, "ratio {ratio}");
    assert!(traj.history.windows(2).all(|w| w[1] < w[0]), "{:?}", traj.history);
    // One more application moves the fixed point by at most ten times the tolerance.
    let again = sim.apply_s_epsilon(&traj, &forcing).unwrap();
    let scale = 1.0 + traj.streams.iter().map(|s| s.h_norm()).fold(0.0, f64::max);
    let moved = again
        .streams
        .iter()
        .zip(&traj.streams)
        .map(|(a, b)| a.h_distance(b))
        .fold(0.0, f64::max);
    assert!(moved <= 10.0 * sim.config.picard_tol * scale, "{moved:e}");
}

#[test]
fn march_keeps_circulation_and_lateral_trace() {
    let spec = scenario("random", &square(), 1.0, 11).unwrap();
    let sim = Simulation::new(small(square()), spec.data).unwrap();
    let j = sim.j0.l2_norm(&sim.disc);
    let mut seen = 0;
    let summary = sim
        .march(&mut |rec, psi| {
            assert!(psi.mean().abs() < 1e-12);
            assert!(rec.circulation_deviation <= 1e-6 * (1.0 + j));
            assert!(rec.trace_spread < 1e-10);
            seen += 1;
            Ok(())
        })
        .unwrap();
    assert_eq!(seen, summary.records.len());
    assert_eq!(summary.records.len(), 5);
    assert!(summary.records[0].defect.abs() < 1e-12);
    assert!(summary.records.iter().all(|r| r.energy_ratio > 0.0));
}

#[test]
fn small_epsilon_is_raised_to_the_resolved_minimum() {
    let mut cfg = small(square());
    cfg.epsilon = Some(1e-4);
    let sim = Simulation::new(cfg, ProblemData::zero()).unwrap();
    let spacing = TransportGrid::new(&sim.disc, 0.0).spacing();
    assert!((sim.epsilon() - 4.0 * spacing).abs() < 1e-15);
    assert_eq!(sim.config.epsilon, Some(sim.epsilon()));
}

#[test]
fn failed_windows_surface_their_history() {
    let mut cfg = small(square());
    cfg.picard_max_iter = 1;
    cfg.window_steps = 1;
    cfg.min_dt = cfg.dt;
    let spec = scenario("generic", &square(), 1.0, 0).unwrap();
    let sim = Simulation::new(cfg, spec.data).unwrap();
    match sim.march(&mut |_, _| Ok(())) {
        Err(Error::WindowUnderflow { t0, history, .. }) => {
            assert_eq!(t0, 0.0);
            assert_eq!(history.len(), 1);
        }
        other => panic!("expected underflow, got {:?}", other.map(|s| s.windows)),
    }
}

#[test]
fn diagnostics_file_names_every_column() {
    let sim = Simulation::new(RunConfig { t_final: 0.05, ..small(square()) }, ProblemData::zero()).unwrap();
    let s = sim.march(&mut |_, _| Ok(())).unwrap();
    let mut buf = Vec::new();
    write_diagnostics(&mut buf, &s.records).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    for col in [
        "time",
        "f_l2",
        "g_l2",
        "circulation_deviation",
        "defect",
        "h_norm",
        "decay",
        "trace_bottom",
        "trace_mid",
        "trace_top",
        "energy_ratio",
        "picard_iterations",
        "contraction_ratio",
    ] {
        assert!(header.split(',').any(|h| h == col), "missing {col}");
    }
    assert_eq!(text.lines().count(), 1 + s.records.len());
}
