use std::f64::consts::PI;

use qgcyl::geometry::{build_basis, DomainSpec, GridResolution};
use qgcyl::grid::{GridVelocity, TransportGrid};
use qgcyl::transport::{
    advance_interior, advance_level, advance_plates, trace_characteristic, AnalyticVelocity, TransportOptions,
};
use qgcyl::Error;

fn rect_grid(n: usize) -> TransportGrid {
    let disc = build_basis(&DomainSpec::rectangle(1.0, 1.0, 1.0), 16, 4, GridResolution::Cartesian { nx: n, ny: n }).unwrap();
    TransportGrid::new(&disc, 0.3)
}

fn disk_grid() -> TransportGrid {
    let disc = build_basis(&DomainSpec::disk(1.0, 1.0), 24, 4, GridResolution::Auto).unwrap();
    TransportGrid::new(&disc, 0.3)
}

fn sample(grid: &TransportGrid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    grid.points().iter().map(|&(x, y)| f(x, y)).collect()
}

fn bump(x: f64, y: f64, cx: f64, cy: f64, r: f64) -> f64 {
    let s = ((x - cx).hypot(y - cy) / r).min(1.0);
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(4)
    }
}

#[test]
fn zero_velocity_is_the_identity() {
    let g = rect_grid(24);
    let q = sample(&g, |x, y| (3.0 * x).sin() + y * y);
    let still = AnalyticVelocity(|_, _, _| (0.0, 0.0));
    let out = advance_level(&g, &q, &still, 0.0, 0.1, 0.0, None, &TransportOptions::default()).unwrap();
    let worst = out.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-14, "{worst:e}");
}

#[test]
fn constant_forcing_adds_its_integral() {
    let g = rect_grid(24);
    let q = sample(&g, |x, _| x);
    let ones = vec![1.0; g.len()];
    let c = vec![-0.4; g.len()];
    let still = AnalyticVelocity(|_, _, _| (0.0, 0.0));
    let opts = TransportOptions::default();
    let out = advance_level(&g, &q, &still, 0.0, 0.25, 0.0, Some([&ones; 5]), &opts).unwrap();
    assert!(out.iter().zip(&q).all(|(a, b)| (a - b - 0.25).abs() < 1e-14));
    let plate = advance_level(&g, &q, &still, 0.0, 0.25, 0.0, Some([&c; 5]), &opts).unwrap();
    assert!(plate.iter().zip(&q).all(|(a, b)| (a - b + 0.1).abs() < 1e-14));
}

#[test]
fn beta_term_follows_the_meridional_displacement() {
    let g = rect_grid(24);
    let q = vec![0.0; g.len()];
    let drift = AnalyticVelocity(|_, _, _| (0.0, 0.3));
    let out = advance_level(&g, &q, &drift, 0.0, 0.5, 2.0, None, &TransportOptions::default()).unwrap();
    // F + βy is carried along, so F(t₁) = −β v Δt for F(t₀) = 0.
    assert!(out.iter().all(|v| (v + 2.0 * 0.3 * 0.5).abs() < 1e-12));
}

#[test]
fn rotation_leaves_radial_fields_unchanged() {
    let g = disk_grid();
    let q = sample(&g, |x, y| (-4.0 * (x * x + y * y)).exp());
    let rotation = AnalyticVelocity(|x: f64, y: f64, _| (-y, x));
    let mut out = q.clone();
    for k in 0..6 {
        let t0 = 0.05 * k as f64;
        out = advance_level(&g, &out, &rotation, t0, t0 + 0.05, 0.0, None, &TransportOptions::default()).unwrap();
    }
    let worst = out.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn translated_plate_bump_moves_by_the_displacement() {
    let g = rect_grid(64);
    let (u, steps, dt) = (0.5, 10, 0.02);
    let mut q = sample(&g, |x, y| bump(x, y, 0.4, 0.5, 0.2));
    let wind = AnalyticVelocity(move |_, _, _| (u, 0.0));
    let opts = TransportOptions::default();
    for k in 0..steps {
        let t0 = k as f64 * dt;
        q = advance_level(&g, &q, &wind, t0, t0 + dt, 0.0, None, &opts).unwrap();
    }
    let w = g.weights();
    let mass0: f64 = sample(&g, |x, y| bump(x, y, 0.4, 0.5, 0.2)).iter().zip(&w).map(|(a, b)| a * b).sum();
    let mass: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
    assert!((mass - mass0).abs() < 1e-6 * mass0, "{mass} vs {mass0}");
    let cx: f64 = g.points().iter().zip(&q).zip(&w).map(|((p, v), w)| p.0 * v * w).sum::<f64>() / mass;
    let shift = u * dt * steps as f64;
    assert!((cx - (0.4 + shift)).abs() < 1e-6, "centroid {cx}");
    let expected = sample(&g, |x, y| bump(x, y, 0.4 + shift, 0.5, 0.2));
    let worst = q.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    // Shape check only; bicubic interpolation error of a C³ bump over ten steps.
    assert!(worst < 5e-3, "{worst:e}");
}

#[test]
fn backward_then_forward_tracing_returns_home() {
    let v = AnalyticVelocity(|x: f64, y: f64, t: f64| (y.sin() + 0.3 * t, x.cos() - 0.2 * t * t));
    let start = (0.3, -0.2, 0.5);
    let back = trace_characteristic(&v, start, 1.0, 0.0, 1000).unwrap();
    let (dx, dy) = back.departure;
    let fwd = trace_characteristic(&v, (dx, dy, 0.5), 0.0, 1.0, 1000).unwrap();
    let err = (fwd.departure.0 - start.0).hypot(fwd.departure.1 - start.1);
    assert!(err < 1e-8, "{err:e}");
    assert_eq!(back.arrival.2, 0.5);
}

#[test]
fn rigid_rotation_preserves_radius_and_angle() {
    let omega = 1.0;
    let v = AnalyticVelocity(move |x: f64, y: f64, _| (-omega * y, omega * x));
    for &(x, y) in &[(0.5, 0.0), (0.2, 0.7), (-0.9, 0.1)] {
        let tr = trace_characteristic(&v, (x, y, 0.0), 2.0 * PI, 0.0, 1000).unwrap();
        let err = (tr.departure.0 - x).hypot(tr.departure.1 - y);
        assert!(err < 1e-8, "{err:e}");
        let quarter = trace_characteristic(&v, (x, y, 0.0), 0.5 * PI, 0.0, 250).unwrap();
        // Backward by a quarter turn: rotate by −π/2.
        assert!((quarter.departure.0 - y).abs() < 1e-8 && (quarter.departure.1 + x).abs() < 1e-8);
        for &(_, px, py) in &tr.path {
            assert!((px.hypot(py) - x.hypot(y)).abs() < 1e-8);
        }
    }
}

#[test]
fn arrival_outside_the_box_is_rejected() {
    let g = rect_grid(16);
    let zero = GridVelocity::zeros(g.len());
    let src = qgcyl::transport::GridVelocitySource {
        grid: &g,
        before: &zero,
        after: &zero,
        t0: 0.0,
        t1: 1.0,
    };
    assert!(matches!(trace_characteristic(&src, (5.0, 0.0, 0.0), 1.0, 0.0, 4), Err(Error::OutsideBox { .. })));
}

#[test]
fn monotone_option_removes_overshoot() {
    let g = rect_grid(32);
    let q = sample(&g, |x, y| if (x - 0.5).hypot(y - 0.5) < 0.15 { 1.0 } else { 0.0 });
    let rot = AnalyticVelocity(|x: f64, y: f64, _| (-(y - 0.5), x - 0.5));
    for (monotone, limit) in [(true, 0.0), (false, 0.3)] {
        let opts = TransportOptions { substeps: 1, monotone };
        let mut f = q.clone();
        for k in 0..5 {
            let t0 = 0.1 * k as f64;
            f = advance_level(&g, &f, &rot, t0, t0 + 0.1, 0.0, None, &opts).unwrap();
        }
        let over = f.iter().map(|v| (v - 1.0).max(-v).max(0.0)).fold(0.0, f64::max);
        assert!(over <= limit + 1e-15, "monotone {monotone}: overshoot {over}");
    }
}

#[test]
fn smooth_data_stay_within_one_percent_of_their_range() {
    let g = rect_grid(32);
    let q = sample(&g, |x, y| bump(x, y, 0.5, 0.5, 0.3));
    let rot = AnalyticVelocity(|x: f64, y: f64, _| (-(y - 0.5), x - 0.5));
    let mut f = q.clone();
    for k in 0..10 {
        let t0 = 0.1 * k as f64;
        f = advance_level(&g, &f, &rot, t0, t0 + 0.1, 0.0, None, &TransportOptions::default()).unwrap();
    }
    let over = f.iter().map(|v| (v - 1.0).max(-v).max(0.0)).fold(0.0, f64::max);
    assert!(over <= 0.01, "{over}");
}

#[test]
fn levels_are_independent() {
    let g = rect_grid(24);
    let vel = |s: f64| {
        let mut v = GridVelocity::zeros(g.len());
        for (i, &(x, y)) in g.points().iter().enumerate() {
            v.c1[i] = -s * (y - 0.5);
            v.c2[i] = s * (x - 0.5);
        }
        v
    };
    let before = vec![vel(1.0), vel(-0.5)];
    let after = vec![vel(1.2), vel(-0.4)];
    let f = vec![sample(&g, |x, _| x), sample(&g, |_, y| y * y)];
    let opts = TransportOptions::default();
    let both = advance_interior(&g, &f, &before, &after, 0.0, 0.1, 0.0, None, &opts).unwrap();
    let alone = advance_interior(&g, &f[..1], &before[..1], &after[..1], 0.0, 0.1, 0.0, None, &opts).unwrap();
    assert_eq!(both[0], alone[0]);
    let plates = advance_plates(&g, &[f[0].clone(), f[1].clone()], [&before[0], &before[1]], [&after[0], &after[1]], 0.0, 0.1, None, &opts).unwrap();
    assert_eq!(plates[0], both[0]);
}
