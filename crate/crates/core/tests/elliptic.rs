use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use qgcyl::elliptic::{
    compatibility_defect, neumann_series_solution, stability_ratio, BoundaryTriple, EllipticSolver,
};
use qgcyl::fields::{CirculationProfile, ScalarField3D, StreamState, SurfaceFieldPair};
use qgcyl::geometry::quadrature::gauss_legendre;
use qgcyl::geometry::{build_basis, Discretization, DomainSpec, GridResolution, LambdaProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn project(disc: &Discretization, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let v = &disc.vertical;
    let (zs, ws) = gauss_legendre(200, 0.0, disc.height());
    let mut p = DVector::zeros(v.size());
    for (z, w) in zs.iter().zip(&ws) {
        let (phi, _, _) = v.modes_at(*z);
        for m in 0..v.size() {
            p[m] += w * f(*z) * phi[m];
        }
    }
    (v.mass.clone().try_inverse().unwrap() * p).as_slice().to_vec()
}

/// Ψ* = e_1(x,y)cos(πz/h) + cos(πz/h) with its data (f, g, j) in closed form.
fn manufactured(disc: &Arc<Discretization>) -> (StreamState, BoundaryTriple) {
    let h = disc.height();
    let lam = disc.domain.lambda;
    let k = PI / h;
    let l1 = disc.horizontal.eigenvalues()[0];
    let mu = disc.horizontal.means().to_vec();
    let n = disc.n_modes();
    let levels = disc.levels().to_vec();
    let vert_l = |z: f64| -lam.value(z, h) * k * k * (k * z).cos() - lam.derivative(z, h) * k * (k * z).sin();
    let mut data = vec![0.0; n * levels.len()];
    for (l, &z) in levels.iter().enumerate() {
        for m in 0..n {
            data[l * n + m] = mu[m] * vert_l(z);
        }
        data[l * n] += -l1 * (k * z).cos() + vert_l(z);
    }
    let f = ScalarField3D::from_coefficients(disc, data).unwrap();
    let j = CirculationProfile::from_fn(disc, |z| -l1 * mu[0] * (k * z).cos());
    let triple = BoundaryTriple {
        f,
        g: SurfaceFieldPair::zeros(n),
        j,
    };
    let mut exact = StreamState::zeros(disc);
    let c = project(disc, |z| (k * z).cos());
    exact.mode_mut(0).copy_from_slice(&c);
    exact.v.copy_from_slice(&c);
    exact.v[0] = 0.0;
    exact.normalize_mean();
    (exact, triple)
}

#[test]
fn manufactured_solution_is_recovered() {
    for lambda in [
        LambdaProfile::unit(),
        LambdaProfile::Sinusoid {
            mean: 2.0,
            amplitude: 1.0,
            wavenumber: 1.0,
        },
    ] {
        let spec = DomainSpec::rectangle(PI, PI, 1.0).with_lambda(lambda);
        let disc = build_basis(&spec, 64, 24, GridResolution::Auto).unwrap();
        let (exact, data) = manufactured(&disc);
        let solver = EllipticSolver::new(&disc).unwrap();
        let got = solver.solve(&data).unwrap();
        let err = got.h_distance(&exact) / exact.h_norm();
        assert!(err < 1e-10, "relative error {err:e} for {lambda:?}");
        assert!(compatibility_defect(&data).abs() < 1e-12);
        assert!(solver.galerkin_residual(&got, &data) < 1e-10);
        let lf = solver.apply_l(&exact);
        assert!(lf.max_abs_diff(&data.f) < 1e-8 * data.f.l2_norm());
    }
}

#[test]
fn circulation_equals_prescribed_profile() {
    let disc = build_basis(&DomainSpec::rectangle(1.0, 1.5, 2.0), 40, 12, GridResolution::Auto).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = disc.n_modes();
    let f = ScalarField3D::from_coefficients(
        &disc,
        (0..n * disc.level_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let g = SurfaceFieldPair {
        bottom: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        top: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let j = CirculationProfile::from_fn(&disc, |z| 1.0 + 0.3 * z * z);
    let data = BoundaryTriple { f, g, j: j.clone() };
    let state = EllipticSolver::new(&disc).unwrap().solve(&data).unwrap();
    let circ = state.circulation_of();
    assert!(circ.max_deviation(&j) < 1e-10, "{:e}", circ.max_deviation(&j));
    assert!(state.mean().abs() < 1e-12);
    assert!(stability_ratio(&state, &data) > 0.0);
}

/// Random smooth triple: a few horizontal modes, low-degree polynomials in z.
fn random_smooth_triple(disc: &Arc<Discretization>, rng: &mut ChaCha8Rng) -> BoundaryTriple {
    let n = disc.n_modes();
    let h = disc.height();
    let active = 8.min(n);
    let poly: Vec<[f64; 4]> = (0..active)
        .map(|_| [0; 4].map(|_| rng.gen_range(-1.0..1.0)))
        .collect();
    let mut data = vec![0.0; n * disc.level_count()];
    for (l, &z) in disc.levels().iter().enumerate() {
        let s = z / h;
        for (k, c) in poly.iter().enumerate() {
            data[l * n + k] = c[0] + c[1] * s + c[2] * s * s + c[3] * s * s * s;
        }
    }
    let mut g = SurfaceFieldPair::zeros(n);
    for k in 0..active {
        g.bottom[k] = rng.gen_range(-1.0..1.0);
        g.top[k] = rng.gen_range(-1.0..1.0);
    }
    let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    BoundaryTriple {
        f: ScalarField3D::from_coefficients(disc, data).unwrap(),
        g,
        j: CirculationProfile::from_fn(disc, |z| a + b * z / h),
    }
}

#[test]
fn defect_law_for_incompatible_data() {
    let disc = build_basis(&DomainSpec::rectangle(1.0, 1.0, 1.0), 30, 24, GridResolution::Auto).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let solver = EllipticSolver::new(&disc).unwrap();
    let mu = disc.horizontal.means();
    for _ in 0..3 {
        let data = random_smooth_triple(&disc, &mut rng);
        let state = solver.solve(&data).unwrap();
        let c = compatibility_defect(&data);
        assert!(c.abs() > 1e-3);
        let lu = solver.apply_l(&state);
        for l in 0..disc.level_count() {
            for k in 0..disc.n_modes() {
                let r = lu.coefficient(k, l) - data.f.coefficient(k, l);
                assert!((r - c * mu[k]).abs() < 1e-8, "level {l} mode {k}: {r} vs {}", c * mu[k]);
            }
        }
    }
}

#[test]
fn defect_of_unit_source_is_minus_one() {
    let disc = build_basis(&DomainSpec::rectangle(1.0, 1.0, 1.0), 30, 4, GridResolution::Auto).unwrap();
    let f = ScalarField3D::from_coefficients(
        &disc,
        (0..disc.level_count()).flat_map(|_| disc.horizontal.means().to_vec()).collect(),
    )
    .unwrap();
    let data = BoundaryTriple {
        f,
        g: SurfaceFieldPair::zeros(disc.n_modes()),
        j: CirculationProfile::zeros(disc.level_count()),
    };
    assert!((compatibility_defect(&data) + 1.0).abs() < 1e-13);
    assert_eq!(compatibility_defect(&BoundaryTriple::zeros(&disc)), 0.0);
}

#[test]
fn series_matches_variational_solution() {
    let disc = build_basis(&DomainSpec::rectangle(PI, PI, 1.0), 40, 24, GridResolution::Auto).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = disc.n_modes();
    let mut g = SurfaceFieldPair::zeros(n);
    for k in 0..10 {
        g.bottom[k] = rng.gen_range(-1.0..1.0);
        g.top[k] = rng.gen_range(-1.0..1.0);
    }
    let series = neumann_series_solution(&disc, &g).unwrap();
    let data = BoundaryTriple {
        f: ScalarField3D::zeros(&disc),
        g,
        j: series.circulation_of(),
    };
    let var = EllipticSolver::new(&disc).unwrap().solve(&data).unwrap();
    let err = var.l2_distance(&series);
    assert!(err < 1e-8, "L2 error {err:e}");
}

#[test]
fn series_top_value_matches_closed_form() {
    let disc = build_basis(&DomainSpec::rectangle(PI, PI, 1.0), 4, 30, GridResolution::Auto).unwrap();
    let mut g = SurfaceFieldPair::zeros(4);
    g.top[0] = 1.0;
    let s = neumann_series_solution(&disc, &g).unwrap();
    let top = disc.vertical.eval_at(s.mode(0), 1.0);
    let want = 1.0 / (2f64.sqrt().tanh() * 2f64.sqrt());
    assert!((top - want).abs() < 1e-10, "{top} vs {want}");
}
