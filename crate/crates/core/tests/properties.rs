use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use qgcyl::cli::observed_orders;
use qgcyl::elliptic::{compatibility_defect, EllipticSolver};
use qgcyl::fields::{ScalarField3D, StreamState};
use qgcyl::geometry::{build_basis, Discretization, DomainSpec, GridResolution};
use qgcyl::grid::TransportGrid;
use qgcyl::mollify::{required_padding, KernelKind, Mollifier, MollifierSpec};
use qgcyl::transport::{advance_level, AnalyticVelocity, TransportOptions};

const MODES: usize = 16;
const VERTICAL: usize = 4;

fn setup() -> &'static (Arc<Discretization>, EllipticSolver) {
    static CELL: OnceLock<(Arc<Discretization>, EllipticSolver)> = OnceLock::new();
    CELL.get_or_init(|| {
        let disc = build_basis(&DomainSpec::rectangle(1.0, 1.5, 1.0), MODES, VERTICAL, GridResolution::Auto).unwrap();
        let solver = EllipticSolver::new(&disc).unwrap();
        (disc, solver)
    })
}

fn state_from(disc: &Arc<Discretization>, u: &[f64]) -> StreamState {
    let mut s = StreamState::zeros(disc);
    s.u.copy_from_slice(u);
    s.normalize_mean();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn streams_are_recovered_from_their_data(
        u in prop::collection::vec(-1.0f64..1.0, MODES * (VERTICAL + 1)),
    ) {
        let (disc, solver) = setup();
        let exact = state_from(disc, &u);
        prop_assume!(exact.h_norm() > 1e-3);
        let psi = solver.solve(&solver.data_of(&exact)).unwrap();
        prop_assert!(psi.h_distance(&exact) <= 1e-9 * exact.h_norm());
    }

    #[test]
    fn solution_map_is_linear(
        u in prop::collection::vec(-1.0f64..1.0, MODES * (VERTICAL + 1)),
        w in prop::collection::vec(-1.0f64..1.0, MODES * (VERTICAL + 1)),
        a in -2.0f64..2.0,
    ) {
        let (disc, solver) = setup();
        let (du, dw) = (solver.data_of(&state_from(disc, &u)), solver.data_of(&state_from(disc, &w)));
        let mut mix = du.clone();
        for (m, x) in mix.f.data_mut().iter_mut().zip(dw.f.data()) {
            *m = a * *m + x;
        }
        for (m, x) in mix.g.bottom.iter_mut().zip(&dw.g.bottom).chain(mix.g.top.iter_mut().zip(&dw.g.top)) {
            *m = a * *m + x;
        }
        for (m, x) in mix.j.values.iter_mut().zip(&dw.j.values) {
            *m = a * *m + x;
        }
        let (pu, pw, pm) = (solver.solve(&du).unwrap(), solver.solve(&dw).unwrap(), solver.solve(&mix).unwrap());
        let mut comb = pu.clone();
        for (c, x) in comb.u.iter_mut().zip(&pw.u) {
            *c = a * *c + x;
        }
        for (c, x) in comb.v.iter_mut().zip(&pw.v) {
            *c = a * *c + x;
        }
        comb.normalize_mean();
        prop_assert!(pm.h_distance(&comb) <= 1e-10 * (1.0 + pm.h_norm()));
    }

    #[test]
    fn horizontal_constants_shift_the_defect(
        u in prop::collection::vec(-1.0f64..1.0, MODES * (VERTICAL + 1)),
        c in -3.0f64..3.0,
    ) {
        let (disc, solver) = setup();
        let mut data = solver.data_of(&state_from(disc, &u));
        let before = compatibility_defect(&data);
        prop_assert!(before.abs() < 1e-10);
        let mu = disc.horizontal.means();
        let mut shifted: Vec<f64> = data.f.data().to_vec();
        for (i, v) in shifted.iter_mut().enumerate() {
            *v += c * mu[i % MODES];
        }
        data.f = ScalarField3D::from_coefficients(disc, shifted).unwrap();
        prop_assert!((compatibility_defect(&data) - (before - c)).abs() < 1e-10);
    }

    #[test]
    fn mollifier_preserves_any_constant(value in -5.0f64..5.0, stretch in 1.0f64..2.0) {
        let (disc, _) = setup();
        let spacing = TransportGrid::new(disc, 0.0).spacing();
        let eps = 4.0 * spacing * stretch;
        let grid = Arc::new(TransportGrid::new(disc, required_padding(eps)));
        let m = Mollifier::new(disc, &grid, MollifierSpec::new(eps, KernelKind::Bspline).unwrap()).unwrap();
        let out = m.mollify(&vec![value; grid.len()]);
        prop_assert!(out.iter().all(|v| (v - value).abs() < 1e-12 * (1.0 + value.abs())));
    }

    #[test]
    fn still_flow_transports_nothing(
        coeffs in prop::array::uniform4(-1.0f64..1.0),
        dt in 0.01f64..0.5,
    ) {
        let (disc, _) = setup();
        let grid = TransportGrid::new(disc, 0.2);
        let q: Vec<f64> = grid
            .points()
            .iter()
            .map(|&(x, y)| coeffs[0] + coeffs[1] * x + coeffs[2] * (3.0 * y).sin() + coeffs[3] * x * y)
            .collect();
        let still = AnalyticVelocity(|_, _, _| (0.0, 0.0));
        let out = advance_level(&grid, &q, &still, 0.0, dt, 0.0, None, &TransportOptions::default()).unwrap();
        prop_assert!(out.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn observed_orders_recover_power_laws(p in 0.5f64..5.0, c in 0.01f64..100.0) {
        let h = [0.2f64, 0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(p)).collect();
        let orders = observed_orders(&h, &e);
        prop_assert!(orders[1..].iter().all(|o| (o.unwrap() - p).abs() < 1e-9));
    }
}
