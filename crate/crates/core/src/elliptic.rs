//! Variational solve of the mixed elliptic problem for the stream function.
//!
//! Unknowns are `u_n(z)` for every horizontal eigenmode and a pure-z profile `v(z)`
//! without its constant. The mode blocks `λ_n C + S` are eliminated through the
//! generalized eigenvectors of `(S, C)`, leaving a dense pure-z Schur complement.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{CirculationProfile, ScalarField3D, StreamState, SurfaceFieldPair};
use crate::geometry::quadrature::gauss_legendre;
use crate::geometry::Discretization;

/// Interior source `f`, plate Neumann data `g` and lateral circulation `j`.
#[derive(Debug, Clone)]
pub struct BoundaryTriple {
    pub f: ScalarField3D,
    pub g: SurfaceFieldPair,
    pub j: CirculationProfile,
}

impl BoundaryTriple {
    pub fn zeros(disc: &Arc<Discretization>) -> Self {
        Self {
            f: ScalarField3D::zeros(disc),
            g: SurfaceFieldPair::zeros(disc.n_modes()),
            j: CirculationProfile::zeros(disc.level_count()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.g.is_finite() && self.j.values.iter().all(|v| v.is_finite())
    }

    /// `‖f‖ + ‖g‖ + ‖j‖`.
    pub fn data_norm(&self) -> f64 {
        let d = self.f.disc();
        self.f.l2_norm() + self.g.l2_norm() + self.j.l2_norm(d)
    }
}

/// Constant `c` with `L(u) = f + c`; zero exactly when the data are compatible.
///
/// The denominator uses the area resolved by the truncated basis, `Σ μ_n²`, which is
/// the measure the Galerkin system attaches to a horizontally constant function.
pub fn compatibility_defect(data: &BoundaryTriple) -> f64 {
    let d = data.f.disc();
    let area = d.horizontal.resolved_area();
    let num = data.j.integral(d) + data.g.weighted_integral(d) - data.f.integral();
    num / (area * d.height())
}

/// Precomputed factorization of the Galerkin system for one discretization.
#[derive(Debug, Clone)]
pub struct EllipticSolver {
    disc: Arc<Discretization>,
    w: DMatrix<f64>,
    sigma: Vec<f64>,
    /// `Wᵀ S[:, 1..]`.
    z: DMatrix<f64>,
    schur: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    resolved_area: f64,
    plate_bottom: Vec<f64>,
    plate_top: Vec<f64>,
    mode_integrals: Vec<f64>,
    /// `(λψ_m')'` at every level.
    vertical_operator: DMatrix<f64>,
}

impl EllipticSolver {
    pub fn new(disc: &Arc<Discretization>) -> Result<Self> {
        let vert = &disc.vertical;
        let m1 = vert.size();
        let c = &vert.mass;
        let s = &vert.stiffness;
        let chol = c
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("vertical mass matrix not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem("mass factor not invertible".into()))?;
        let a = &linv * s * linv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let eig = a.symmetric_eigen();
        let w = linv.transpose() * &eig.eigenvectors;
        let sigma: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
        let s_cols = s.columns(1, m1 - 1).into_owned();
        let z = w.transpose() * &s_cols;

        let lam = disc.horizontal.eigenvalues();
        let mu = disc.horizontal.means();
        let resolved_area = disc.horizontal.resolved_area();
        if resolved_area <= 0.0 {
            return Err(Error::SingularSystem(
                "no retained eigenmode has a nonzero mean".into(),
            ));
        }
        let mut diag = vec![0.0; m1];
        for (ln, mn) in lam.iter().zip(mu) {
            if *mn == 0.0 {
                continue;
            }
            for k in 0..m1 {
                diag[k] += mn * mn / (ln + sigma[k]);
            }
        }
        let s_inner = s.view((1, 1), (m1 - 1, m1 - 1)).into_owned();
        let mut schur = s_inner * resolved_area;
        for i in 0..m1 - 1 {
            for j in 0..m1 - 1 {
                let mut acc = 0.0;
                for k in 0..m1 {
                    acc += z[(k, i)] * diag[k] * z[(k, j)];
                }
                schur[(i, j)] -= acc;
            }
        }
        let schur = (&schur + schur.transpose()) * 0.5;
        let schur = schur.cholesky().ok_or_else(|| {
            Error::SingularSystem("pure-z Schur complement is not positive definite".into())
        })?;

        let (plate_bottom, plate_top) = vert.plate_values();
        let mode_integrals = (0..m1).map(|m| c[(0, m)]).collect();
        let h = disc.height();
        let lambda = disc.domain.lambda;
        let nl = vert.level_count();
        let vertical_operator = DMatrix::from_fn(nl, m1, |l, m| {
            let z = vert.levels()[l];
            let (_, dp, ddp) = vert.modes_at(z);
            lambda.value(z, h) * ddp[m] + lambda.derivative(z, h) * dp[m]
        });
        Ok(Self {
            disc: disc.clone(),
            w,
            sigma,
            z,
            schur,
            resolved_area,
            plate_bottom,
            plate_top,
            mode_integrals,
            vertical_operator,
        })
    }

    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    fn plate_weights(&self) -> (f64, f64) {
        let h = self.disc.height();
        let lam = self.disc.domain.lambda;
        (lam.value(0.0, h), lam.value(h, h))
    }

    /// Right-hand sides `F(e_n ψ_m)` per mode and `F(ψ_m)` for the pure-z tests.
    fn assemble(&self, data: &BoundaryTriple, defect: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let disc = &self.disc;
        let vert = &disc.vertical;
        let m1 = vert.size();
        let mu = disc.horizontal.means();
        let (lb, lt) = self.plate_weights();
        let rhs: Vec<Vec<f64>> = (0..disc.n_modes())
            .into_par_iter()
            .map(|n| {
                let proj = vert.project_levels(&data.f.mode_profile(n));
                (0..m1)
                    .map(|m| {
                        -(proj[m] + defect * mu[n] * self.mode_integrals[m])
                            + lb * self.plate_bottom[m] * data.g.bottom[n]
                            + lt * self.plate_top[m] * data.g.top[n]
                    })
                    .collect()
            })
            .collect();
        let mut pure = vec![0.0; m1];
        let mut f_mean = vec![0.0; disc.level_count()];
        for (l, fm) in f_mean.iter_mut().enumerate() {
            *fm = data.f.level(l).iter().zip(mu).map(|(a, b)| a * b).sum();
        }
        let pf = vert.project_levels(&f_mean);
        let pj = vert.project_levels(&data.j.values);
        let gb: f64 = data.g.bottom.iter().zip(mu).map(|(a, b)| a * b).sum();
        let gt: f64 = data.g.top.iter().zip(mu).map(|(a, b)| a * b).sum();
        for m in 0..m1 {
            pure[m] = -(pf[m] + defect * self.resolved_area * self.mode_integrals[m])
                + lb * self.plate_bottom[m] * gb
                + lt * self.plate_top[m] * gt
                + pj[m];
        }
        (rhs, pure)
    }

    /// Galerkin solution of `B(Ψ, γ) = F(γ)` for all basis `γ`, mean normalized.
    pub fn solve(&self, data: &BoundaryTriple) -> Result<StreamState> {
        if !data.is_finite() {
            return Err(Error::NonFinite("elliptic data"));
        }
        let disc = &self.disc;
        let m1 = disc.vertical.size();
        let lam = disc.horizontal.eigenvalues();
        let mu = disc.horizontal.means();
        let defect = compatibility_defect(data);
        let (rhs, pure) = self.assemble(data, defect);

        let y: Vec<DVector<f64>> = rhs
            .par_iter()
            .map(|r| self.w.tr_mul(&DVector::from_column_slice(r)))
            .collect();
        let mut acc = DVector::zeros(m1);
        for n in 0..disc.n_modes() {
            if mu[n] == 0.0 {
                continue;
            }
            for k in 0..m1 {
                acc[k] += mu[n] * y[n][k] / (lam[n] + self.sigma[k]);
            }
        }
        let rhs_schur = DVector::from_iterator(m1 - 1, pure[1..].iter().copied()) - self.z.tr_mul(&acc);
        let vp = self.schur.solve(&rhs_schur);
        let zv = &self.z * &vp;

        let mut state = StreamState::zeros(disc);
        let modes: Vec<Vec<f64>> = (0..disc.n_modes())
            .into_par_iter()
            .map(|n| {
                let scaled = DVector::from_fn(m1, |k, _| (y[n][k] - mu[n] * zv[k]) / (lam[n] + self.sigma[k]));
                (&self.w * scaled).iter().copied().collect()
            })
            .collect();
        for (n, un) in modes.into_iter().enumerate() {
            state.mode_mut(n).copy_from_slice(&un);
        }
        state.v[0] = 0.0;
        state.v[1..].copy_from_slice(vp.as_slice());
        state.defect = defect;
        state.normalize_mean();
        if !state.is_finite() {
            return Err(Error::NonFinite("elliptic solution"));
        }
        Ok(state)
    }

    /// Largest `|B(Ψ, γ) − F(γ)|` over all basis test functions, relative to `max |F(γ)|`.
    pub fn galerkin_residual(&self, state: &StreamState, data: &BoundaryTriple) -> f64 {
        let disc = &self.disc;
        let vert = &disc.vertical;
        let m1 = vert.size();
        let lam = disc.horizontal.eigenvalues();
        let mu = disc.horizontal.means();
        let c = &vert.mass;
        let s = &vert.stiffness;
        let (rhs, pure) = self.assemble(data, state.defect);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let sv = s * DVector::from_column_slice(&state.v);
        let mut pure_lhs = s * DVector::from_column_slice(&state.v) * self.resolved_area;
        for n in 0..disc.n_modes() {
            let un = DVector::from_column_slice(state.mode(n));
            let su = s * &un;
            let lhs = c * &un * lam[n] + &su + &sv * mu[n];
            for m in 0..m1 {
                worst = worst.max((lhs[m] - rhs[n][m]).abs());
                scale = scale.max(rhs[n][m].abs());
            }
            pure_lhs += su * mu[n];
        }
        for m in 1..m1 {
            worst = worst.max((pure_lhs[m] - pure[m]).abs());
            scale = scale.max(pure[m].abs());
        }
        worst / scale.max(1e-300)
    }

    /// `L(Ψ) = Δ̄Ψ + ∂z(λ∂zΨ)` as coefficients at the levels.
    pub fn apply_l(&self, state: &StreamState) -> ScalarField3D {
        let disc = &self.disc;
        let n_modes = disc.n_modes();
        let nl = disc.level_count();
        let lam = disc.horizontal.eigenvalues();
        let mu = disc.horizontal.means();
        let vert = &disc.vertical;
        let vop = &self.vertical_operator;
        let pure: Vec<f64> = (0..nl)
            .map(|l| (0..vert.size()).map(|m| vop[(l, m)] * state.v[m]).sum())
            .collect();
        let mut data = vec![0.0; nl * n_modes];
        for n in 0..n_modes {
            let un = state.mode(n);
            for l in 0..nl {
                let mut val = 0.0;
                for (m, &c) in un.iter().enumerate() {
                    val += c * (vop[(l, m)] - lam[n] * vert.eval[(l, m)]);
                }
                data[l * n_modes + n] = val + mu[n] * pure[l];
            }
        }
        ScalarField3D::from_coefficients(disc, data).expect("shape fixed by discretization")
    }

    /// The triple `(L(Ψ), ∂νΨ, circulation(Ψ))` a state solves, for manufactured checks.
    pub fn data_of(&self, state: &StreamState) -> BoundaryTriple {
        BoundaryTriple {
            f: self.apply_l(state),
            g: self.neumann_trace(state),
            j: state.circulation_of(),
        }
    }

    /// Plate Neumann data `∂νΨ` (outward normal) of a state.
    pub fn neumann_trace(&self, state: &StreamState) -> SurfaceFieldPair {
        let vert = &self.disc.vertical;
        let (_, db, _) = vert.modes_at(0.0);
        let (_, dt, _) = vert.modes_at(vert.height());
        let n = self.disc.n_modes();
        let mut g = SurfaceFieldPair::zeros(n);
        for k in 0..n {
            let un = state.mode(k);
            g.bottom[k] = -un.iter().zip(&db).map(|(a, b)| a * b).sum::<f64>();
            g.top[k] = un.iter().zip(&dt).map(|(a, b)| a * b).sum::<f64>();
        }
        g
    }
}

/// One-shot variational solve.
pub fn solve_variational(disc: &Arc<Discretization>, data: &BoundaryTriple) -> Result<StreamState> {
    EllipticSolver::new(disc)?.solve(data)
}

/// `cosh(z s) / sinh(h s)` without overflow.
pub fn cosh_sinh_ratio(z: f64, h: f64, s: f64) -> f64 {
    let e = (-2.0 * h * s).exp();
    (((z - h) * s).exp() + (-(z + h) * s).exp()) / (1.0 - e)
}

/// `cosh((z − h) s) / sinh(h s)` without overflow.
pub fn cosh_shifted_sinh_ratio(z: f64, h: f64, s: f64) -> f64 {
    let e = (-2.0 * h * s).exp();
    ((-z * s).exp() + ((z - 2.0 * h) * s).exp()) / (1.0 - e)
}

/// Mode profile of the explicit harmonic series solution for plate data `(t_n, b_n)`.
pub fn series_profile(t: f64, b: f64, lambda_n: f64, z: f64, h: f64) -> f64 {
    let s = lambda_n.sqrt();
    t / s * cosh_sinh_ratio(z, h, s) + b / s * cosh_shifted_sinh_ratio(z, h, s)
}

/// Explicit series solution for `λ ≡ 1`, `f = 0`, lateral trace zero, plate data `g`.
///
/// The profiles are projected onto the vertical basis with high-order quadrature and
/// the result is normalized to zero mean.
pub fn neumann_series_solution(disc: &Arc<Discretization>, g: &SurfaceFieldPair) -> Result<StreamState> {
    if !disc.domain.lambda.is_unit() {
        return Err(Error::NonUnitLambda(format!("{:?}", disc.domain.lambda)));
    }
    let vert = &disc.vertical;
    let h = disc.height();
    let m1 = vert.size();
    let lam = disc.horizontal.eigenvalues();
    let (zs, ws) = gauss_legendre(4 * m1 + 96, 0.0, h);
    let table: Vec<Vec<f64>> = zs.iter().map(|&z| vert.modes_at(z).0).collect();
    let minv = vert
        .mass
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("vertical mass matrix".into()))?;
    let mut state = StreamState::zeros(disc);
    for n in 0..disc.n_modes() {
        if g.top[n] == 0.0 && g.bottom[n] == 0.0 {
            continue;
        }
        let mut proj = DVector::zeros(m1);
        for (q, (&z, &w)) in zs.iter().zip(&ws).enumerate() {
            let val = series_profile(g.top[n], g.bottom[n], lam[n], z, h);
            for m in 0..m1 {
                proj[m] += w * val * table[q][m];
            }
        }
        let coeffs = &minv * proj;
        state.mode_mut(n).copy_from_slice(coeffs.as_slice());
    }
    state.normalize_mean();
    Ok(state)
}

/// `‖Ψ‖_ℍ / (‖f‖ + ‖g‖ + ‖j‖)`, the measured stability constant of one solve.
pub fn stability_ratio(state: &StreamState, data: &BoundaryTriple) -> f64 {
    let denom = data.data_norm();
    if denom == 0.0 {
        0.0
    } else {
        state.h_norm() / denom
    }
}
