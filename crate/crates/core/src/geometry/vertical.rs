//! Vertical Galerkin basis on `[0, h]` and the collocation levels.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::quadrature::{chebyshev_lobatto, gauss_legendre, legendre_table, Barycentric};
use super::LambdaProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VerticalFamily {
    /// Legendre polynomials `P_m(2z/h - 1)`.
    #[default]
    Legendre,
    /// `cos(m π z / h)`.
    Cosine,
}

/// Modes `ψ_0..=ψ_M`, mass and stiffness matrices, and level tables.
#[derive(Debug, Clone)]
pub struct VerticalBasis {
    family: VerticalFamily,
    m: usize,
    h: f64,
    lambda: LambdaProfile,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    levels: Vec<f64>,
    level_weights: Vec<f64>,
    /// `eval[(l, m)] = ψ_m(z_l)`.
    pub eval: DMatrix<f64>,
    /// `projection[(m, l)] = ∫ ℓ_l ψ_m dz` for the level cardinal functions `ℓ_l`.
    pub projection: DMatrix<f64>,
    /// Level samples to modal coefficients by L² projection of the interpolant.
    pub to_modal: DMatrix<f64>,
    interp: Barycentric,
}

impl VerticalBasis {
    pub fn new(family: VerticalFamily, m: usize, h: f64, lambda: LambdaProfile) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidDomain("vertical mode count M must be >= 1".into()));
        }
        let levels = chebyshev_lobatto(m + 1, h);
        let interp = Barycentric::new(&levels);
        let mut basis = Self {
            family,
            m,
            h,
            lambda,
            mass: DMatrix::zeros(m + 1, m + 1),
            stiffness: DMatrix::zeros(m + 1, m + 1),
            levels,
            level_weights: Vec::new(),
            eval: DMatrix::zeros(0, 0),
            projection: DMatrix::zeros(0, 0),
            to_modal: DMatrix::zeros(0, 0),
            interp,
        };
        basis.mass = basis.mass_matrix();
        basis.stiffness = basis.assemble_stiffness()?;
        basis.build_level_tables();
        Ok(basis)
    }

    pub fn family(&self) -> VerticalFamily {
        self.family
    }

    /// Highest mode index `M`.
    pub fn order(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        self.m + 1
    }

    pub fn height(&self) -> f64 {
        self.h
    }

    pub fn lambda(&self) -> &LambdaProfile {
        &self.lambda
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Quadrature weights on the levels (integrals of the cardinal functions).
    pub fn level_weights(&self) -> &[f64] {
        &self.level_weights
    }

    /// Values, first and second z-derivatives of every mode at `z`.
    pub fn modes_at(&self, z: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        match self.family {
            VerticalFamily::Legendre => {
                let s = 2.0 / self.h;
                let (p, mut dp, mut ddp) = legendre_table(self.m, s * z - 1.0);
                dp.iter_mut().for_each(|d| *d *= s);
                ddp.iter_mut().for_each(|d| *d *= s * s);
                (p, dp, ddp)
            }
            VerticalFamily::Cosine => {
                let mut p = Vec::with_capacity(self.m + 1);
                let mut dp = Vec::with_capacity(self.m + 1);
                let mut ddp = Vec::with_capacity(self.m + 1);
                for k in 0..=self.m {
                    let w = k as f64 * PI / self.h;
                    p.push((w * z).cos());
                    dp.push(-w * (w * z).sin());
                    ddp.push(-w * w * (w * z).cos());
                }
                (p, dp, ddp)
            }
        }
    }

    /// Evaluate a modal expansion at `z`.
    pub fn eval_at(&self, coeffs: &[f64], z: f64) -> f64 {
        let (p, _, _) = self.modes_at(z);
        p.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }

    /// Evaluate a modal expansion at every level.
    pub fn modal_to_levels(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.level_count())
            .map(|l| (0..=self.m).map(|k| self.eval[(l, k)] * coeffs[k]).sum())
            .collect()
    }

    pub fn levels_to_modal(&self, values: &[f64]) -> Vec<f64> {
        (0..=self.m)
            .map(|k| {
                (0..self.level_count())
                    .map(|l| self.to_modal[(k, l)] * values[l])
                    .sum()
            })
            .collect()
    }

    /// `∫ ψ_k v dz` for every mode, `v` given on the levels.
    pub fn project_levels(&self, values: &[f64]) -> Vec<f64> {
        (0..=self.m)
            .map(|k| {
                (0..self.level_count())
                    .map(|l| self.projection[(k, l)] * values[l])
                    .sum()
            })
            .collect()
    }

    /// Interpolate level samples at an arbitrary height.
    pub fn interpolate_levels(&self, values: &[f64], z: f64) -> f64 {
        self.interp.eval(values, z)
    }

    pub fn level_cardinals(&self, z: f64) -> Vec<f64> {
        self.interp.cardinals(z)
    }

    /// Mode values at the bottom and top plates.
    pub fn plate_values(&self) -> (Vec<f64>, Vec<f64>) {
        (self.modes_at(0.0).0, self.modes_at(self.h).0)
    }

    fn mass_matrix(&self) -> DMatrix<f64> {
        let n = self.m + 1;
        match self.family {
            VerticalFamily::Legendre => DMatrix::from_fn(n, n, |a, b| {
                if a == b {
                    self.h / (2 * a + 1) as f64
                } else {
                    0.0
                }
            }),
            VerticalFamily::Cosine => DMatrix::from_fn(n, n, |a, b| match (a, b) {
                (0, 0) => self.h,
                _ if a == b => 0.5 * self.h,
                _ => 0.0,
            }),
        }
    }

    /// Closed-form stiffness for `λ ≡ value`.
    pub fn stiffness_closed_form(&self, value: f64) -> DMatrix<f64> {
        let n = self.m + 1;
        match self.family {
            VerticalFamily::Legendre => DMatrix::from_fn(n, n, |a, b| {
                if (a + b) % 2 == 1 {
                    0.0
                } else {
                    let k = a.min(b) as f64;
                    value * 2.0 / self.h * k * (k + 1.0)
                }
            }),
            VerticalFamily::Cosine => DMatrix::from_fn(n, n, |a, b| {
                if a == b && a > 0 {
                    let w = a as f64 * PI / self.h;
                    value * w * w * self.h / 2.0
                } else {
                    0.0
                }
            }),
        }
    }

    /// Stiffness `∫ λ ψ_a' ψ_b' dz` by Gauss–Legendre with `nq` nodes.
    pub fn stiffness_by_quadrature(&self, nq: usize) -> DMatrix<f64> {
        let n = self.m + 1;
        let (zs, ws) = gauss_legendre(nq, 0.0, self.h);
        let mut s = DMatrix::zeros(n, n);
        for (z, w) in zs.iter().zip(&ws) {
            let lam = self.lambda.value(*z, self.h);
            let (_, dp, _) = self.modes_at(*z);
            for a in 0..n {
                let wa = w * lam * dp[a];
                for b in 0..n {
                    s[(a, b)] += wa * dp[b];
                }
            }
        }
        s
    }

    fn assemble_stiffness(&self) -> Result<DMatrix<f64>> {
        if let LambdaProfile::Constant { value } = self.lambda {
            return Ok(self.stiffness_closed_form(value));
        }
        let mut nq = 2 * self.m + 16;
        let mut coarse = self.stiffness_by_quadrature(nq);
        let mut achieved = f64::INFINITY;
        for _ in 0..6 {
            nq *= 2;
            let fine = self.stiffness_by_quadrature(nq);
            let scale = fine.amax().max(1.0);
            achieved = (&fine - &coarse).amax() / scale;
            if achieved <= 1e-10 {
                let sym = (&fine + fine.transpose()) * 0.5;
                return Ok(sym);
            }
            coarse = fine;
        }
        Err(Error::QuadratureNonConvergence {
            achieved,
            required: 1e-10,
        })
    }

    fn build_level_tables(&mut self) {
        let nl = self.level_count();
        let n = self.m + 1;
        self.eval = DMatrix::from_fn(nl, n, |l, k| self.modes_at(self.levels[l]).0[k]);
        let nq = match self.family {
            VerticalFamily::Legendre => nl + n + 8,
            VerticalFamily::Cosine => 4 * (nl + n) + 32,
        };
        let (zs, ws) = gauss_legendre(nq, 0.0, self.h);
        let mut proj = DMatrix::zeros(n, nl);
        let mut weights = vec![0.0; nl];
        for (z, w) in zs.iter().zip(&ws) {
            let card = self.interp.cardinals(*z);
            let (p, _, _) = self.modes_at(*z);
            for l in 0..nl {
                weights[l] += w * card[l];
                for k in 0..n {
                    proj[(k, l)] += w * card[l] * p[k];
                }
            }
        }
        let minv = self
            .mass
            .clone()
            .try_inverse()
            .expect("vertical mass matrix is positive definite");
        self.to_modal = &minv * &proj;
        self.projection = proj;
        self.level_weights = weights;
    }
}
