//! Scalars on the cylinder and its plates, stream states, velocities and norms.

pub mod snapshot;

use rayon::prelude::*;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Discretization;

/// A scalar on `Ω × [0, h]`: horizontal spectral coefficients per collocation level.
#[derive(Debug, Clone)]
pub struct ScalarField3D {
    disc: Arc<Discretization>,
    /// Level-major: `data[l * N + n]`.
    data: Vec<f64>,
}

impl ScalarField3D {
    pub fn zeros(disc: &Arc<Discretization>) -> Self {
        Self {
            data: vec![0.0; disc.n_modes() * disc.level_count()],
            disc: disc.clone(),
        }
    }

    pub fn from_coefficients(disc: &Arc<Discretization>, data: Vec<f64>) -> Result<Self> {
        let want = disc.n_modes() * disc.level_count();
        if data.len() != want {
            return Err(Error::ShapeMismatch {
                expected: format!("{want} coefficients"),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self {
            disc: disc.clone(),
            data,
        })
    }

    /// Project grid samples (one vector per level) onto the eigenbasis.
    pub fn from_grid(disc: &Arc<Discretization>, levels: &[Vec<f64>]) -> Result<Self> {
        let nl = disc.level_count();
        let g = disc.horizontal.grid_len();
        if levels.len() != nl || levels.iter().any(|v| v.len() != g) {
            return Err(Error::ShapeMismatch {
                expected: format!("{nl} levels of {g} samples"),
                got: format!(
                    "{} levels of {} samples",
                    levels.len(),
                    levels.first().map_or(0, |v| v.len())
                ),
            });
        }
        let per: Vec<Vec<f64>> = levels
            .par_iter()
            .map(|v| disc.horizontal.to_spectral(v))
            .collect();
        Ok(Self {
            disc: disc.clone(),
            data: per.concat(),
        })
    }

    /// Sample a function of `(x, y, z)` on the quadrature grid and project.
    pub fn from_fn<F>(disc: &Arc<Discretization>, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let pts = disc.horizontal.grid_points();
        let levels: Vec<Vec<f64>> = disc
            .levels()
            .iter()
            .map(|&z| pts.iter().map(|&(x, y)| f(x, y, z)).collect())
            .collect();
        Self::from_grid(disc, &levels).expect("grid shape matches by construction")
    }

    pub fn to_grid(&self) -> Vec<Vec<f64>> {
        (0..self.disc.level_count())
            .into_par_iter()
            .map(|l| self.disc.horizontal.to_grid(self.level(l)))
            .collect()
    }

    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn level(&self, l: usize) -> &[f64] {
        let n = self.disc.n_modes();
        &self.data[l * n..(l + 1) * n]
    }

    pub fn coefficient(&self, n: usize, l: usize) -> f64 {
        self.data[l * self.disc.n_modes() + n]
    }

    /// Coefficient profile of mode `n` across the levels.
    pub fn mode_profile(&self, n: usize) -> Vec<f64> {
        (0..self.disc.level_count())
            .map(|l| self.coefficient(n, l))
            .collect()
    }

    /// `‖·‖_{L²(Ω×[0,h])}` from the coefficients (Parseval).
    pub fn l2_norm(&self) -> f64 {
        let w = self.disc.vertical.level_weights();
        (0..self.disc.level_count())
            .map(|l| w[l] * self.level(l).iter().map(|a| a * a).sum::<f64>())
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// `∫_{Ω×[0,h]}` of the represented function.
    pub fn integral(&self) -> f64 {
        let w = self.disc.vertical.level_weights();
        let mu = self.disc.horizontal.means();
        (0..self.disc.level_count())
            .map(|l| w[l] * self.level(l).iter().zip(mu).map(|(a, m)| a * m).sum::<f64>())
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            disc: self.disc.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Horizontal spectral coefficients on the bottom and top plates.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFieldPair {
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
}

impl SurfaceFieldPair {
    pub fn zeros(n: usize) -> Self {
        Self {
            bottom: vec![0.0; n],
            top: vec![0.0; n],
        }
    }

    pub fn from_fn<F, G>(disc: &Discretization, bottom: F, top: G) -> Self
    where
        F: Fn(f64, f64) -> f64,
        G: Fn(f64, f64) -> f64,
    {
        let pts = disc.horizontal.grid_points();
        let b: Vec<f64> = pts.iter().map(|&(x, y)| bottom(x, y)).collect();
        let t: Vec<f64> = pts.iter().map(|&(x, y)| top(x, y)).collect();
        Self {
            bottom: disc.horizontal.to_spectral(&b),
            top: disc.horizontal.to_spectral(&t),
        }
    }

    /// `(‖g_bottom‖² + ‖g_top‖²)^{1/2}` over `Ω × {0, h}`.
    pub fn l2_norm(&self) -> f64 {
        self.bottom
            .iter()
            .chain(&self.top)
            .map(|a| a * a)
            .sum::<f64>()
            .sqrt()
    }

    /// `∫_{Ω×{0,h}} λ g`.
    pub fn weighted_integral(&self, disc: &Discretization) -> f64 {
        let h = disc.height();
        let lam = disc.domain.lambda;
        let mu = disc.horizontal.means();
        let sb: f64 = self.bottom.iter().zip(mu).map(|(a, m)| a * m).sum();
        let st: f64 = self.top.iter().zip(mu).map(|(a, m)| a * m).sum();
        lam.value(0.0, h) * sb + lam.value(h, h) * st
    }

    pub fn is_finite(&self) -> bool {
        self.bottom.iter().chain(&self.top).all(|v| v.is_finite())
    }
}

/// Lateral circulation `∮_{∂Ω×{z}} ∇̄Ψ·ν` at every collocation level.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculationProfile {
    pub values: Vec<f64>,
}

impl CirculationProfile {
    pub fn zeros(levels: usize) -> Self {
        Self {
            values: vec![0.0; levels],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(disc: &Discretization, f: F) -> Self {
        Self {
            values: disc.levels().iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn integral(&self, disc: &Discretization) -> f64 {
        self.values
            .iter()
            .zip(disc.vertical.level_weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    pub fn l2_norm(&self, disc: &Discretization) -> f64 {
        self.values
            .iter()
            .zip(disc.vertical.level_weights())
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Stream function in the Galerkin basis: `Σ_n u_n(z) e_n + v(z) + c₀`.
#[derive(Debug, Clone)]
pub struct StreamState {
    disc: Arc<Discretization>,
    /// `u[n * (M+1) + m]`: modal coefficients of the horizontal modes.
    pub u: Vec<f64>,
    /// Pure-z modal coefficients; `v[0]` is always zero.
    pub v: Vec<f64>,
    /// Constant making the mean over the cylinder vanish.
    pub mean_shift: f64,
    /// Compatibility defect `c` of the data that produced this state.
    pub defect: f64,
}

/// Horizontal velocity `∇̄⊥Ψ = (−∂yΨ, ∂xΨ)` per level on the quadrature grid.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// Named norms of a stream state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamNorms {
    pub l2: f64,
    pub h_norm: f64,
    pub decay: f64,
}

impl StreamState {
    pub fn zeros(disc: &Arc<Discretization>) -> Self {
        let m1 = disc.vertical.size();
        Self {
            u: vec![0.0; disc.n_modes() * m1],
            v: vec![0.0; m1],
            mean_shift: 0.0,
            defect: 0.0,
            disc: disc.clone(),
        }
    }

    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn mode(&self, n: usize) -> &[f64] {
        let m1 = self.disc.vertical.size();
        &self.u[n * m1..(n + 1) * m1]
    }

    pub fn mode_mut(&mut self, n: usize) -> &mut [f64] {
        let m1 = self.disc.vertical.size();
        &mut self.u[n * m1..(n + 1) * m1]
    }

    /// True mean over the cylinder of the unshifted expansion.
    pub fn raw_mean(&self) -> f64 {
        let mu = self.disc.horizontal.means();
        let vert = &self.disc.vertical;
        // ψ_0 = 1, so the first mass row holds the mode integrals.
        let ints: Vec<f64> = (0..vert.size()).map(|m| vert.mass[(0, m)]).collect();
        let vol = self.disc.horizontal.area() * self.disc.height();
        let mut total = 0.0;
        for n in 0..self.disc.n_modes() {
            let s: f64 = self.mode(n).iter().zip(&ints).map(|(a, b)| a * b).sum();
            total += mu[n] * s;
        }
        let sv: f64 = self.v.iter().zip(&ints).map(|(a, b)| a * b).sum();
        total += self.disc.horizontal.area() * sv;
        total / vol
    }

    /// Set `mean_shift` so that the mean over the cylinder is zero.
    pub fn normalize_mean(&mut self) {
        self.mean_shift = -self.raw_mean();
    }

    pub fn mean(&self) -> f64 {
        self.raw_mean() + self.mean_shift
    }

    /// Horizontal coefficients `u_n(z_l)` in the level-major layout of [`ScalarField3D`].
    pub fn horizontal_at_levels(&self) -> Vec<f64> {
        let nl = self.disc.level_count();
        let n = self.disc.n_modes();
        let mut out = vec![0.0; nl * n];
        for k in 0..n {
            let vals = self.disc.vertical.modal_to_levels(self.mode(k));
            for l in 0..nl {
                out[l * n + k] = vals[l];
            }
        }
        out
    }

    /// Lateral trace `c(z_l) = v(z_l) + c₀`.
    pub fn lateral_trace(&self) -> Vec<f64> {
        self.disc
            .vertical
            .modal_to_levels(&self.v)
            .into_iter()
            .map(|t| t + self.mean_shift)
            .collect()
    }

    pub fn lateral_trace_at(&self, z: f64) -> f64 {
        self.disc.vertical.eval_at(&self.v, z) + self.mean_shift
    }

    pub fn eval_point(&self, x: f64, y: f64, z: f64) -> f64 {
        let (p, _, _) = self.disc.vertical.modes_at(z);
        let coeffs: Vec<f64> = (0..self.disc.n_modes())
            .map(|n| self.mode(n).iter().zip(&p).map(|(a, b)| a * b).sum())
            .collect();
        self.disc.horizontal.eval_point(&coeffs, x, y) + self.lateral_trace_at(z)
    }

    /// Grid samples per level on the quadrature grid.
    pub fn to_grid(&self) -> Vec<Vec<f64>> {
        let n = self.disc.n_modes();
        let coeffs = self.horizontal_at_levels();
        let trace = self.lateral_trace();
        (0..self.disc.level_count())
            .into_par_iter()
            .map(|l| {
                let mut g = self.disc.horizontal.to_grid(&coeffs[l * n..(l + 1) * n]);
                g.iter_mut().for_each(|v| *v += trace[l]);
                g
            })
            .collect()
    }

    /// `∇̄⊥Ψ` per level; the pure-z part contributes nothing.
    pub fn gradient_perp(&self) -> VelocityField {
        let n = self.disc.n_modes();
        let coeffs = self.horizontal_at_levels();
        let (u, v): (Vec<_>, Vec<_>) = (0..self.disc.level_count())
            .into_par_iter()
            .map(|l| {
                let (gx, gy) = self.disc.horizontal.gradient_to_grid(&coeffs[l * n..(l + 1) * n]);
                (gy.into_iter().map(|d| -d).collect::<Vec<_>>(), gx)
            })
            .unzip();
        VelocityField { u, v }
    }

    /// Velocity at a point, `(−∂yΨ, ∂xΨ)`.
    pub fn velocity_at(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        let (p, _, _) = self.disc.vertical.modes_at(z);
        let mut vx = 0.0;
        let mut vy = 0.0;
        for n in 0..self.disc.n_modes() {
            let a: f64 = self.mode(n).iter().zip(&p).map(|(a, b)| a * b).sum();
            if a == 0.0 {
                continue;
            }
            let (gx, gy) = self.disc.horizontal.mode_gradient(n, x, y);
            vx -= a * gy;
            vy += a * gx;
        }
        (vx, vy)
    }

    /// Circulation from `Δ̄e_n = −λ_n e_n` and the divergence theorem.
    pub fn circulation_of(&self) -> CirculationProfile {
        let lam = self.disc.horizontal.eigenvalues();
        let mu = self.disc.horizontal.means();
        let weights: Vec<f64> = lam.iter().zip(mu).map(|(l, m)| -l * m).collect();
        self.profile_with(&weights)
    }

    /// Circulation from boundary quadrature of `∂νΨ`.
    pub fn boundary_circulation(&self) -> CirculationProfile {
        let weights = self.disc.horizontal.boundary_flux_table();
        self.profile_with(&weights)
    }

    fn profile_with(&self, weights: &[f64]) -> CirculationProfile {
        let m1 = self.disc.vertical.size();
        let mut modal = vec![0.0; m1];
        for (n, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for (acc, c) in modal.iter_mut().zip(self.mode(n)) {
                *acc += w * c;
            }
        }
        CirculationProfile {
            values: self.disc.vertical.modal_to_levels(&modal),
        }
    }

    /// `⟨Ψ, Ψ⟩_ℍ = ∫ ∇̃Ψ·∇Ψ` with the exact area for the pure-z block.
    pub fn h_norm(&self) -> f64 {
        let vert = &self.disc.vertical;
        let lam = self.disc.horizontal.eigenvalues();
        let mu = self.disc.horizontal.means();
        let c = &vert.mass;
        let s = &vert.stiffness;
        let quad = |a: &[f64], m: &nalgebra::DMatrix<f64>, b: &[f64]| -> f64 {
            let mut t = 0.0;
            for i in 0..a.len() {
                if a[i] == 0.0 {
                    continue;
                }
                for j in 0..b.len() {
                    t += a[i] * m[(i, j)] * b[j];
                }
            }
            t
        };
        let mut total = 0.0;
        for n in 0..self.disc.n_modes() {
            let un = self.mode(n);
            if un.iter().all(|v| *v == 0.0) {
                continue;
            }
            total += lam[n] * quad(un, c, un) + quad(un, s, un);
            total += 2.0 * mu[n] * quad(un, s, &self.v);
        }
        total += self.disc.horizontal.area() * quad(&self.v, s, &self.v);
        total.max(0.0).sqrt()
    }

    /// `‖Ψ‖_{L²}` including the pure-z part and mean shift with exact constants.
    pub fn l2_norm(&self) -> f64 {
        self.l2_distance(&StreamState::zeros(&self.disc))
    }

    /// `‖Ψ − Φ‖_{L²(Ω×[0,h])}`.
    pub fn l2_distance(&self, other: &StreamState) -> f64 {
        let vert = &self.disc.vertical;
        let c = &vert.mass;
        let mu = self.disc.horizontal.means();
        let m1 = vert.size();
        // w(z) = Δv(z) + Δc₀ as modal coefficients (ψ_0 = 1 for both families).
        let mut w: Vec<f64> = self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect();
        w[0] += self.mean_shift - other.mean_shift;
        let cw: Vec<f64> = (0..m1).map(|i| (0..m1).map(|j| c[(i, j)] * w[j]).sum()).collect();
        let mut total = self.disc.horizontal.area() * w.iter().zip(&cw).map(|(a, b)| a * b).sum::<f64>();
        for n in 0..self.disc.n_modes() {
            let d: Vec<f64> = self.mode(n).iter().zip(other.mode(n)).map(|(a, b)| a - b).collect();
            if d.iter().all(|v| *v == 0.0) {
                continue;
            }
            let cd: Vec<f64> = (0..m1).map(|i| (0..m1).map(|j| c[(i, j)] * d[j]).sum()).collect();
            total += d.iter().zip(&cd).map(|(a, b)| a * b).sum::<f64>();
            total += 2.0 * mu[n] * d.iter().zip(&cw).map(|(a, b)| a * b).sum::<f64>();
        }
        total.max(0.0).sqrt()
    }

    /// `‖Ψ − Φ‖_ℍ`.
    pub fn h_distance(&self, other: &StreamState) -> f64 {
        self.difference(other).h_norm()
    }

    pub fn difference(&self, other: &StreamState) -> StreamState {
        StreamState {
            disc: self.disc.clone(),
            u: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
            mean_shift: self.mean_shift - other.mean_shift,
            defect: self.defect - other.defect,
        }
    }

    /// `Ψ + s (Ψ − Φ)`: linear extrapolation past `self` from an earlier state.
    pub fn extrapolate(&self, earlier: &StreamState, s: f64) -> StreamState {
        let lin = |a: f64, b: f64| a + s * (a - b);
        StreamState {
            disc: self.disc.clone(),
            u: self.u.iter().zip(&earlier.u).map(|(a, b)| lin(*a, *b)).collect(),
            v: self.v.iter().zip(&earlier.v).map(|(a, b)| lin(*a, *b)).collect(),
            mean_shift: lin(self.mean_shift, earlier.mean_shift),
            defect: lin(self.defect, earlier.defect),
        }
    }

    /// Weighted spectral sum `(Σ_n λ_n^{1/2}(1+λ_n) ∫u_n²)^{1/2}` tracking coefficient decay.
    pub fn decay_diagnostic(&self) -> f64 {
        let lam = self.disc.horizontal.eigenvalues();
        let c = &self.disc.vertical.mass;
        let m1 = self.disc.vertical.size();
        let mut total = 0.0;
        for n in 0..self.disc.n_modes() {
            let un = self.mode(n);
            let mut e = 0.0;
            for i in 0..m1 {
                for j in 0..m1 {
                    e += un[i] * c[(i, j)] * un[j];
                }
            }
            total += lam[n].sqrt() * (1.0 + lam[n]) * e;
        }
        total.max(0.0).sqrt()
    }

    pub fn norms(&self) -> StreamNorms {
        StreamNorms {
            l2: self.l2_norm(),
            h_norm: self.h_norm(),
            decay: self.decay_diagnostic(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|v| v.is_finite()) && self.mean_shift.is_finite()
    }
}
