//! Domain geometry: horizontal Dirichlet eigenbases, vertical Galerkin basis, quadrature.

pub mod bessel;
pub mod disk;
pub mod quadrature;
pub mod rect;
pub mod vertical;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
pub use disk::DiskBasis;
pub use rect::RectBasis;
pub use vertical::{VerticalBasis, VerticalFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rectangle { lx: f64, ly: f64 },
    Disk { radius: f64 },
}

/// Stratification profile `λ(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LambdaProfile {
    Constant { value: f64 },
    /// `mean + amplitude · sin(wavenumber · π z / h)`.
    Sinusoid {
        mean: f64,
        amplitude: f64,
        wavenumber: f64,
    },
}

impl LambdaProfile {
    pub fn unit() -> Self {
        Self::Constant { value: 1.0 }
    }

    pub fn value(&self, z: f64, h: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Sinusoid {
                mean,
                amplitude,
                wavenumber,
            } => mean + amplitude * (wavenumber * PI * z / h).sin(),
        }
    }

    pub fn derivative(&self, z: f64, h: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Sinusoid {
                amplitude,
                wavenumber,
                ..
            } => {
                let w = wavenumber * PI / h;
                amplitude * w * (w * z).cos()
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Self::Constant { value } if *value == 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub height: f64,
    pub lambda: LambdaProfile,
    pub lambda_bound: f64,
}

impl DomainSpec {
    pub fn rectangle(lx: f64, ly: f64, height: f64) -> Self {
        Self {
            shape: Shape::Rectangle { lx, ly },
            height,
            lambda: LambdaProfile::unit(),
            lambda_bound: 10.0,
        }
    }

    pub fn disk(radius: f64, height: f64) -> Self {
        Self {
            shape: Shape::Disk { radius },
            height,
            lambda: LambdaProfile::unit(),
            lambda_bound: 10.0,
        }
    }

    pub fn with_lambda(mut self, lambda: LambdaProfile) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn area(&self) -> f64 {
        match self.shape {
            Shape::Rectangle { lx, ly } => lx * ly,
            Shape::Disk { radius } => PI * radius * radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Rectangle { lx, ly } => lx.hypot(ly),
            Shape::Disk { radius } => 2.0 * radius,
        }
    }

    /// Positive dimensions and ellipticity on a fine sample of `[0, h]`.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!("{name} must be positive, got {v}")))
            }
        };
        positive("height", self.height)?;
        positive("lambda_bound", self.lambda_bound)?;
        match self.shape {
            Shape::Rectangle { lx, ly } => {
                positive("lx", lx)?;
                positive("ly", ly)?;
            }
            Shape::Disk { radius } => positive("radius", radius)?,
        }
        let (zs, _) = quadrature::gauss_legendre(64, 0.0, self.height);
        let lower = 1.0 / self.lambda_bound;
        let upper = self.lambda_bound;
        for z in zs.into_iter().chain([0.0, self.height]) {
            let value = self.lambda.value(z, self.height);
            if !(lower..=upper).contains(&value) {
                return Err(Error::Ellipticity {
                    z,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GridResolution {
    #[default]
    Auto,
    /// Intervals per side; nodes include the boundary.
    Cartesian { nx: usize, ny: usize },
    /// Gauss radial nodes and uniform angular nodes.
    Polar { nr: usize, ntheta: usize },
}

/// Horizontal Dirichlet eigenbasis of `−Δ̄` on Ω.
#[derive(Debug, Clone)]
pub enum EigenBasis {
    Rect(RectBasis),
    Disk(DiskBasis),
}

macro_rules! dispatch {
    ($self:expr, $b:ident => $e:expr) => {
        match $self {
            EigenBasis::Rect($b) => $e,
            EigenBasis::Disk($b) => $e,
        }
    };
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eigenvalues(&self) -> &[f64] {
        dispatch!(self, b => &b.eigenvalues)
    }

    /// `μ_n = ∫_Ω e_n`.
    pub fn means(&self) -> &[f64] {
        dispatch!(self, b => &b.means)
    }

    pub fn area(&self) -> f64 {
        match self {
            EigenBasis::Rect(b) => b.lx * b.ly,
            EigenBasis::Disk(b) => PI * b.radius * b.radius,
        }
    }

    /// `Σ μ_n²`, the area seen by the truncated basis.
    pub fn resolved_area(&self) -> f64 {
        self.means().iter().map(|m| m * m).sum()
    }

    pub fn grid_len(&self) -> usize {
        dispatch!(self, b => b.grid_len())
    }

    pub fn grid_point(&self, idx: usize) -> (f64, f64) {
        dispatch!(self, b => b.grid_point(idx))
    }

    pub fn grid_points(&self) -> Vec<(f64, f64)> {
        (0..self.grid_len()).map(|i| self.grid_point(i)).collect()
    }

    pub fn grid_weights(&self) -> Vec<f64> {
        dispatch!(self, b => b.grid_weights())
    }

    pub fn to_grid(&self, coeffs: &[f64]) -> Vec<f64> {
        dispatch!(self, b => b.to_grid(coeffs))
    }

    pub fn to_spectral(&self, samples: &[f64]) -> Vec<f64> {
        dispatch!(self, b => b.to_spectral(samples))
    }

    pub fn gradient_to_grid(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        dispatch!(self, b => b.gradient_to_grid(coeffs))
    }

    pub fn mode_value(&self, n: usize, x: f64, y: f64) -> f64 {
        dispatch!(self, b => b.mode_value(n, x, y))
    }

    pub fn mode_gradient(&self, n: usize, x: f64, y: f64) -> (f64, f64) {
        dispatch!(self, b => b.mode_gradient(n, x, y))
    }

    pub fn eval_point(&self, coeffs: &[f64], x: f64, y: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(n, c)| c * self.mode_value(n, x, y))
            .sum()
    }

    /// `∮_{∂Ω} ∂ν e_n` for every mode, by boundary quadrature.
    pub fn boundary_flux_table(&self) -> Vec<f64> {
        match self {
            EigenBasis::Rect(b) => b.boundary_flux_table().to_vec(),
            EigenBasis::Disk(b) => b.boundary_flux_table(),
        }
    }

    /// Sample points on `∂Ω` with outward normals.
    pub fn boundary_samples(&self, count: usize) -> Vec<((f64, f64), (f64, f64))> {
        match self {
            EigenBasis::Rect(b) => {
                let per = count.div_ceil(4).max(1);
                let mut out = Vec::with_capacity(4 * per);
                for s in 0..per {
                    let t = (s as f64 + 0.5) / per as f64;
                    out.push(((t * b.lx, 0.0), (0.0, -1.0)));
                    out.push(((b.lx, t * b.ly), (1.0, 0.0)));
                    out.push(((t * b.lx, b.ly), (0.0, 1.0)));
                    out.push(((0.0, t * b.ly), (-1.0, 0.0)));
                }
                out
            }
            EigenBasis::Disk(b) => (0..count)
                .map(|s| {
                    let t = 2.0 * PI * (s as f64 + 0.25) / count as f64;
                    ((b.radius * t.cos(), b.radius * t.sin()), (t.cos(), t.sin()))
                })
                .collect(),
        }
    }

    /// Whether the point lies in the closed domain.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            EigenBasis::Rect(b) => (0.0..=b.lx).contains(&x) && (0.0..=b.ly).contains(&y),
            EigenBasis::Disk(b) => x.hypot(y) <= b.radius,
        }
    }

    /// Largest horizontal node spacing of the quadrature grid.
    pub fn max_spacing(&self) -> f64 {
        match self {
            EigenBasis::Rect(b) => {
                let (dx, dy) = b.spacing();
                dx.max(dy)
            }
            EigenBasis::Disk(b) => {
                let dr = b.radius / b.nr() as f64;
                dr.max(2.0 * PI * b.radius / b.ntheta as f64)
            }
        }
    }
}

/// Horizontal and vertical bases for one domain.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub domain: DomainSpec,
    pub horizontal: EigenBasis,
    pub vertical: VerticalBasis,
}

impl Discretization {
    pub fn n_modes(&self) -> usize {
        self.horizontal.len()
    }

    pub fn levels(&self) -> &[f64] {
        self.vertical.levels()
    }

    pub fn level_count(&self) -> usize {
        self.vertical.level_count()
    }

    pub fn height(&self) -> f64 {
        self.domain.height
    }
}

/// Build the horizontal eigenbasis and vertical Galerkin basis.
pub fn build_basis(
    spec: &DomainSpec,
    n: usize,
    m: usize,
    grid: GridResolution,
) -> Result<Arc<Discretization>> {
    build_basis_with(spec, n, m, grid, VerticalFamily::Legendre)
}

pub fn build_basis_with(
    spec: &DomainSpec,
    n: usize,
    m: usize,
    grid: GridResolution,
    family: VerticalFamily,
) -> Result<Arc<Discretization>> {
    spec.validate()?;
    if n < 1 || m < 1 {
        return Err(Error::InvalidDomain(format!(
            "mode counts must be >= 1, got N = {n}, M = {m}"
        )));
    }
    let horizontal = match (spec.shape, grid) {
        (Shape::Rectangle { lx, ly }, GridResolution::Auto) => {
            EigenBasis::Rect(RectBasis::new(lx, ly, n, None)?)
        }
        (Shape::Rectangle { lx, ly }, GridResolution::Cartesian { nx, ny }) => {
            EigenBasis::Rect(RectBasis::new(lx, ly, n, Some((nx, ny)))?)
        }
        (Shape::Disk { radius }, GridResolution::Auto) => {
            EigenBasis::Disk(DiskBasis::new(radius, n, None)?)
        }
        (Shape::Disk { radius }, GridResolution::Polar { nr, ntheta }) => {
            EigenBasis::Disk(DiskBasis::new(radius, n, Some((nr, ntheta)))?)
        }
        (shape, grid) => {
            return Err(Error::InvalidDomain(format!(
                "grid {grid:?} does not fit shape {shape:?}"
            )))
        }
    };
    let vertical = VerticalBasis::new(family, m, spec.height, spec.lambda)?;
    Ok(Arc::new(Discretization {
        domain: *spec,
        horizontal,
        vertical,
    }))
}
