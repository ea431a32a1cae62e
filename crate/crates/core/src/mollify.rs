//! Extension beyond Ω and mollification at scale ε.
//!
//! The kernel is supported in the ball of radius ε: a tensor product of one-dimensional
//! profiles of half-width ε/√3 on the rectangle, and a radial profile of radius ε/√2 times a
//! vertical profile of half-width ε/√2 on the disk. Vertical smoothing acts on level values
//! through a fixed `L × L` matrix, horizontal smoothing through a grid stencil.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{ScalarField3D, StreamState, SurfaceFieldPair};
use crate::geometry::quadrature::gauss_legendre;
use crate::geometry::{Discretization, EigenBasis, VerticalBasis};
use crate::grid::{GridVelocity, Stencil, TransportGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Cubic B-spline, C².
    #[default]
    Bspline,
    /// `exp(−1/(1−s²))`, C∞.
    Bump,
}

impl KernelKind {
    /// Unnormalized profile on `s = |x| / a ∈ [0, 1]`.
    pub fn profile(self, s: f64) -> f64 {
        let s = s.abs();
        if s >= 1.0 {
            return 0.0;
        }
        match self {
            KernelKind::Bspline => {
                let t = 2.0 * s;
                if t <= 1.0 {
                    2.0 / 3.0 - t * t + 0.5 * t * t * t
                } else {
                    (2.0 - t).powi(3) / 6.0
                }
            }
            KernelKind::Bump => (-1.0 / (1.0 - s * s)).exp(),
        }
    }

    /// Break points of the profile on `[0, 1]`, for piecewise quadrature.
    fn breaks(self) -> &'static [f64] {
        match self {
            KernelKind::Bspline => &[0.0, 0.5, 1.0],
            KernelKind::Bump => &[0.0, 0.25, 0.5, 0.75, 0.875, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub epsilon: f64,
    pub kernel: KernelKind,
    /// `∫_{−1}^{1} profile(|s|) ds`.
    pub normalization: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, kernel: KernelKind) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config {
                key: "mollifier.epsilon".into(),
                message: format!("must be positive, got {epsilon}"),
            });
        }
        let normalization = 2.0 * integrate_profile(kernel, |_| 1.0);
        Ok(Self {
            epsilon,
            kernel,
            normalization,
        })
    }

    /// Normalized one-dimensional kernel of half-width `a`.
    pub fn eta_1d(&self, x: f64, a: f64) -> f64 {
        self.kernel.profile(x / a) / (a * self.normalization)
    }

    /// Horizontal and vertical half-widths for a domain shape.
    pub fn half_widths(&self, basis: &EigenBasis) -> (f64, f64) {
        let f = match basis {
            EigenBasis::Rect(_) => 3f64.sqrt(),
            EigenBasis::Disk(_) => 2f64.sqrt(),
        };
        (self.epsilon / f, self.epsilon / f)
    }
}

/// `∫_0^1 profile(s) w(s) ds` by Gauss–Legendre between the break points.
fn integrate_profile<W: Fn(f64) -> f64>(kernel: KernelKind, w: W) -> f64 {
    let b = kernel.breaks();
    let mut total = 0.0;
    for pair in b.windows(2) {
        let (xs, ws) = gauss_legendre(40, pair[0], pair[1]);
        total += xs.iter().zip(&ws).map(|(x, q)| q * kernel.profile(*x) * w(*x)).sum::<f64>();
    }
    total
}

/// How a level field continues above and below the plates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerticalExtension {
    /// Constant continuation of the plate values.
    Clamp,
    /// Zero outside `[0, h]`.
    Zero,
}

/// `M[l, l'] = ∫ η_a(z_l − z') ℓ_{l'}(z') dz'` with the chosen continuation of the level interpolant.
pub fn vertical_matrix(vert: &VerticalBasis, spec: &MollifierSpec, a: f64, ext: VerticalExtension) -> DMatrix<f64> {
    let levels = vert.levels();
    let h = vert.height();
    let nl = levels.len();
    let breaks = spec.kernel.breaks();
    let npts = nl + 12;
    let mut m = DMatrix::zeros(nl, nl);
    for (l, &zl) in levels.iter().enumerate() {
        // Piece boundaries: kernel breaks on both sides plus the plates.
        let mut cuts: Vec<f64> = breaks
            .iter()
            .flat_map(|b| [zl - b * a, zl + b * a])
            .chain([0.0, h])
            .filter(|z| *z >= zl - a && *z <= zl + a)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        for pair in cuts.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let mid = 0.5 * (lo + hi);
            let outside = mid < 0.0 || mid > h;
            if outside && ext == VerticalExtension::Zero {
                continue;
            }
            let (zs, ws) = gauss_legendre(npts, lo, hi);
            for (z, w) in zs.iter().zip(&ws) {
                let k = w * spec.eta_1d(zl - z, a);
                let card = vert.level_cardinals(z.clamp(0.0, h));
                for (lp, c) in card.iter().enumerate() {
                    m[(l, lp)] += k * c;
                }
            }
        }
    }
    m
}

/// Extension and mollification bound to a discretization and its padded grid.
#[derive(Debug, Clone)]
pub struct Mollifier {
    spec: MollifierSpec,
    disc: Arc<Discretization>,
    grid: Arc<TransportGrid>,
    stencil: Stencil,
    stream_z: DMatrix<f64>,
    data_z: DMatrix<f64>,
}

impl Mollifier {
    /// Errors when the grid under-resolves the kernel or the padding is narrower than 2ε.
    pub fn new(disc: &Arc<Discretization>, grid: &Arc<TransportGrid>, spec: MollifierSpec) -> Result<Self> {
        let spacing = grid.spacing();
        if spacing > spec.epsilon / 4.0 * (1.0 + 1e-12) {
            return Err(Error::UnderResolvedKernel {
                spacing,
                limit: spec.epsilon / 4.0,
            });
        }
        if grid.pad_width() < 2.0 * spec.epsilon {
            return Err(Error::InsufficientPadding {
                available: grid.pad_width(),
                required: 2.0 * spec.epsilon,
            });
        }
        let (ah, az) = spec.half_widths(&disc.horizontal);
        let kernel = spec.kernel;
        let stencil = grid.stencil(ah, move |s| kernel.profile(s));
        Ok(Self {
            stream_z: vertical_matrix(&disc.vertical, &spec, az, VerticalExtension::Clamp),
            data_z: vertical_matrix(&disc.vertical, &spec, az, VerticalExtension::Zero),
            spec,
            disc: disc.clone(),
            grid: grid.clone(),
            stencil,
        })
    }

    pub fn spec(&self) -> &MollifierSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<TransportGrid> {
        &self.grid
    }

    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    /// `P_e` at the levels: the series inside Ω, the lateral trace `c(z)` everywhere.
    pub fn extend_stream(&self, psi: &StreamState) -> Vec<Vec<f64>> {
        let n = self.disc.n_modes();
        let coeffs = psi.horizontal_at_levels();
        let trace = psi.lateral_trace();
        (0..self.disc.level_count())
            .into_par_iter()
            .map(|l| {
                let mut g = self.grid.synthesize(&self.disc, &coeffs[l * n..(l + 1) * n]);
                g.iter_mut().for_each(|v| *v += trace[l]);
                g
            })
            .collect()
    }

    /// Horizontal convolution of one level.
    pub fn mollify(&self, values: &[f64]) -> Vec<f64> {
        self.grid.convolve(&self.stencil, values)
    }

    fn vertical(&self, m: &DMatrix<f64>, levels: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let nl = levels.len();
        (0..nl)
            .into_par_iter()
            .map(|l| {
                let mut out = vec![0.0; levels[0].len()];
                for (lp, src) in levels.iter().enumerate() {
                    let w = m[(l, lp)];
                    if w != 0.0 {
                        out.iter_mut().zip(src).for_each(|(o, s)| *o += w * s);
                    }
                }
                out
            })
            .collect()
    }

    /// `P_ε = P_E ∗ η_ε` at the levels, `P_E` continued as a constant in z beyond the plates.
    pub fn mollify_stream(&self, psi: &StreamState) -> Vec<Vec<f64>> {
        let ext = self.extend_stream(psi);
        let smooth = self.vertical(&self.stream_z, &ext);
        smooth.par_iter().map(|v| self.mollify(v)).collect()
    }

    /// `∇̄⊥P_ε` per level.
    pub fn velocity(&self, psi: &StreamState) -> Vec<GridVelocity> {
        self.mollify_stream(psi)
            .par_iter()
            .map(|p| self.grid.perp_gradient(p))
            .collect()
    }

    /// Zero extension of a level field given by its spectral coefficients.
    pub fn extend_field(&self, f: &ScalarField3D) -> Vec<Vec<f64>> {
        (0..self.disc.level_count())
            .into_par_iter()
            .map(|l| self.grid.synthesize(&self.disc, f.level(l)))
            .collect()
    }

    /// Zero extension of a closed-form `f(x, y, z)` sampled on the padded grid.
    pub fn extend_fn<F>(&self, f: F) -> Vec<Vec<f64>>
    where
        F: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let pts = self.grid.points();
        self.disc
            .levels()
            .par_iter()
            .map(|&z| {
                pts.iter()
                    .enumerate()
                    .map(|(i, &(x, y))| if self.grid.in_domain(i) { f(x, y, z) } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Zero extension of a closed-form plate function.
    pub fn extend_surface_fn<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        self.grid
            .points()
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| if self.grid.in_domain(i) { f(x, y) } else { 0.0 })
            .collect()
    }

    /// Mollify zero-extended level data in z and horizontally.
    pub fn mollify_data(&self, levels: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let smooth = self.vertical(&self.data_z, levels);
        smooth.par_iter().map(|v| self.mollify(v)).collect()
    }

    /// `f_ε = f_E ∗ η_ε` for a spectral interior field.
    pub fn extend_mollify_data(&self, f: &ScalarField3D) -> Vec<Vec<f64>> {
        self.mollify_data(&self.extend_field(f))
    }

    /// Plate data are two-dimensional: horizontal mollification of the zero extension.
    pub fn extend_mollify_surface(&self, g: &SurfaceFieldPair) -> [Vec<f64>; 2] {
        let b = self.grid.synthesize(&self.disc, &g.bottom);
        let t = self.grid.synthesize(&self.disc, &g.top);
        [self.mollify(&b), self.mollify(&t)]
    }

    /// Grid levels back to spectral coefficients on Ω.
    pub fn to_field(&self, levels: &[Vec<f64>]) -> Result<ScalarField3D> {
        let restricted: Vec<Vec<f64>> = levels.par_iter().map(|v| self.grid.restrict(v)).collect();
        ScalarField3D::from_grid(&self.disc, &restricted)
    }

    /// Plate grids back to spectral coefficients.
    pub fn to_surface(&self, plates: &[Vec<f64>; 2]) -> SurfaceFieldPair {
        let h = &self.disc.horizontal;
        SurfaceFieldPair {
            bottom: h.to_spectral(&self.grid.restrict(&plates[0])),
            top: h.to_spectral(&self.grid.restrict(&plates[1])),
        }
    }
}

/// Default ε: four times the largest grid spacing.
pub fn default_epsilon(grid_spacing: f64) -> f64 {
    4.0 * grid_spacing
}

/// Padding width needed for ε.
pub fn required_padding(epsilon: f64) -> f64 {
    2.0 * epsilon
}
