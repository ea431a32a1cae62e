//! Dirichlet sine eigenbasis of the rectangle `[0, Lx] × [0, Ly]`.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RectBasis {
    pub lx: f64,
    pub ly: f64,
    /// `(j, k)` indices, 1-based, in eigenvalue order.
    pub modes: Vec<(usize, usize)>,
    pub eigenvalues: Vec<f64>,
    pub means: Vec<f64>,
    /// Grid intervals; the grid has `nx + 1` by `ny + 1` nodes including the boundary.
    pub nx: usize,
    pub ny: usize,
    jmax: usize,
    kmax: usize,
    sx: DMatrix<f64>,
    sy: DMatrix<f64>,
    dsx: DMatrix<f64>,
    dsy: DMatrix<f64>,
    wsx: DMatrix<f64>,
    wsy: DMatrix<f64>,
    boundary_flux: Vec<f64>,
}

fn sine_mean(j: usize, l: f64) -> f64 {
    if j % 2 == 0 {
        0.0
    } else {
        (2.0 / l).sqrt() * 2.0 * l / (j as f64 * PI)
    }
}

/// Lowest `n` sine-product modes, ordered by eigenvalue then `(j, k)`.
pub fn lowest_modes(n: usize, lx: f64, ly: f64) -> Vec<(usize, usize, f64)> {
    let lam = |j: usize, k: usize| {
        let a = j as f64 * PI / lx;
        let b = k as f64 * PI / ly;
        a * a + b * b
    };
    let mut cap = ((n as f64).sqrt() as usize + 2).max(2);
    loop {
        let jc = ((cap as f64) * (lx / ly).sqrt()).ceil() as usize + 1;
        let kc = ((cap as f64) * (ly / lx).sqrt()).ceil() as usize + 1;
        let mut all: Vec<(usize, usize, f64)> = (1..=jc)
            .flat_map(|j| (1..=kc).map(move |k| (j, k)))
            .map(|(j, k)| (j, k, lam(j, k)))
            .collect();
        if all.len() >= n {
            all.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
            all.truncate(n);
            let top = all.last().map(|m| m.2).unwrap_or(0.0);
            // Every omitted candidate must lie strictly above the retained spectrum.
            let edge = lam(jc + 1, 1).min(lam(1, kc + 1));
            if top < edge {
                return all;
            }
        }
        cap *= 2;
    }
}

impl RectBasis {
    pub fn new(lx: f64, ly: f64, n: usize, grid: Option<(usize, usize)>) -> Result<Self> {
        let picked = lowest_modes(n, lx, ly);
        let jmax = picked.iter().map(|m| m.0).max().unwrap_or(1);
        let kmax = picked.iter().map(|m| m.1).max().unwrap_or(1);
        let (nx, ny) = match grid {
            Some((nx, ny)) => {
                if nx < 2 * jmax || ny < 2 * kmax {
                    return Err(Error::UnderResolvedGrid {
                        mode: format!("({jmax}, {kmax})"),
                        detail: format!(
                            "grid {nx}x{ny} intervals, need at least {}x{}",
                            2 * jmax,
                            2 * kmax
                        ),
                    });
                }
                (nx, ny)
            }
            None => ((2 * jmax).max(32), (2 * kmax).max(32)),
        };
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let table = |count: usize, pts: usize, step: f64, len: f64, deriv: bool| {
            DMatrix::from_fn(count, pts, |j, i| {
                let w = (j + 1) as f64 * PI / len;
                let x = i as f64 * step;
                let norm = (2.0 / len).sqrt();
                if deriv {
                    norm * w * (w * x).cos()
                } else {
                    norm * (w * x).sin()
                }
            })
        };
        let sx = table(jmax, nx + 1, dx, lx, false);
        let sy = table(kmax, ny + 1, dy, ly, false);
        let dsx = table(jmax, nx + 1, dx, lx, true);
        let dsy = table(kmax, ny + 1, dy, ly, true);
        let trap = |pts: usize, step: f64| {
            (0..pts)
                .map(|i| if i == 0 || i == pts - 1 { 0.5 * step } else { step })
                .collect::<Vec<_>>()
        };
        let tx = trap(nx + 1, dx);
        let ty = trap(ny + 1, dy);
        let wsx = DMatrix::from_fn(jmax, nx + 1, |j, i| sx[(j, i)] * tx[i]);
        let wsy = DMatrix::from_fn(kmax, ny + 1, |k, l| sy[(k, l)] * ty[l]);

        let modes: Vec<(usize, usize)> = picked.iter().map(|m| (m.0, m.1)).collect();
        let eigenvalues = picked.iter().map(|m| m.2).collect();
        let means = modes
            .iter()
            .map(|&(j, k)| sine_mean(j, lx) * sine_mean(k, ly))
            .collect();
        let mut basis = Self {
            lx,
            ly,
            modes,
            eigenvalues,
            means,
            nx,
            ny,
            jmax,
            kmax,
            sx,
            sy,
            dsx,
            dsy,
            wsx,
            wsy,
            boundary_flux: Vec::new(),
        };
        basis.boundary_flux = basis.side_fluxes();
        Ok(basis)
    }

    pub fn grid_len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.lx / self.nx as f64, self.ly / self.ny as f64)
    }

    pub fn grid_point(&self, idx: usize) -> (f64, f64) {
        let (dx, dy) = self.spacing();
        let i = idx / (self.ny + 1);
        let l = idx % (self.ny + 1);
        (i as f64 * dx, l as f64 * dy)
    }

    /// Trapezoid weights of the grid, row-major like the samples.
    pub fn grid_weights(&self) -> Vec<f64> {
        let (dx, dy) = self.spacing();
        let mut w = Vec::with_capacity(self.grid_len());
        for i in 0..=self.nx {
            let wx = if i == 0 || i == self.nx { 0.5 * dx } else { dx };
            for l in 0..=self.ny {
                let wy = if l == 0 || l == self.ny { 0.5 * dy } else { dy };
                w.push(wx * wy);
            }
        }
        w
    }

    fn coeff_matrix_t(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let mut at = DMatrix::zeros(self.kmax, self.jmax);
        for (&(j, k), &c) in self.modes.iter().zip(coeffs) {
            at[(k - 1, j - 1)] = c;
        }
        at
    }

    fn synth(&self, coeffs: &[f64], tx: &DMatrix<f64>, ty: &DMatrix<f64>) -> Vec<f64> {
        let at = self.coeff_matrix_t(coeffs);
        // (ny+1)×(nx+1) column-major equals the row-major (nx+1)×(ny+1) layout.
        let gt = ty.tr_mul(&at) * tx;
        gt.as_slice().to_vec()
    }

    pub fn to_grid(&self, coeffs: &[f64]) -> Vec<f64> {
        self.synth(coeffs, &self.sx, &self.sy)
    }

    pub fn gradient_to_grid(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (
            self.synth(coeffs, &self.dsx, &self.sy),
            self.synth(coeffs, &self.sx, &self.dsy),
        )
    }

    pub fn to_spectral(&self, samples: &[f64]) -> Vec<f64> {
        let gt = DMatrix::from_column_slice(self.ny + 1, self.nx + 1, samples);
        let at = &self.wsy * gt * self.wsx.transpose();
        self.modes
            .iter()
            .map(|&(j, k)| at[(k - 1, j - 1)])
            .collect()
    }

    pub fn mode_value(&self, n: usize, x: f64, y: f64) -> f64 {
        let (j, k) = self.modes[n];
        let a = j as f64 * PI / self.lx;
        let b = k as f64 * PI / self.ly;
        2.0 / (self.lx * self.ly).sqrt() * (a * x).sin() * (b * y).sin()
    }

    pub fn mode_gradient(&self, n: usize, x: f64, y: f64) -> (f64, f64) {
        let (j, k) = self.modes[n];
        let a = j as f64 * PI / self.lx;
        let b = k as f64 * PI / self.ly;
        let c = 2.0 / (self.lx * self.ly).sqrt();
        (
            c * a * (a * x).cos() * (b * y).sin(),
            c * b * (a * x).sin() * (b * y).cos(),
        )
    }

    /// `∮ ∂ν e_n` per mode by Gauss–Legendre quadrature along the four sides.
    fn side_fluxes(&self) -> Vec<f64> {
        let nq = 2 * self.jmax.max(self.kmax) + 16;
        let (ys, wy) = gauss_legendre(nq, 0.0, self.ly);
        let (xs, wx) = gauss_legendre(nq, 0.0, self.lx);
        (0..self.modes.len())
            .map(|n| {
                let mut total = 0.0;
                for (y, w) in ys.iter().zip(&wy) {
                    total -= w * self.mode_gradient(n, 0.0, *y).0;
                    total += w * self.mode_gradient(n, self.lx, *y).0;
                }
                for (x, w) in xs.iter().zip(&wx) {
                    total -= w * self.mode_gradient(n, *x, 0.0).1;
                    total += w * self.mode_gradient(n, *x, self.ly).1;
                }
                total
            })
            .collect()
    }

    pub fn boundary_flux_table(&self) -> &[f64] {
        &self.boundary_flux
    }

    /// Indices of grid nodes lying on the boundary.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let w = self.ny + 1;
        (0..self.grid_len())
            .filter(|&idx| {
                let i = idx / w;
                let l = idx % w;
                i == 0 || i == self.nx || l == 0 || l == self.ny
            })
            .collect()
    }

    /// Outward unit normal at a boundary grid node (corners use the diagonal).
    pub fn boundary_normal(&self, idx: usize) -> (f64, f64) {
        let w = self.ny + 1;
        let i = idx / w;
        let l = idx % w;
        let nx: f64 = if i == 0 { -1.0 } else if i == self.nx { 1.0 } else { 0.0 };
        let ny: f64 = if l == 0 { -1.0 } else if l == self.ny { 1.0 } else { 0.0 };
        let r = nx.hypot(ny);
        (nx / r, ny / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_mode_of_pi_square() {
        let b = RectBasis::new(PI, PI, 5, None).unwrap();
        assert_eq!(b.modes[0], (1, 1));
        assert!((b.eigenvalues[0] - 2.0).abs() < 1e-14);
        assert!((b.means[0] - 8.0 / PI).abs() < 1e-14);
        let v = b.mode_value(0, 0.7, 1.9);
        assert!((v - 2.0 / PI * 0.7f64.sin() * 1.9f64.sin()).abs() < 1e-15);
        // Ties are broken lexicographically.
        assert_eq!(b.modes[1], (1, 2));
        assert_eq!(b.modes[2], (2, 1));
    }

    #[test]
    fn spectral_round_trip_is_exact() {
        let b = RectBasis::new(1.0, 2.0, 30, None).unwrap();
        let coeffs: Vec<f64> = (0..30).map(|n| ((n * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let back = b.to_spectral(&b.to_grid(&coeffs));
        for (a, c) in coeffs.iter().zip(&back) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        assert!(RectBasis::new(1.0, 1.0, 20, Some((4, 4))).is_err());
    }
}
