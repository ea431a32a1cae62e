//! Dirichlet Bessel eigenbasis of the disk of radius `R` centred at the origin.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use super::bessel::{bessel_j_all, bessel_zeros};
use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskMode {
    pub m: usize,
    pub k: usize,
    /// `false` for `cos(mθ)`, `true` for `sin(mθ)`.
    pub sine: bool,
    pub root: f64,
}

/// Radial tables of every angular order at a set of radii.
#[derive(Debug, Clone)]
pub struct RingTables {
    radial: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct DiskBasis {
    pub radius: f64,
    pub modes: Vec<DiskMode>,
    pub eigenvalues: Vec<f64>,
    pub means: Vec<f64>,
    norms: Vec<f64>,
    pub r_nodes: Vec<f64>,
    r_weights: Vec<f64>,
    pub ntheta: usize,
    mmax: usize,
    /// Per angular order: list of `(k, mode index for cos, mode index for sin)`.
    by_order: Vec<Vec<(usize, Option<usize>, Option<usize>)>>,
    /// Per angular order: `J_m(j r_i / R) / N` with rows indexed like `by_order`.
    radial: Vec<DMatrix<f64>>,
    radial_d: Vec<DMatrix<f64>>,
    cos_t: DMatrix<f64>,
    sin_t: DMatrix<f64>,
}

/// Lowest `n` Bessel modes ordered by eigenvalue, ties by `(m, k, cos before sin)`.
pub fn lowest_modes(n: usize) -> Result<Vec<DiskMode>> {
    let mut cap = 2.0 * (n as f64).sqrt() + 8.0;
    loop {
        let mut all = Vec::new();
        let mut m = 0;
        loop {
            let roots = bessel_zeros(m, cap)?;
            if roots.is_empty() {
                break;
            }
            for (k, &root) in roots.iter().enumerate() {
                all.push(DiskMode { m, k: k + 1, sine: false, root });
                if m > 0 {
                    all.push(DiskMode { m, k: k + 1, sine: true, root });
                }
            }
            m += 1;
        }
        if all.len() > n {
            all.sort_by(|a, b| {
                a.root
                    .total_cmp(&b.root)
                    .then(a.m.cmp(&b.m))
                    .then(a.k.cmp(&b.k))
                    .then(a.sine.cmp(&b.sine))
            });
            // Every mode with a root below the cap was enumerated.
            all.truncate(n);
            return Ok(all);
        }
        cap *= 1.5;
    }
}

impl DiskBasis {
    pub fn new(radius: f64, n: usize, grid: Option<(usize, usize)>) -> Result<Self> {
        let modes = lowest_modes(n)?;
        let mmax = modes.iter().map(|m| m.m).max().unwrap_or(0);
        let kmax = modes.iter().map(|m| m.k).max().unwrap_or(1);
        let need_r = 2 * kmax + mmax / 2 + 16;
        let need_t = 4 * mmax + 4;
        let (nr, ntheta) = match grid {
            Some((nr, nt)) => {
                if nr < 2 * kmax || nt < need_t || nt % 2 == 1 {
                    return Err(Error::UnderResolvedGrid {
                        mode: format!("(m={mmax}, k={kmax})"),
                        detail: format!(
                            "polar grid {nr}x{nt}, need nr >= {} and even ntheta >= {need_t}",
                            2 * kmax
                        ),
                    });
                }
                (nr, nt)
            }
            None => (need_r, need_t.max(64)),
        };
        let (r_nodes, r_weights) = gauss_legendre(nr, 0.0, radius);
        let norms: Vec<f64> = modes
            .iter()
            .map(|md| {
                let jn = bessel_j_all(md.m + 1, md.root)[md.m + 1];
                let ang = if md.m == 0 { 2.0 * PI } else { PI };
                (0.5 * radius * radius * jn * jn * ang).sqrt()
            })
            .collect();
        let eigenvalues = modes.iter().map(|md| (md.root / radius).powi(2)).collect();
        let means = modes
            .iter()
            .zip(&norms)
            .map(|(md, nrm)| {
                if md.m == 0 {
                    let j1 = bessel_j_all(1, md.root)[1];
                    2.0 * PI * radius * radius * j1 / (md.root * nrm)
                } else {
                    0.0
                }
            })
            .collect();

        let mut by_order: Vec<Vec<(usize, Option<usize>, Option<usize>)>> = vec![Vec::new(); mmax + 1];
        for (idx, md) in modes.iter().enumerate() {
            let list = &mut by_order[md.m];
            let slot = match list.iter().position(|e| e.0 == md.k) {
                Some(p) => p,
                None => {
                    list.push((md.k, None, None));
                    list.len() - 1
                }
            };
            if md.sine {
                list[slot].2 = Some(idx);
            } else {
                list[slot].1 = Some(idx);
            }
        }
        let mut radial = Vec::with_capacity(mmax + 1);
        let mut radial_d = Vec::with_capacity(mmax + 1);
        for (m, list) in by_order.iter().enumerate() {
            let mut t = DMatrix::zeros(list.len(), nr);
            let mut td = DMatrix::zeros(list.len(), nr);
            for (row, entry) in list.iter().enumerate() {
                let idx = entry.1.or(entry.2).expect("mode slot populated");
                let root = modes[idx].root;
                let nrm = norms[idx];
                for (i, &r) in r_nodes.iter().enumerate() {
                    let x = root * r / radius;
                    let js = bessel_j_all(m + 1, x);
                    let dj = if m == 0 { -js[1] } else { 0.5 * (js[m - 1] - js[m + 1]) };
                    t[(row, i)] = js[m] / nrm;
                    td[(row, i)] = root / radius * dj / nrm;
                }
            }
            radial.push(t);
            radial_d.push(td);
        }
        let cos_t = DMatrix::from_fn(mmax + 1, ntheta, |m, b| {
            (m as f64 * 2.0 * PI * b as f64 / ntheta as f64).cos()
        });
        let sin_t = DMatrix::from_fn(mmax + 1, ntheta, |m, b| {
            (m as f64 * 2.0 * PI * b as f64 / ntheta as f64).sin()
        });
        Ok(Self {
            radius,
            modes,
            eigenvalues,
            means,
            norms,
            r_nodes,
            r_weights,
            ntheta,
            mmax,
            by_order,
            radial,
            radial_d,
            cos_t,
            sin_t,
        })
    }

    pub fn nr(&self) -> usize {
        self.r_nodes.len()
    }

    pub fn max_order(&self) -> usize {
        self.mmax
    }

    pub fn grid_len(&self) -> usize {
        self.nr() * self.ntheta
    }

    pub fn theta(&self, b: usize) -> f64 {
        2.0 * PI * b as f64 / self.ntheta as f64
    }

    pub fn grid_point(&self, idx: usize) -> (f64, f64) {
        let r = self.r_nodes[idx / self.ntheta];
        let t = self.theta(idx % self.ntheta);
        (r * t.cos(), r * t.sin())
    }

    pub fn grid_weights(&self) -> Vec<f64> {
        let dt = 2.0 * PI / self.ntheta as f64;
        let mut w = Vec::with_capacity(self.grid_len());
        for (r, wr) in self.r_nodes.iter().zip(&self.r_weights) {
            for _ in 0..self.ntheta {
                w.push(wr * r * dt);
            }
        }
        w
    }

    /// Radial profiles per angular order and parity for given coefficients.
    fn profiles(&self, coeffs: &[f64], table: &[DMatrix<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let nr = table.first().map_or(0, |t| t.ncols());
        self.by_order
            .iter()
            .enumerate()
            .map(|(m, list)| {
                let mut pc = vec![0.0; nr];
                let mut ps = vec![0.0; nr];
                for (row, entry) in list.iter().enumerate() {
                    let ac = entry.1.map(|i| coeffs[i]).unwrap_or(0.0);
                    let as_ = entry.2.map(|i| coeffs[i]).unwrap_or(0.0);
                    if ac == 0.0 && as_ == 0.0 {
                        continue;
                    }
                    for i in 0..nr {
                        let t = table[m][(row, i)];
                        pc[i] += ac * t;
                        ps[i] += as_ * t;
                    }
                }
                (pc, ps)
            })
            .collect()
    }

    fn synth_angular(&self, profiles: &[(Vec<f64>, Vec<f64>)], derivative: bool) -> Vec<f64> {
        let nt = self.ntheta;
        let nr = profiles.first().map_or(0, |p| p.0.len());
        let mut out = vec![0.0; nr * nt];
        for (m, (pc, ps)) in profiles.iter().enumerate() {
            let mf = m as f64;
            for i in 0..nr {
                if pc[i] == 0.0 && ps[i] == 0.0 {
                    continue;
                }
                let row = &mut out[i * nt..(i + 1) * nt];
                for (b, v) in row.iter_mut().enumerate() {
                    let (c, s) = (self.cos_t[(m, b)], self.sin_t[(m, b)]);
                    if derivative {
                        *v += mf * (-pc[i] * s + ps[i] * c);
                    } else {
                        *v += pc[i] * c + ps[i] * s;
                    }
                }
            }
        }
        out
    }

    pub fn to_grid(&self, coeffs: &[f64]) -> Vec<f64> {
        let p = self.profiles(coeffs, &self.radial);
        self.synth_angular(&p, false)
    }

    /// Cartesian gradient `(∂x, ∂y)` on the grid.
    pub fn gradient_to_grid(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let dr = self.synth_angular(&self.profiles(coeffs, &self.radial_d), false);
        let dth = self.synth_angular(&self.profiles(coeffs, &self.radial), true);
        let nt = self.ntheta;
        let mut gx = vec![0.0; self.grid_len()];
        let mut gy = vec![0.0; self.grid_len()];
        for i in 0..self.nr() {
            let r = self.r_nodes[i];
            for b in 0..nt {
                let idx = i * nt + b;
                let (s, c) = self.theta(b).sin_cos();
                let gt = dth[idx] / r;
                gx[idx] = c * dr[idx] - s * gt;
                gy[idx] = s * dr[idx] + c * gt;
            }
        }
        (gx, gy)
    }

    pub fn to_spectral(&self, samples: &[f64]) -> Vec<f64> {
        let nt = self.ntheta;
        let dt = 2.0 * PI / nt as f64;
        let mut out = vec![0.0; self.modes.len()];
        for (m, list) in self.by_order.iter().enumerate() {
            let mut fc = vec![0.0; self.nr()];
            let mut fs = vec![0.0; self.nr()];
            for i in 0..self.nr() {
                let row = &samples[i * nt..(i + 1) * nt];
                let mut c = 0.0;
                let mut s = 0.0;
                for (b, v) in row.iter().enumerate() {
                    c += v * self.cos_t[(m, b)];
                    s += v * self.sin_t[(m, b)];
                }
                let w = self.r_weights[i] * self.r_nodes[i] * dt;
                fc[i] = c * w;
                fs[i] = s * w;
            }
            for (row, entry) in list.iter().enumerate() {
                let t = self.radial[m].row(row);
                if let Some(idx) = entry.1 {
                    out[idx] = (0..self.nr()).map(|i| t[i] * fc[i]).sum();
                }
                if let Some(idx) = entry.2 {
                    out[idx] = (0..self.nr()).map(|i| t[i] * fs[i]).sum();
                }
            }
        }
        out
    }

    /// Radial tables `J_m(j r / R) / N` at arbitrary radii inside the disk.
    pub fn ring_tables(&self, radii: &[f64]) -> RingTables {
        let radial = self
            .by_order
            .iter()
            .enumerate()
            .map(|(m, list)| {
                DMatrix::from_fn(list.len(), radii.len(), |row, i| {
                    let entry = list[row];
                    let idx = entry.1.or(entry.2).expect("mode slot populated");
                    let md = self.modes[idx];
                    if radii[i] > self.radius {
                        0.0
                    } else {
                        bessel_j_all(m, md.root * radii[i] / self.radius)[m] / self.norms[idx]
                    }
                })
            })
            .collect();
        RingTables { radial }
    }

    /// Synthesize on rings given by [`Self::ring_tables`], same angular grid; ring-major.
    pub fn synth_rings(&self, tables: &RingTables, coeffs: &[f64]) -> Vec<f64> {
        let p = self.profiles(coeffs, &tables.radial);
        self.synth_angular(&p, false)
    }

    pub fn mode_value(&self, n: usize, x: f64, y: f64) -> f64 {
        let md = self.modes[n];
        let r = x.hypot(y);
        let t = y.atan2(x);
        let j = bessel_j_all(md.m, md.root * r / self.radius)[md.m];
        let ang = if md.sine { (md.m as f64 * t).sin() } else { (md.m as f64 * t).cos() };
        j * ang / self.norms[n]
    }

    pub fn mode_gradient(&self, n: usize, x: f64, y: f64) -> (f64, f64) {
        let md = self.modes[n];
        let m = md.m;
        let r = x.hypot(y).max(1e-300);
        let t = y.atan2(x);
        let arg = md.root * r / self.radius;
        let js = bessel_j_all(m + 1, arg);
        let dj = if m == 0 { -js[1] } else { 0.5 * (js[m - 1] - js[m + 1]) };
        let mf = m as f64;
        let (ang, dang) = if md.sine {
            ((mf * t).sin(), mf * (mf * t).cos())
        } else {
            ((mf * t).cos(), -mf * (mf * t).sin())
        };
        let dr = md.root / self.radius * dj * ang / self.norms[n];
        let dt = js[m] * dang / (r * self.norms[n]);
        (t.cos() * dr - t.sin() * dt, t.sin() * dr + t.cos() * dt)
    }

    /// `∮ ∂r e_n R dθ` per mode, by the uniform rule on the boundary circle.
    pub fn boundary_flux_table(&self) -> Vec<f64> {
        let nt = self.ntheta;
        let dt = 2.0 * PI / nt as f64;
        (0..self.modes.len())
            .map(|n| {
                (0..nt)
                    .map(|b| {
                        let t = self.theta(b);
                        let (gx, gy) = self.mode_gradient(n, self.radius * t.cos(), self.radius * t.sin());
                        (gx * t.cos() + gy * t.sin()) * self.radius * dt
                    })
                    .sum()
            })
            .collect()
    }
}
