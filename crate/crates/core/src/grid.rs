//! Padded transport grids around Ω.
//!
//! The rectangle uses a uniform Cartesian box whose inner block coincides with the
//! quadrature grid of the eigenbasis. The disk uses cell-centred rings with the same
//! angular nodes as the eigenbasis, so rotations by a grid angle map the grid to itself.

use std::f64::consts::PI;

use crate::geometry::disk::RingTables;
use crate::geometry::quadrature::uniform_cubic_weights;
use crate::geometry::{Discretization, EigenBasis};

/// Two velocity components per node: `(u, v)` on the Cartesian grid, `(u_r, u_θ)` on the polar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridVelocity {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl GridVelocity {
    pub fn zeros(len: usize) -> Self {
        Self {
            c1: vec![0.0; len],
            c2: vec![0.0; len],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c1
            .iter()
            .zip(&self.c2)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.c1.iter().chain(&self.c2).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct CartesianGrid {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    /// Node counts of the padded box.
    pub nx: usize,
    pub ny: usize,
    /// Cells of padding on every side.
    pub pad: usize,
    inner_nx: usize,
    inner_ny: usize,
    lx: f64,
    ly: f64,
}

impl CartesianGrid {
    /// First node `(i, j)` of the 4×4 cubic stencil at a point, with its weights in x and y.
    #[inline]
    fn stencil(&self, x: f64, y: f64) -> (usize, usize, [f64; 4], [f64; 4]) {
        let fx = (x - self.x0) / self.dx;
        let fy = (y - self.y0) / self.dy;
        let i0 = (fx.floor() as isize).clamp(1, self.nx as isize - 3);
        let j0 = (fy.floor() as isize).clamp(1, self.ny as isize - 3);
        (
            (i0 - 1) as usize,
            (j0 - 1) as usize,
            uniform_cubic_weights(fx - i0 as f64),
            uniform_cubic_weights(fy - j0 as f64),
        )
    }

    /// Cubic interpolation of `K` fields sharing one stencil.
    #[inline]
    fn interpolate_many<const K: usize>(&self, fields: [&[f64]; K], x: f64, y: f64) -> [f64; K] {
        let (i, j, wx, wy) = self.stencil(x, y);
        let mut out = [0.0; K];
        for (a, wa) in wx.iter().enumerate() {
            let base = (i + a) * self.ny + j;
            for (o, f) in out.iter_mut().zip(&fields) {
                let r = &f[base..base + 4];
                *o += wa * (wy[0] * r[0] + wy[1] * r[1] + wy[2] * r[2] + wy[3] * r[3]);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub radius: f64,
    pub dr: f64,
    pub nr: usize,
    pub ntheta: usize,
    /// Rings with `r < radius`.
    pub inner_rings: usize,
    tables: RingTables,
    /// Radial stencils from the rings to each Gauss radius of the eigenbasis.
    restrict: Vec<RadialStencil>,
}

#[derive(Debug, Clone, Copy)]
struct RadialStencil {
    rings: [usize; 4],
    flipped: [bool; 4],
    weights: [f64; 4],
}

#[derive(Debug, Clone)]
pub enum TransportGrid {
    Cartesian(CartesianGrid),
    Polar(PolarGrid),
}

/// Horizontal convolution weights bound to one grid.
#[derive(Debug, Clone)]
pub enum Stencil {
    /// Separable symmetric weights along x and y.
    Separable { wx: Vec<f64>, wy: Vec<f64> },
    /// Per ring: `(source ring, angular offset, weight)`.
    Rings(Vec<Vec<(usize, isize, f64)>>),
}

impl PolarGrid {
    /// Four-ring cubic stencil at radius `r` using rings below `limit`.
    fn radial_stencil(&self, r: f64, limit: usize) -> RadialStencil {
        let rho = r / self.dr - 0.5;
        let i0 = (rho.floor() as isize).min(limit as isize - 3);
        let s = rho - i0 as f64;
        let w = uniform_cubic_weights(s);
        let mut rings = [0; 4];
        let mut flipped = [false; 4];
        for k in 0..4 {
            let idx = i0 - 1 + k as isize;
            if idx < 0 {
                rings[k] = (-1 - idx) as usize;
                flipped[k] = true;
            } else {
                rings[k] = idx as usize;
            }
        }
        RadialStencil {
            rings,
            flipped,
            weights: w,
        }
    }

    fn dtheta(&self) -> f64 {
        2.0 * PI / self.ntheta as f64
    }

    fn ring_radius(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }
}

impl TransportGrid {
    /// Padded grid around the quadrature grid of `disc` with at least `pad_width` of margin.
    pub fn new(disc: &Discretization, pad_width: f64) -> Self {
        match &disc.horizontal {
            EigenBasis::Rect(b) => {
                let (dx, dy) = b.spacing();
                let pad = (pad_width / dx.min(dy)).ceil() as usize + 4;
                TransportGrid::Cartesian(CartesianGrid {
                    x0: -(pad as f64) * dx,
                    y0: -(pad as f64) * dy,
                    dx,
                    dy,
                    nx: b.nx + 1 + 2 * pad,
                    ny: b.ny + 1 + 2 * pad,
                    pad,
                    inner_nx: b.nx + 1,
                    inner_ny: b.ny + 1,
                    lx: b.lx,
                    ly: b.ly,
                })
            }
            EigenBasis::Disk(b) => {
                let ntheta = b.ntheta;
                let arc = 2.0 * PI * b.radius / ntheta as f64;
                let inner = b.nr().max((b.radius / arc).ceil() as usize);
                let dr = b.radius / inner as f64;
                let nr = inner + (pad_width / dr).ceil() as usize + 4;
                let radii: Vec<f64> = (0..inner).map(|i| (i as f64 + 0.5) * dr).collect();
                let tables = b.ring_tables(&radii);
                let mut grid = PolarGrid {
                    radius: b.radius,
                    dr,
                    nr,
                    ntheta,
                    inner_rings: inner,
                    tables,
                    restrict: Vec::new(),
                };
                // Stay inside Ω so the stencil never straddles the kink of a zero extension.
                grid.restrict = b.r_nodes.iter().map(|&r| grid.radial_stencil(r, inner)).collect();
                TransportGrid::Polar(grid)
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TransportGrid::Cartesian(g) => g.nx * g.ny,
            TransportGrid::Polar(g) => g.nr * g.ntheta,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> (f64, f64) {
        match self {
            TransportGrid::Cartesian(g) => {
                let i = idx / g.ny;
                let j = idx % g.ny;
                (g.x0 + i as f64 * g.dx, g.y0 + j as f64 * g.dy)
            }
            TransportGrid::Polar(g) => {
                let r = g.ring_radius(idx / g.ntheta);
                let t = (idx % g.ntheta) as f64 * g.dtheta();
                (r * t.cos(), r * t.sin())
            }
        }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Area weights of the box quadrature (midpoint in r for the polar grid).
    pub fn weights(&self) -> Vec<f64> {
        match self {
            TransportGrid::Cartesian(g) => vec![g.dx * g.dy; self.len()],
            TransportGrid::Polar(g) => {
                let dt = g.dtheta();
                (0..self.len())
                    .map(|idx| g.ring_radius(idx / g.ntheta) * g.dr * dt)
                    .collect()
            }
        }
    }

    /// Largest node spacing within Ω.
    pub fn spacing(&self) -> f64 {
        match self {
            TransportGrid::Cartesian(g) => g.dx.max(g.dy),
            TransportGrid::Polar(g) => g.dr.max(g.radius * g.dtheta()),
        }
    }

    /// Width of the margin between ∂Ω and the edge of the box.
    pub fn pad_width(&self) -> f64 {
        match self {
            TransportGrid::Cartesian(g) => g.pad as f64 * g.dx.min(g.dy),
            TransportGrid::Polar(g) => g.nr as f64 * g.dr - g.radius,
        }
    }

    /// Whether node `idx` lies in the closed domain.
    pub fn in_domain(&self, idx: usize) -> bool {
        match self {
            TransportGrid::Cartesian(g) => {
                let i = idx / g.ny;
                let j = idx % g.ny;
                (g.pad..g.pad + g.inner_nx).contains(&i) && (g.pad..g.pad + g.inner_ny).contains(&j)
            }
            TransportGrid::Polar(g) => idx / g.ntheta < g.inner_rings,
        }
    }

    pub fn box_contains(&self, x: f64, y: f64) -> bool {
        match self {
            TransportGrid::Cartesian(g) => {
                let x1 = g.x0 + (g.nx - 1) as f64 * g.dx;
                let y1 = g.y0 + (g.ny - 1) as f64 * g.dy;
                (g.x0..=x1).contains(&x) && (g.y0..=y1).contains(&y)
            }
            TransportGrid::Polar(g) => x.hypot(y) <= g.ring_radius(g.nr - 1) * (1.0 + 1e-12),
        }
    }

    pub fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            TransportGrid::Cartesian(g) => {
                let x1 = g.x0 + (g.nx - 1) as f64 * g.dx;
                let y1 = g.y0 + (g.ny - 1) as f64 * g.dy;
                (x.clamp(g.x0, x1), y.clamp(g.y0, y1))
            }
            TransportGrid::Polar(g) => {
                let r = x.hypot(y);
                let rmax = g.ring_radius(g.nr - 1);
                if r > rmax {
                    (x * rmax / r, y * rmax / r)
                } else {
                    (x, y)
                }
            }
        }
    }

    /// Horizontal series `Σ c_n e_n` on the grid, zero outside Ω.
    pub fn synthesize(&self, disc: &Discretization, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        match (self, &disc.horizontal) {
            (TransportGrid::Cartesian(g), EigenBasis::Rect(b)) => {
                let inner = b.to_grid(coeffs);
                for i in 0..g.inner_nx {
                    let dst = (i + g.pad) * g.ny + g.pad;
                    out[dst..dst + g.inner_ny].copy_from_slice(&inner[i * g.inner_ny..(i + 1) * g.inner_ny]);
                }
            }
            (TransportGrid::Polar(g), EigenBasis::Disk(b)) => {
                let inner = b.synth_rings(&g.tables, coeffs);
                out[..inner.len()].copy_from_slice(&inner);
            }
            _ => unreachable!("grid built from this discretization"),
        }
        out
    }

    /// Samples on the quadrature grid of the eigenbasis.
    pub fn restrict(&self, values: &[f64]) -> Vec<f64> {
        match self {
            TransportGrid::Cartesian(g) => {
                let mut out = Vec::with_capacity(g.inner_nx * g.inner_ny);
                for i in 0..g.inner_nx {
                    let src = (i + g.pad) * g.ny + g.pad;
                    out.extend_from_slice(&values[src..src + g.inner_ny]);
                }
                out
            }
            TransportGrid::Polar(g) => {
                let nt = g.ntheta;
                let half = nt / 2;
                let mut out = Vec::with_capacity(g.restrict.len() * nt);
                for st in &g.restrict {
                    for b in 0..nt {
                        let mut acc = 0.0;
                        for k in 0..4 {
                            let bb = if st.flipped[k] { (b + half) % nt } else { b };
                            acc += st.weights[k] * values[st.rings[k] * nt + bb];
                        }
                        out.push(acc);
                    }
                }
                out
            }
        }
    }

    /// Cubic interpolation at an arbitrary point of the box; `monotone` clips to the stencil range.
    pub fn interpolate(&self, values: &[f64], x: f64, y: f64, monotone: bool) -> f64 {
        if let (TransportGrid::Cartesian(g), false) = (self, monotone) {
            return g.interpolate_many([values], x, y)[0];
        }
        let mut acc = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        self.for_stencil(x, y, |idx, w, _| {
            let v = values[idx];
            acc += w * v;
            lo = lo.min(v);
            hi = hi.max(v);
        });
        if monotone {
            acc.clamp(lo, hi)
        } else {
            acc
        }
    }

    /// Cartesian velocity at a point from component fields.
    pub fn velocity_at(&self, vel: &GridVelocity, x: f64, y: f64) -> (f64, f64) {
        if let TransportGrid::Cartesian(g) = self {
            let [a, b] = g.interpolate_many([&vel.c1, &vel.c2], x, y);
            return (a, b);
        }
        let mut a = 0.0;
        let mut b = 0.0;
        self.for_stencil(x, y, |idx, w, sign| {
            a += sign * w * vel.c1[idx];
            b += sign * w * vel.c2[idx];
        });
        match self {
            TransportGrid::Cartesian(_) => (a, b),
            TransportGrid::Polar(_) => {
                let t = y.atan2(x);
                let (s, c) = t.sin_cos();
                (a * c - b * s, a * s + b * c)
            }
        }
    }

    /// `(1 − s)·velocity_at(before) + s·velocity_at(after)` with one stencil pass.
    pub fn velocity_blend_at(&self, before: &GridVelocity, after: &GridVelocity, s: f64, x: f64, y: f64) -> (f64, f64) {
        if let TransportGrid::Cartesian(g) = self {
            let [a0, b0, a1, b1] = g.interpolate_many([&before.c1, &before.c2, &after.c1, &after.c2], x, y);
            return ((1.0 - s) * a0 + s * a1, (1.0 - s) * b0 + s * b1);
        }
        let (mut a0, mut b0, mut a1, mut b1) = (0.0, 0.0, 0.0, 0.0);
        self.for_stencil(x, y, |idx, w, sign| {
            let w = sign * w;
            a0 += w * before.c1[idx];
            b0 += w * before.c2[idx];
            a1 += w * after.c1[idx];
            b1 += w * after.c2[idx];
        });
        let (a, b) = ((1.0 - s) * a0 + s * a1, (1.0 - s) * b0 + s * b1);
        match self {
            TransportGrid::Cartesian(_) => (a, b),
            TransportGrid::Polar(_) => {
                let t = y.atan2(x);
                let (sn, c) = t.sin_cos();
                (a * c - b * sn, a * sn + b * c)
            }
        }
    }

    /// Visit the 4×4 interpolation stencil: `(node, weight, sign for vector components)`.
    fn for_stencil<F: FnMut(usize, f64, f64)>(&self, x: f64, y: f64, mut visit: F) {
        match self {
            TransportGrid::Cartesian(g) => {
                let (i, j, wx, wy) = g.stencil(x, y);
                for (a, wa) in wx.iter().enumerate() {
                    let row = (i + a) * g.ny + j;
                    for (b, wb) in wy.iter().enumerate() {
                        visit(row + b, wa * wb, 1.0);
                    }
                }
            }
            TransportGrid::Polar(g) => {
                let nt = g.ntheta as isize;
                let st = g.radial_stencil(x.hypot(y), g.nr);
                let mut t = y.atan2(x);
                if t < 0.0 {
                    t += 2.0 * PI;
                }
                let ft = t / g.dtheta();
                let b0 = ft.floor() as isize;
                let wt = uniform_cubic_weights(ft - b0 as f64);
                for k in 0..4 {
                    let (shift, sign) = if st.flipped[k] { (nt / 2, -1.0) } else { (0, 1.0) };
                    let row = st.rings[k] * g.ntheta;
                    for (c, wc) in wt.iter().enumerate() {
                        let b = (b0 - 1 + c as isize + shift).rem_euclid(nt) as usize;
                        visit(row + b, st.weights[k] * wc, sign);
                    }
                }
            }
        }
    }

    /// `∇̄⊥P` by fourth-order differences; polar components are `(−∂θP/r, ∂rP)`.
    pub fn perp_gradient(&self, p: &[f64]) -> GridVelocity {
        let mut out = GridVelocity::zeros(self.len());
        match self {
            TransportGrid::Cartesian(g) => {
                let at = |i: isize, j: isize| {
                    let i = i.clamp(0, g.nx as isize - 1) as usize;
                    let j = j.clamp(0, g.ny as isize - 1) as usize;
                    p[i * g.ny + j]
                };
                for i in 0..g.nx as isize {
                    for j in 0..g.ny as isize {
                        let dx = (at(i - 2, j) - 8.0 * at(i - 1, j) + 8.0 * at(i + 1, j) - at(i + 2, j))
                            / (12.0 * g.dx);
                        let dy = (at(i, j - 2) - 8.0 * at(i, j - 1) + 8.0 * at(i, j + 1) - at(i, j + 2))
                            / (12.0 * g.dy);
                        let idx = i as usize * g.ny + j as usize;
                        out.c1[idx] = -dy;
                        out.c2[idx] = dx;
                    }
                }
            }
            TransportGrid::Polar(g) => {
                let nt = g.ntheta as isize;
                let dt = g.dtheta();
                let at = |i: isize, b: isize| {
                    let (ring, b) = if i < 0 { (-1 - i, b + nt / 2) } else { (i, b) };
                    let ring = ring.min(g.nr as isize - 1) as usize;
                    p[ring * g.ntheta + b.rem_euclid(nt) as usize]
                };
                for i in 0..g.nr as isize {
                    let r = g.ring_radius(i as usize);
                    for b in 0..nt {
                        let dth = (at(i, b - 2) - 8.0 * at(i, b - 1) + 8.0 * at(i, b + 1) - at(i, b + 2))
                            / (12.0 * dt);
                        let dr = (at(i - 2, b) - 8.0 * at(i - 1, b) + 8.0 * at(i + 1, b) - at(i + 2, b))
                            / (12.0 * g.dr);
                        let idx = i as usize * g.ntheta + b as usize;
                        out.c1[idx] = -dth / r;
                        out.c2[idx] = dr;
                    }
                }
            }
        }
        out
    }

    /// Convolution weights of a radial kernel profile `k(d / a)` supported in `d < a`.
    /// The rectangle uses the tensor product of one-dimensional profiles.
    pub fn stencil<K: Fn(f64) -> f64>(&self, a: f64, profile: K) -> Stencil {
        match self {
            TransportGrid::Cartesian(g) => {
                let one = |h: f64| {
                    let k = (a / h).ceil() as isize;
                    let mut w: Vec<f64> = (-k..=k).map(|i| profile((i as f64 * h / a).abs())).collect();
                    let s: f64 = w.iter().sum();
                    w.iter_mut().for_each(|v| *v /= s);
                    w
                };
                Stencil::Separable {
                    wx: one(g.dx),
                    wy: one(g.dy),
                }
            }
            TransportGrid::Polar(g) => {
                let dt = g.dtheta();
                let nt = g.ntheta as isize;
                let rows = (0..g.nr)
                    .map(|i| {
                        let ri = g.ring_radius(i);
                        let mut row = Vec::new();
                        for ip in 0..g.nr {
                            let rp = g.ring_radius(ip);
                            if (ri - rp).abs() >= a {
                                continue;
                            }
                            for d in -(nt / 2)..(nt - nt / 2) {
                                let c = (d as f64 * dt).cos();
                                let dist = (ri * ri + rp * rp - 2.0 * ri * rp * c).max(0.0).sqrt();
                                if dist < a {
                                    let w = profile(dist / a) * rp;
                                    if w > 0.0 {
                                        row.push((ip, d, w));
                                    }
                                }
                            }
                        }
                        let s: f64 = row.iter().map(|e| e.2).sum();
                        row.iter_mut().for_each(|e| e.2 /= s);
                        row
                    })
                    .collect();
                Stencil::Rings(rows)
            }
        }
    }

    /// Apply a convolution stencil; values beyond the box repeat the edge.
    pub fn convolve(&self, stencil: &Stencil, values: &[f64]) -> Vec<f64> {
        match (self, stencil) {
            (TransportGrid::Cartesian(g), Stencil::Separable { wx, wy }) => {
                let kx = (wx.len() / 2) as isize;
                let ky = (wy.len() / 2) as isize;
                let (nx, ny) = (g.nx as isize, g.ny as isize);
                let mut tmp = vec![0.0; values.len()];
                for i in 0..nx {
                    for j in 0..ny {
                        let mut acc = 0.0;
                        for (k, w) in wx.iter().enumerate() {
                            let ii = (i + k as isize - kx).clamp(0, nx - 1);
                            acc += w * values[(ii * ny + j) as usize];
                        }
                        tmp[(i * ny + j) as usize] = acc;
                    }
                }
                let mut out = vec![0.0; values.len()];
                for i in 0..nx {
                    let row = &tmp[(i * ny) as usize..((i + 1) * ny) as usize];
                    for j in 0..ny {
                        let mut acc = 0.0;
                        for (k, w) in wy.iter().enumerate() {
                            let jj = (j + k as isize - ky).clamp(0, ny - 1);
                            acc += w * row[jj as usize];
                        }
                        out[(i * ny + j) as usize] = acc;
                    }
                }
                out
            }
            (TransportGrid::Polar(g), Stencil::Rings(rows)) => {
                let nt = g.ntheta;
                let mut out = vec![0.0; values.len()];
                for (i, row) in rows.iter().enumerate() {
                    for b in 0..nt {
                        let mut acc = 0.0;
                        for &(ip, d, w) in row {
                            let bb = (b as isize + d).rem_euclid(nt as isize) as usize;
                            acc += w * values[ip * nt + bb];
                        }
                        out[i * nt + b] = acc;
                    }
                }
                out
            }
            _ => panic!("stencil built for a different grid"),
        }
    }

    /// `∫ v` over the box.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `‖v‖_{L²}` over the box.
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        self.weights()
            .iter()
            .zip(values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Whether the point lies in the closed domain.
    pub fn domain_contains(&self, x: f64, y: f64) -> bool {
        match self {
            TransportGrid::Cartesian(g) => (0.0..=g.lx).contains(&x) && (0.0..=g.ly).contains(&y),
            TransportGrid::Polar(g) => x.hypot(y) <= g.radius,
        }
    }
}
