//! Semi-Lagrangian transport along characteristics of a horizontal velocity.
//!
//! Each level is independent: departure points come from backward RK4 with the
//! velocity interpolated bicubically in space and linearly in time.

use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::grid::{GridVelocity, TransportGrid};

/// A horizontal velocity on one level.
pub trait VelocitySource: Sync {
    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64);

    /// Keep points inside the region where the velocity is defined.
    fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x, y)
    }

    fn contains(&self, _x: f64, _y: f64) -> bool {
        true
    }
}

/// Closed-form velocity, unbounded region.
pub struct AnalyticVelocity<F>(pub F);

impl<F: Fn(f64, f64, f64) -> (f64, f64) + Sync> VelocitySource for AnalyticVelocity<F> {
    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        (self.0)(x, y, t)
    }
}

/// Gridded velocity samples at `t0` and `t1`, linear in time between them.
pub struct GridVelocitySource<'a> {
    pub grid: &'a TransportGrid,
    pub before: &'a GridVelocity,
    pub after: &'a GridVelocity,
    pub t0: f64,
    pub t1: f64,
}

impl VelocitySource for GridVelocitySource<'_> {
    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let span = self.t1 - self.t0;
        let s = if span == 0.0 { 1.0 } else { ((t - self.t0) / span).clamp(0.0, 1.0) };
        if s == 0.0 || std::ptr::eq(self.before, self.after) {
            return self.grid.velocity_at(if s == 0.0 { self.before } else { self.after }, x, y);
        }
        if s == 1.0 {
            return self.grid.velocity_at(self.after, x, y);
        }
        self.grid.velocity_blend_at(self.before, self.after, s, x, y)
    }

    fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        self.grid.clamp(x, y)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.grid.box_contains(x, y)
    }
}

/// Backward characteristic from an arrival point.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicTrace {
    pub arrival: (f64, f64, f64),
    pub time: f64,
    pub departure: (f64, f64),
    /// `(t, x, y)` from the arrival back to the departure; `z` is constant.
    pub path: Vec<(f64, f64, f64)>,
}

fn checked(src: &dyn VelocitySource, x: f64, y: f64, t: f64) -> Result<(f64, f64)> {
    let (u, v) = src.velocity(x, y, t);
    if u.is_finite() && v.is_finite() {
        Ok((u, v))
    } else {
        Err(Error::NonFiniteVelocity { x, y, t })
    }
}

/// One RK4 step of `Γ̇ = u(Γ, t)` from `t` to `t + dt` (`dt` may be negative).
fn rk4(src: &dyn VelocitySource, x: f64, y: f64, t: f64, dt: f64) -> Result<(f64, f64)> {
    let k1 = checked(src, x, y, t)?;
    let (x2, y2) = src.clamp(x + 0.5 * dt * k1.0, y + 0.5 * dt * k1.1);
    let k2 = checked(src, x2, y2, t + 0.5 * dt)?;
    let (x3, y3) = src.clamp(x + 0.5 * dt * k2.0, y + 0.5 * dt * k2.1);
    let k3 = checked(src, x3, y3, t + 0.5 * dt)?;
    let (x4, y4) = src.clamp(x + dt * k3.0, y + dt * k3.1);
    let k4 = checked(src, x4, y4, t + dt)?;
    Ok(src.clamp(
        x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

/// Departure point only; the path is not kept.
fn departure(src: &dyn VelocitySource, x0: f64, y0: f64, t_arrival: f64, t_departure: f64, steps: usize) -> Result<(f64, f64)> {
    if !src.contains(x0, y0) {
        return Err(Error::OutsideBox { x: x0, y: y0 });
    }
    let steps = steps.max(1);
    let dt = (t_departure - t_arrival) / steps as f64;
    let (mut x, mut y) = (x0, y0);
    for k in 0..steps {
        (x, y) = rk4(src, x, y, t_arrival + k as f64 * dt, dt)?;
    }
    Ok((x, y))
}

/// Integrate the characteristic through `(x, y, z)` at `t_arrival` back to `t_departure`
/// in `steps` equal RK4 steps.
pub fn trace_characteristic(
    src: &dyn VelocitySource,
    arrival: (f64, f64, f64),
    t_arrival: f64,
    t_departure: f64,
    steps: usize,
) -> Result<CharacteristicTrace> {
    let (x0, y0, z) = arrival;
    if !src.contains(x0, y0) {
        return Err(Error::OutsideBox { x: x0, y: y0 });
    }
    let steps = steps.max(1);
    let dt = (t_departure - t_arrival) / steps as f64;
    let mut path = Vec::with_capacity(steps + 1);
    let (mut x, mut y) = (x0, y0);
    path.push((t_arrival, x, y));
    for k in 0..steps {
        let t = t_arrival + k as f64 * dt;
        (x, y) = rk4(src, x, y, t, dt)?;
        path.push((t + dt, x, y));
    }
    Ok(CharacteristicTrace {
        arrival: (x0, y0, z),
        time: t_arrival,
        departure: (x, y),
        path,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// RK4 steps per time step when there is no forcing.
    pub substeps: usize,
    /// Clip interpolated values to the stencil range.
    pub monotone: bool,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            substeps: 1,
            monotone: false,
        }
    }
}

/// Forcing samples on the grid at `t0 + s (t1 − t0)`, `s = 0, 1/4, 1/2, 3/4, 1`.
pub type ForcingSamples<'a> = [&'a [f64]; 5];

/// Advance one level from `t0` to `t1`.
///
/// The advected quantity is `q + β y`: `q(t1, x) = q(t0, Γ) + β (Γ_y − y) + ∫ a(s, Γ(s)) ds`.
/// With forcing the path is sampled at the five forcing times and integrated by Simpson's rule.
#[allow(clippy::too_many_arguments)]
pub fn advance_level(
    grid: &TransportGrid,
    q: &[f64],
    src: &dyn VelocitySource,
    t0: f64,
    t1: f64,
    beta: f64,
    forcing: Option<ForcingSamples<'_>>,
    opts: &TransportOptions,
) -> Result<Vec<f64>> {
    let steps = if forcing.is_some() { 4 } else { opts.substeps.max(1) };
    let dt = t1 - t0;
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (x, y) = grid.point(idx);
            let Some(a) = forcing else {
                let (dx, dy) = departure(src, x, y, t1, t0, steps)?;
                return Ok(grid.interpolate(q, dx, dy, opts.monotone) + beta * (dy - y));
            };
            let tr = trace_characteristic(src, (x, y, 0.0), t1, t0, steps)?;
            let (dx, dy) = tr.departure;
            // Path index k is at s = 1 − k/4.
            let mut acc = 0.0;
            for (k, &(_, px, py)) in tr.path.iter().enumerate() {
                let w = match k {
                    0 | 4 => 1.0,
                    1 | 3 => 4.0,
                    _ => 2.0,
                };
                acc += w * grid.interpolate(a[4 - k], px, py, false);
            }
            Ok(grid.interpolate(q, dx, dy, opts.monotone) + beta * (dy - y) + acc * dt / 12.0)
        })
        .collect()
}

/// Advance every interior level; `forcing[l]` holds the five samples of level `l`.
#[allow(clippy::too_many_arguments)]
pub fn advance_interior(
    grid: &TransportGrid,
    f: &[Vec<f64>],
    before: &[GridVelocity],
    after: &[GridVelocity],
    t0: f64,
    t1: f64,
    beta: f64,
    forcing: Option<&[[Vec<f64>; 5]]>,
    opts: &TransportOptions,
) -> Result<Vec<Vec<f64>>> {
    warn_cfl(grid, before.iter().chain(after), t1 - t0);
    f.iter()
        .enumerate()
        .map(|(l, q)| {
            let src = GridVelocitySource {
                grid,
                before: &before[l],
                after: &after[l],
                t0,
                t1,
            };
            let samples = forcing.map(|a| samples_of(&a[l]));
            advance_level(grid, q, &src, t0, t1, beta, samples, opts)
        })
        .collect()
}

/// Advance the bottom and top plates with the velocities of the first and last level.
#[allow(clippy::too_many_arguments)]
pub fn advance_plates(
    grid: &TransportGrid,
    g: &[Vec<f64>; 2],
    before: [&GridVelocity; 2],
    after: [&GridVelocity; 2],
    t0: f64,
    t1: f64,
    forcing: Option<&[[Vec<f64>; 5]; 2]>,
    opts: &TransportOptions,
) -> Result<[Vec<f64>; 2]> {
    let mut out: [Vec<f64>; 2] = Default::default();
    for p in 0..2 {
        let src = GridVelocitySource {
            grid,
            before: before[p],
            after: after[p],
            t0,
            t1,
        };
        let samples = forcing.map(|a| samples_of(&a[p]));
        out[p] = advance_level(grid, &g[p], &src, t0, t1, 0.0, samples, opts)?;
    }
    Ok(out)
}

fn samples_of(a: &[Vec<f64>; 5]) -> ForcingSamples<'_> {
    [&a[0], &a[1], &a[2], &a[3], &a[4]]
}

static CFL_WARNED: AtomicBool = AtomicBool::new(false);

fn warn_cfl<'a>(grid: &TransportGrid, vels: impl Iterator<Item = &'a GridVelocity>, dt: f64) {
    let vmax = vels.map(|v| v.max_abs()).fold(0.0, f64::max);
    if dt.abs() * vmax > grid.spacing() {
        let cells = dt.abs() * vmax / grid.spacing();
        // Semi-Lagrangian steps stay stable here; say so once per process, then only at debug level.
        if CFL_WARNED.swap(true, Ordering::Relaxed) {
            log::debug!("time step {dt} moves {cells:.3} grid cells");
        } else {
            log::warn!("time step {dt} moves {cells:.3} grid cells; departure points cross more than one cell");
        }
    }
}
