//! Time evolution: the approximate solution operator, its fixed point on a window, and the march.
//!
//! One application of the operator takes a trajectory `P(t_k)` on a window, mollifies it,
//! transports the mollified data along `∇̄⊥P_ε` and re-solves the elliptic problem at every
//! time node with the fixed circulation `j₀`. Picard iteration looks for its fixed point.

use serde::Serialize;
use std::sync::Arc;

use crate::elliptic::{compatibility_defect, BoundaryTriple, EllipticSolver};
use crate::error::{Error, Result};
use crate::fields::{CirculationProfile, StreamState, SurfaceFieldPair};
use crate::geometry::{build_basis, Discretization, DomainSpec, GridResolution};
use crate::grid::{GridVelocity, TransportGrid};
use crate::mollify::{default_epsilon, required_padding, KernelKind, Mollifier, MollifierSpec};
use crate::transport::{advance_interior, advance_plates, TransportOptions};

pub type InitialFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type PlateFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `a(t, x, y, z)`.
pub type InteriorForcing = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
/// `a(t, x, y)`.
pub type PlateForcing = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Initial data `(f₀, g₀, j₀)` and forcing `(a_L, a_ν)` in closed form.
#[derive(Clone)]
pub struct ProblemData {
    pub f0: InitialFn,
    /// Bottom and top plate data.
    pub g0: [PlateFn; 2],
    pub j0: ProfileFn,
    pub a_l: Option<InteriorForcing>,
    pub a_nu: Option<[PlateForcing; 2]>,
    /// Shift `j₀` by a constant so the discrete initial data are compatible.
    pub balance_j0: bool,
    /// Scale `a_ν` so that `∫a_L = ∫λ a_ν` holds for the discrete mollified forcing.
    pub balance_forcing: bool,
}

impl ProblemData {
    pub fn zero() -> Self {
        Self {
            f0: Arc::new(|_, _, _| 0.0),
            g0: [Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0)],
            j0: Arc::new(|_| 0.0),
            a_l: None,
            a_nu: None,
            balance_j0: false,
            balance_forcing: false,
        }
    }

    pub fn is_forced(&self) -> bool {
        self.a_l.is_some() || self.a_nu.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub n_modes: usize,
    pub vertical_modes: usize,
    pub grid: GridResolution,
    /// `None` selects four times the grid spacing.
    pub epsilon: Option<f64>,
    pub kernel: KernelKind,
    pub beta: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Time steps per Picard window.
    pub window_steps: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Smallest time step tried before giving up on a window.
    pub min_dt: f64,
    pub transport: TransportOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::rectangle(1.0, 1.0, 1.0),
            n_modes: 64,
            vertical_modes: 8,
            grid: GridResolution::Auto,
            epsilon: None,
            kernel: KernelKind::Bspline,
            beta: 0.0,
            dt: 0.05,
            t_final: 1.0,
            window_steps: 10,
            picard_tol: 1e-8,
            picard_max_iter: 40,
            min_dt: 1e-4,
            transport: TransportOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config {
                    key: key.into(),
                    message: format!("must be positive, got {v}"),
                })
            }
        };
        self.domain.validate()?;
        positive("time.dt", self.dt)?;
        positive("picard.tolerance", self.picard_tol)?;
        positive("time.min_dt", self.min_dt)?;
        if !(self.t_final >= 0.0) {
            return Err(Error::Config {
                key: "time.t_final".into(),
                message: format!("must be non-negative, got {}", self.t_final),
            });
        }
        if let Some(e) = self.epsilon {
            positive("mollifier.epsilon", e)?;
        }
        for (key, v) in [
            ("resolution.n_modes", self.n_modes),
            ("resolution.vertical_modes", self.vertical_modes),
            ("time.window_steps", self.window_steps),
            ("picard.max_iterations", self.picard_max_iter),
        ] {
            if v == 0 {
                return Err(Error::Config {
                    key: key.into(),
                    message: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }
}

/// A window of time nodes with the streams, transported fields and their spectral data.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub times: Vec<f64>,
    pub streams: Vec<StreamState>,
    /// `F(t_k)` per level on the padded grid.
    pub interior: Vec<Vec<Vec<f64>>>,
    /// `G(t_k)` on the bottom and top plates.
    pub plates: Vec<[Vec<f64>; 2]>,
    pub data: Vec<BoundaryTriple>,
    pub iterations: usize,
    /// `sup_k ‖P^{i+1}(t_k) − P^i(t_k)‖_ℍ` per iteration.
    pub history: Vec<f64>,
}

impl TrajectoryState {
    pub fn window(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("non-empty window"))
    }

    /// Last observed ratio of successive Picard differences.
    pub fn contraction_ratio(&self) -> f64 {
        match self.history.len() {
            0 | 1 => 0.0,
            n if self.history[n - 2] > 0.0 => self.history[n - 1] / self.history[n - 2],
            _ => 0.0,
        }
    }
}

/// Mollified forcing samples for a window: `[step][level][sample]`.
#[derive(Debug, Clone, Default)]
pub struct WindowForcing {
    pub interior: Option<Vec<Vec<[Vec<f64>; 5]>>>,
    pub plates: Option<Vec<[[Vec<f64>; 5]; 2]>>,
    /// `∫‖a_L‖_{L²} dt` and `∫‖a_ν‖_{L²} dt` over each step.
    pub step_norms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub f_l2: f64,
    pub g_l2: f64,
    pub circulation_deviation: f64,
    pub defect: f64,
    pub h_norm: f64,
    pub decay: f64,
    pub trace_bottom: f64,
    pub trace_mid: f64,
    pub trace_top: f64,
    /// Largest spread of Ψ over boundary samples at fixed height.
    pub trace_spread: f64,
    pub energy_ratio: f64,
    pub picard_iterations: usize,
    pub contraction_ratio: f64,
}

/// Outcome of a march.
#[derive(Debug, Clone)]
pub struct MarchSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub final_stream: StreamState,
    pub final_interior: Vec<Vec<f64>>,
    pub final_plates: [Vec<f64>; 2],
    pub windows: usize,
    pub max_iterations: usize,
}

/// All resources of one run: bases, grid, mollifier, elliptic factorization and data.
pub struct Simulation {
    pub config: RunConfig,
    pub disc: Arc<Discretization>,
    pub grid: Arc<TransportGrid>,
    pub mollifier: Mollifier,
    pub solver: EllipticSolver,
    pub data: ProblemData,
    pub j0: CirculationProfile,
    plate_scale: f64,
    initial_norm: f64,
}

fn level_l2(grid: &TransportGrid, disc: &Discretization, levels: &[Vec<f64>]) -> f64 {
    let w = grid.weights();
    levels
        .iter()
        .zip(disc.vertical.level_weights())
        .map(|(v, lw)| lw * v.iter().zip(&w).map(|(a, q)| q * a * a).sum::<f64>())
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

fn plates_l2(grid: &TransportGrid, g: &[Vec<f64>; 2]) -> f64 {
    grid.l2_norm(&g[0]).hypot(grid.l2_norm(&g[1]))
}

impl Simulation {
    pub fn new(config: RunConfig, data: ProblemData) -> Result<Self> {
        config.validate()?;
        let disc = build_basis(&config.domain, config.n_modes, config.vertical_modes, config.grid)?;
        // The spacing does not depend on the padding, so probe with none first.
        let spacing = TransportGrid::new(&disc, 0.0).spacing();
        let mut config = config;
        let floor = default_epsilon(spacing);
        let epsilon = match config.epsilon {
            Some(e) if e < floor => {
                log::warn!("mollifier.epsilon = {e} under-resolves the kernel on spacing {spacing}; using {floor}");
                config.epsilon = Some(floor);
                floor
            }
            Some(e) => e,
            None => floor,
        };
        let grid = Arc::new(TransportGrid::new(&disc, required_padding(epsilon)));
        let mollifier = Mollifier::new(&disc, &grid, MollifierSpec::new(epsilon, config.kernel)?)?;
        let solver = EllipticSolver::new(&disc)?;
        let mut sim = Self {
            j0: CirculationProfile::from_fn(&disc, |z| (data.j0)(z)),
            config,
            disc,
            grid,
            mollifier,
            solver,
            data,
            plate_scale: 1.0,
            initial_norm: 0.0,
        };
        sim.balance()?;
        Ok(sim)
    }

    fn balance(&mut self) -> Result<()> {
        if self.data.balance_forcing {
            if let (Some(_), Some(_)) = (&self.data.a_l, &self.data.a_nu) {
                let t = 0.5 * self.config.dt;
                let a = self.mollifier.to_field(&self.interior_forcing(t))?.integral();
                let b = self.mollifier.to_surface(&self.plate_forcing(t)).weighted_integral(&self.disc);
                if b != 0.0 {
                    self.plate_scale = a / b;
                }
            }
        }
        let (f, g) = self.initial_fields();
        let triple = self.triple(&f, &g)?;
        if self.data.balance_j0 {
            let c = compatibility_defect(&triple);
            let shift = -c * self.disc.horizontal.resolved_area();
            self.j0.values.iter_mut().for_each(|v| *v += shift);
        }
        self.initial_norm = level_l2(&self.grid, &self.disc, &f) + plates_l2(&self.grid, &g) + self.j0.l2_norm(&self.disc);
        let c = compatibility_defect(&self.triple(&f, &g)?);
        log::info!("compatibility defect of the initial data: {c:e}");
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.mollifier.spec().epsilon
    }

    /// Mollified `f₀` and `g₀` on the padded grid.
    pub fn initial_fields(&self) -> (Vec<Vec<f64>>, [Vec<f64>; 2]) {
        let f0 = self.data.f0.clone();
        let f = self.mollifier.mollify_data(&self.mollifier.extend_fn(move |x, y, z| f0(x, y, z)));
        let g = [0, 1].map(|p| {
            let gp = self.data.g0[p].clone();
            self.mollifier.mollify(&self.mollifier.extend_surface_fn(move |x, y| gp(x, y)))
        });
        (f, g)
    }

    fn interior_forcing(&self, t: f64) -> Vec<Vec<f64>> {
        match &self.data.a_l {
            Some(a) => {
                let a = a.clone();
                self.mollifier.mollify_data(&self.mollifier.extend_fn(move |x, y, z| a(t, x, y, z)))
            }
            None => vec![vec![0.0; self.grid.len()]; self.disc.level_count()],
        }
    }

    fn plate_forcing(&self, t: f64) -> [Vec<f64>; 2] {
        match &self.data.a_nu {
            Some(a) => [0, 1].map(|p| {
                let ap = a[p].clone();
                let s = self.plate_scale;
                self.mollifier.mollify(&self.mollifier.extend_surface_fn(move |x, y| s * ap(t, x, y)))
            }),
            None => [vec![0.0; self.grid.len()], vec![0.0; self.grid.len()]],
        }
    }

    /// Spectral triple `(F, G, j₀)` of grid fields.
    pub fn triple(&self, f: &[Vec<f64>], g: &[Vec<f64>; 2]) -> Result<BoundaryTriple> {
        Ok(BoundaryTriple {
            f: self.mollifier.to_field(f)?,
            g: self.mollifier.to_surface(g),
            j: self.j0.clone(),
        })
    }

    pub fn solve_at(&self, f: &[Vec<f64>], g: &[Vec<f64>; 2]) -> Result<(StreamState, BoundaryTriple)> {
        let triple = self.triple(f, g)?;
        let psi = self.solver.solve(&triple)?;
        Ok((psi, triple))
    }

    /// Mollified forcing at the five path-quadrature times of every step.
    pub fn forcing_window(&self, t0: f64, dt: f64, steps: usize) -> WindowForcing {
        if !self.data.is_forced() {
            return WindowForcing {
                step_norms: vec![(0.0, 0.0); steps],
                ..Default::default()
            };
        }
        let times: Vec<f64> = (0..=4 * steps).map(|i| t0 + dt * i as f64 / 4.0).collect();
        let interior: Vec<Vec<Vec<f64>>> = times.iter().map(|&t| self.interior_forcing(t)).collect();
        let plates: Vec<[Vec<f64>; 2]> = times.iter().map(|&t| self.plate_forcing(t)).collect();
        let simpson = |vals: &[f64]| dt / 12.0 * (vals[0] + 4.0 * vals[1] + 2.0 * vals[2] + 4.0 * vals[3] + vals[4]);
        let in_norms: Vec<f64> = interior.iter().map(|v| level_l2(&self.grid, &self.disc, v)).collect();
        let pl_norms: Vec<f64> = plates.iter().map(|g| plates_l2(&self.grid, g)).collect();
        let nl = self.disc.level_count();
        let mut out_interior = Vec::with_capacity(steps);
        let mut out_plates = Vec::with_capacity(steps);
        let mut step_norms = Vec::with_capacity(steps);
        for k in 0..steps {
            let base = 4 * k;
            out_interior.push(
                (0..nl)
                    .map(|l| std::array::from_fn(|s| interior[base + s][l].clone()))
                    .collect(),
            );
            out_plates.push([0, 1].map(|p| std::array::from_fn(|s| plates[base + s][p].clone())));
            step_norms.push((simpson(&in_norms[base..base + 5]), simpson(&pl_norms[base..base + 5])));
        }
        WindowForcing {
            interior: Some(out_interior),
            plates: Some(out_plates),
            step_norms,
        }
    }

    /// One application of the solution operator to a trajectory on its window.
    pub fn apply_s_epsilon(&self, p: &TrajectoryState, forcing: &WindowForcing) -> Result<TrajectoryState> {
        let velocities: Vec<Vec<GridVelocity>> = p.streams.iter().map(|s| self.mollifier.velocity(s)).collect();
        let nl = self.disc.level_count();
        let mut out = TrajectoryState {
            times: p.times.clone(),
            streams: vec![p.streams[0].clone()],
            interior: vec![p.interior[0].clone()],
            plates: vec![p.plates[0].clone()],
            data: vec![p.data[0].clone()],
            iterations: p.iterations,
            history: p.history.clone(),
        };
        for k in 1..p.times.len() {
            let (t0, t1) = (p.times[k - 1], p.times[k]);
            let (before, after) = (&velocities[k - 1], &velocities[k]);
            let f = advance_interior(
                &self.grid,
                &out.interior[k - 1],
                before,
                after,
                t0,
                t1,
                self.config.beta,
                forcing.interior.as_ref().map(|a| a[k - 1].as_slice()),
                &self.config.transport,
            )?;
            let g = advance_plates(
                &self.grid,
                &out.plates[k - 1],
                [&before[0], &before[nl - 1]],
                [&after[0], &after[nl - 1]],
                t0,
                t1,
                forcing.plates.as_ref().map(|a| &a[k - 1]),
                &self.config.transport,
            )?;
            let (psi, triple) = self.solve_at(&f, &g)?;
            out.streams.push(psi);
            out.interior.push(f);
            out.plates.push(g);
            out.data.push(triple);
        }
        Ok(out)
    }

    /// Iterate the solution operator from the constant-in-time solve at `t0` until the
    /// trajectory stops changing in ℍ.
    pub fn picard_fixed_point(
        &self,
        t0: f64,
        f0: &[Vec<f64>],
        g0: &[Vec<f64>; 2],
        dt: f64,
        steps: usize,
    ) -> Result<(TrajectoryState, WindowForcing)> {
        self.picard_from(t0, f0, g0, dt, steps, None)
    }

    /// As [`Self::picard_fixed_point`], with the first iterate extrapolated linearly from the
    /// last step `(Ψ_prev, Δt_prev)` of the previous window when it is given.
    fn picard_from(
        &self,
        t0: f64,
        f0: &[Vec<f64>],
        g0: &[Vec<f64>; 2],
        dt: f64,
        steps: usize,
        last_step: Option<(&StreamState, f64)>,
    ) -> Result<(TrajectoryState, WindowForcing)> {
        let forcing = self.forcing_window(t0, dt, steps);
        let (psi, triple) = self.solve_at(f0, g0)?;
        let nodes = steps + 1;
        let streams = match last_step {
            Some((prev, dt_prev)) if dt_prev > 0.0 => (0..nodes)
                .map(|k| if k == 0 { psi.clone() } else { psi.extrapolate(prev, k as f64 * dt / dt_prev) })
                .collect(),
            _ => vec![psi; nodes],
        };
        let mut p = TrajectoryState {
            times: (0..nodes).map(|k| t0 + dt * k as f64).collect(),
            streams,
            interior: vec![f0.to_vec(); nodes],
            plates: vec![g0.clone(); nodes],
            data: vec![triple; nodes],
            iterations: 0,
            history: Vec::new(),
        };
        for iter in 1..=self.config.picard_max_iter {
            let mut q = self.apply_s_epsilon(&p, &forcing)?;
            let diff = q
                .streams
                .iter()
                .zip(&p.streams)
                .map(|(a, b)| a.h_distance(b))
                .fold(0.0, f64::max);
            let scale = 1.0 + p.streams.iter().map(|s| s.h_norm()).fold(0.0, f64::max);
            q.history.push(diff);
            q.iterations = iter;
            log::debug!("window at t = {t0}: iteration {iter}, difference {diff:e}");
            if !diff.is_finite() {
                return Err(underflow(t0, "non-finite iterate", q.history));
            }
            if diff <= self.config.picard_tol * scale {
                return Ok((q, forcing));
            }
            let h = &q.history;
            if h.len() >= 3 && h[h.len() - 1] > h[h.len() - 2] && h[h.len() - 2] > h[h.len() - 3] {
                return Err(underflow(t0, "iteration is not contracting", q.history));
            }
            p = q;
        }
        Err(underflow(t0, "maximum iterations reached", p.history))
    }

    /// Diagnostics of one accepted time node.
    #[allow(clippy::too_many_arguments)]
    pub fn diagnostics_step(
        &self,
        time: f64,
        psi: &StreamState,
        triple: &BoundaryTriple,
        f: &[Vec<f64>],
        g: &[Vec<f64>; 2],
        forcing_norm: f64,
        iterations: usize,
        contraction: f64,
    ) -> DiagnosticsRecord {
        let h = self.disc.height();
        let h_norm = psi.h_norm();
        let denom = self.initial_norm + forcing_norm;
        DiagnosticsRecord {
            time,
            f_l2: level_l2(&self.grid, &self.disc, f),
            g_l2: plates_l2(&self.grid, g),
            circulation_deviation: psi.circulation_of().max_deviation(&self.j0),
            defect: compatibility_defect(triple),
            h_norm,
            decay: psi.decay_diagnostic(),
            trace_bottom: psi.lateral_trace_at(0.0),
            trace_mid: psi.lateral_trace_at(0.5 * h),
            trace_top: psi.lateral_trace_at(h),
            trace_spread: trace_spread(psi),
            energy_ratio: if denom > 0.0 { h_norm / denom } else { 0.0 },
            picard_iterations: iterations,
            contraction_ratio: contraction,
        }
    }

    /// Chain Picard windows up to `t_final`, halving windows that fail to contract.
    /// `sink` receives every accepted record with its stream state.
    pub fn march(
        &self,
        sink: &mut dyn FnMut(&DiagnosticsRecord, &StreamState) -> Result<()>,
    ) -> Result<MarchSummary> {
        let cfg = &self.config;
        let (mut f, mut g) = self.initial_fields();
        let (psi0, triple0) = self.solve_at(&f, &g)?;
        let rec = self.diagnostics_step(0.0, &psi0, &triple0, &f, &g, 0.0, 0, 0.0);
        sink(&rec, &psi0)?;
        let mut records = vec![rec];
        let mut last = psi0;
        let mut t = 0.0;
        let mut forcing_norm = 0.0;
        let mut windows = 0;
        let mut max_iterations = 0;
        let mut last_step: Option<(StreamState, f64)> = None;
        let end = cfg.t_final;
        while end - t > 1e-12 * end.max(1.0) {
            let remaining = end - t;
            let total = (remaining / cfg.dt - 1e-9).ceil().max(1.0) as usize;
            let mut steps = total.min(cfg.window_steps);
            let mut dt = remaining / total as f64;
            let (traj, forcing) = loop {
                let guess = last_step.as_ref().map(|(p, h)| (p, *h));
                match self.picard_from(t, &f, &g, dt, steps, guess) {
                    Ok(ok) => break ok,
                    Err(Error::WindowUnderflow { reason, history, .. }) => {
                        if steps > 1 {
                            steps /= 2;
                        } else if dt / 2.0 >= cfg.min_dt {
                            dt /= 2.0;
                        } else {
                            return Err(Error::WindowUnderflow { t0: t, reason, history });
                        }
                        log::warn!("window at t = {t} did not converge ({reason}); retrying with {steps} steps of {dt}");
                    }
                    Err(e) => return Err(e),
                }
            };
            windows += 1;
            max_iterations = max_iterations.max(traj.iterations);
            let ratio = traj.contraction_ratio();
            for k in 1..traj.times.len() {
                let (a, b) = forcing.step_norms[k - 1];
                forcing_norm += a + b;
                let rec = self.diagnostics_step(
                    traj.times[k],
                    &traj.streams[k],
                    &traj.data[k],
                    &traj.interior[k],
                    &traj.plates[k],
                    forcing_norm,
                    traj.iterations,
                    ratio,
                );
                sink(&rec, &traj.streams[k])?;
                records.push(rec);
            }
            t = *traj.times.last().expect("non-empty window");
            let n = traj.times.len() - 1;
            last_step = Some((traj.streams[n - 1].clone(), traj.times[n] - traj.times[n - 1]));
            last = traj.streams[n].clone();
            f = traj.interior[n].clone();
            g = traj.plates[n].clone();
        }
        Ok(MarchSummary {
            records,
            final_stream: last,
            final_interior: f,
            final_plates: g,
            windows,
            max_iterations,
        })
    }
}

fn underflow(t0: f64, reason: &str, history: Vec<f64>) -> Error {
    Error::WindowUnderflow {
        t0,
        reason: reason.into(),
        history,
    }
}

/// Largest spread of Ψ over boundary samples at three heights.
pub fn trace_spread(psi: &StreamState) -> f64 {
    let disc = psi.disc();
    let h = disc.height();
    let samples = disc.horizontal.boundary_samples(16);
    [0.0, 0.5 * h, h]
        .iter()
        .map(|&z| {
            let vals: Vec<f64> = samples.iter().map(|&((x, y), _)| psi.eval_point(x, y, z)).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Plate data as spectral coefficients, for callers that start from a series.
pub fn surface_from_fns(disc: &Discretization, g: &[PlateFn; 2]) -> SurfaceFieldPair {
    SurfaceFieldPair::from_fn(disc, |x, y| g[0](x, y), |x, y| g[1](x, y))
}

/// Write diagnostics as CSV with a header row.
pub fn write_diagnostics<W: std::io::Write>(out: W, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig {
            n_modes: 16,
            vertical_modes: 4,
            dt: 0.1,
            t_final: 0.2,
            window_steps: 2,
            ..Default::default()
        }
    }

    #[test]
    fn zero_data_converges_immediately_to_zero() {
        let sim = Simulation::new(small(), ProblemData::zero()).unwrap();
        let (f, g) = sim.initial_fields();
        let (traj, _) = sim.picard_fixed_point(0.0, &f, &g, 0.1, 2).unwrap();
        assert_eq!(traj.iterations, 1);
        assert!(traj.streams.iter().all(|s| s.h_norm() == 0.0));
        let summary = sim.march(&mut |_, _| Ok(())).unwrap();
        let r = summary.records.last().unwrap();
        assert_eq!((r.f_l2, r.g_l2, r.h_norm, r.defect), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_final_time_is_the_initial_solve() {
        let mut cfg = small();
        cfg.t_final = 0.0;
        let mut data = ProblemData::zero();
        data.f0 = Arc::new(|x, y, _| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin());
        let sim = Simulation::new(cfg, data).unwrap();
        let summary = sim.march(&mut |_, _| Ok(())).unwrap();
        assert_eq!(summary.records.len(), 1);
        assert_eq!(summary.windows, 0);
    }

    #[test]
    fn invalid_config_names_the_key() {
        let mut cfg = small();
        cfg.dt = -1.0;
        match Simulation::new(cfg, ProblemData::zero()) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "time.dt"),
            other => panic!("unexpected {:?}", other.err()),
        }
    }
}
