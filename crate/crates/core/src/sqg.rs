//! Spectral surface quasi-geostrophic model on Ω and the circulation of its harmonic extension.
//!
//! `θ = Σ a_n e_n`, surface stream `ψ = Σ a_n λ_n^{−1/2} e_n`, `∂t θ + ∇̄⊥ψ·∇̄θ = 0`.
//! The extension `Ψ(z) = Σ a_n λ_n^{−1/2} e^{−z√λ_n} e_n` has circulation
//! `−Σ √λ_n μ_n a_n e^{−z√λ_n}`, which the nonlinear flux generally does not conserve.

use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{CirculationProfile, StreamState, SurfaceFieldPair};
use crate::geometry::Discretization;
use crate::solver::ProblemData;

#[derive(Debug, Clone, PartialEq)]
pub struct SqgState {
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl SqgState {
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.is_finite()) && self.time.is_finite()
    }
}

pub struct SqgModel {
    disc: Arc<Discretization>,
    inv_sqrt: Vec<f64>,
    /// Modes kept by the two-thirds rule on eigenvalues.
    keep: Vec<bool>,
}

impl SqgModel {
    pub fn new(disc: &Arc<Discretization>) -> Self {
        let lam = disc.horizontal.eigenvalues();
        let lmax = lam.iter().copied().fold(0.0, f64::max);
        let cut = (2.0f64 / 3.0).powi(2) * lmax;
        Self {
            disc: disc.clone(),
            inv_sqrt: lam.iter().map(|l| 1.0 / l.sqrt()).collect(),
            keep: lam.iter().map(|&l| l <= cut).collect(),
        }
    }

    pub fn disc(&self) -> &Arc<Discretization> {
        &self.disc
    }

    /// Coefficients of the surface stream `(−Δ̄)^{−1/2}θ`.
    pub fn stream_coefficients(&self, a: &[f64]) -> Vec<f64> {
        a.iter().zip(&self.inv_sqrt).map(|(a, s)| a * s).collect()
    }

    /// `da/dt = −Π(∇̄⊥ψ·∇̄θ)`, products formed on the quadrature grid.
    pub fn tendency(&self, a: &[f64]) -> Vec<f64> {
        let h = &self.disc.horizontal;
        let (tx, ty) = h.gradient_to_grid(a);
        let (px, py) = h.gradient_to_grid(&self.stream_coefficients(a));
        let adv: Vec<f64> = (0..tx.len())
            .into_par_iter()
            .map(|i| -py[i] * tx[i] + px[i] * ty[i])
            .collect();
        let mut out = h.to_spectral(&adv);
        for (o, k) in out.iter_mut().zip(&self.keep) {
            *o = if *k { -*o } else { 0.0 };
        }
        out
    }

    /// Classical RK4 step followed by the two-thirds truncation.
    pub fn step(&self, s: &SqgState, dt: f64) -> Result<SqgState> {
        let a = &s.coeffs;
        let axpy = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + c * k).collect() };
        let k1 = self.tendency(a);
        let k2 = self.tendency(&axpy(a, &k1, 0.5 * dt));
        let k3 = self.tendency(&axpy(a, &k2, 0.5 * dt));
        let k4 = self.tendency(&axpy(a, &k3, dt));
        let mut coeffs: Vec<f64> = (0..a.len())
            .map(|i| a[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        for (c, k) in coeffs.iter_mut().zip(&self.keep) {
            if !k {
                *c = 0.0;
            }
        }
        let next = SqgState {
            coeffs,
            time: s.time + dt,
        };
        let (before, after) = (s.l2_norm(), next.l2_norm());
        if !next.is_finite() || after > 10.0 * before.max(f64::MIN_POSITIVE) {
            return Err(Error::Instability { before, after });
        }
        Ok(next)
    }

    /// `−Σ √λ_n μ_n a_n e^{−z√λ_n}`.
    pub fn circulation(&self, a: &[f64], z: f64) -> f64 {
        let lam = self.disc.horizontal.eigenvalues();
        let mu = self.disc.horizontal.means();
        -(0..a.len())
            .map(|n| lam[n].sqrt() * mu[n] * a[n] * (-z * lam[n].sqrt()).exp())
            .sum::<f64>()
    }

    /// `Σ a'_n e^{−z√λ_n} √λ_n μ_n`; it vanishes for all z exactly when the circulation is steady.
    pub fn obstruction(&self, a_dot: &[f64], z: f64) -> f64 {
        -self.circulation(a_dot, z)
    }

    /// The harmonic extension as a stream state on `[0, h]` (`λ ≡ 1`), mean not normalized.
    pub fn extension(&self, a: &[f64]) -> StreamState {
        let disc = &self.disc;
        let lam = disc.horizontal.eigenvalues();
        let mut s = StreamState::zeros(disc);
        for (n, &an) in a.iter().enumerate() {
            if an == 0.0 {
                continue;
            }
            let k = lam[n].sqrt();
            let vals: Vec<f64> = disc.levels().iter().map(|&z| an / k * (-z * k).exp()).collect();
            let modal = disc.vertical.levels_to_modal(&vals);
            s.mode_mut(n).copy_from_slice(&modal);
        }
        s
    }

    /// Plate data `(θ, −Σ a_n e^{−h√λ_n} e_n)` and circulation of the extension, for a matched QG run.
    pub fn matched_qg_data(&self, a: &[f64]) -> (SurfaceFieldPair, CirculationProfile) {
        let disc = &self.disc;
        let h = disc.height();
        let lam = disc.horizontal.eigenvalues();
        let top = a.iter().zip(lam).map(|(a, l)| -a * (-h * l.sqrt()).exp()).collect();
        let j = CirculationProfile {
            values: disc.levels().iter().map(|&z| self.circulation(a, z)).collect(),
        };
        (
            SurfaceFieldPair {
                bottom: a.to_vec(),
                top,
            },
            j,
        )
    }
}

/// Two lowest modes with nonzero mean and distinct eigenvalues, scaled by `amplitudes`.
pub fn two_mode_datum(disc: &Discretization, amplitudes: [f64; 2]) -> Result<Vec<f64>> {
    let lam = disc.horizontal.eigenvalues();
    let mu = disc.horizontal.means();
    let floor = 1e-12 * disc.horizontal.area().sqrt();
    let first = (0..lam.len()).find(|&n| mu[n].abs() > floor);
    let second = first.and_then(|i| {
        (i + 1..lam.len()).find(|&n| mu[n].abs() > floor && (lam[n] - lam[i]).abs() > 1e-9 * lam[i])
    });
    match (first, second) {
        (Some(i), Some(k)) => {
            let mut a = vec![0.0; lam.len()];
            a[i] = amplitudes[0];
            a[k] = amplitudes[1];
            Ok(a)
        }
        _ => Err(Error::Config {
            key: "resolution.n_modes".into(),
            message: "the basis holds fewer than two modes with nonzero mean".into(),
        }),
    }
}

impl SqgModel {
    /// Closed-form QG data matching the harmonic extension of `θ = Σ a_n e_n` at `t = 0`:
    /// no interior source, its plate fluxes and its circulation.
    pub fn matched_problem(&self, a: &[f64]) -> ProblemData {
        let disc = self.disc.clone();
        let (pair, _) = self.matched_qg_data(a);
        let lam = disc.horizontal.eigenvalues().to_vec();
        let mu = disc.horizontal.means().to_vec();
        let coeffs = a.to_vec();
        let mut data = ProblemData::zero();
        let (d0, d1) = (disc.clone(), disc);
        data.g0 = [
            Arc::new(move |x, y| d0.horizontal.eval_point(&pair.bottom, x, y)),
            Arc::new(move |x, y| d1.horizontal.eval_point(&pair.top, x, y)),
        ];
        data.j0 = Arc::new(move |z| {
            -(0..coeffs.len())
                .map(|n| lam[n].sqrt() * mu[n] * coeffs[n] * (-z * lam[n].sqrt()).exp())
                .sum::<f64>()
        });
        data
    }
}

/// Integrate from `initial` to `t_final` with step `dt`, keeping every `every`-th state.
pub fn run(model: &SqgModel, initial: &SqgState, dt: f64, t_final: f64, every: usize) -> Result<Vec<SqgState>> {
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let every = every.max(1);
    let mut out = vec![initial.clone()];
    let mut s = initial.clone();
    for k in 1..=steps {
        let h = (t_final - s.time).min(dt);
        s = model.step(&s, h)?;
        if k % every == 0 || k == steps {
            out.push(s.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SqgRecord {
    pub time: f64,
    pub circulation: Vec<f64>,
    /// `circulation(t) − circulation(0)` per height.
    pub drift: Vec<f64>,
    pub obstruction: Vec<f64>,
}

/// Circulation of the harmonic extension at `heights` along a trajectory, with its drift and
/// the obstruction functional from centered differences (one-sided at the ends).
pub fn harmonic_extension_circulation(model: &SqgModel, states: &[SqgState], heights: &[f64]) -> Vec<SqgRecord> {
    let n = states.len();
    let initial: Vec<f64> = heights.iter().map(|&z| model.circulation(&states[0].coeffs, z)).collect();
    (0..n)
        .map(|k| {
            let circulation: Vec<f64> = heights.iter().map(|&z| model.circulation(&states[k].coeffs, z)).collect();
            let drift = circulation.iter().zip(&initial).map(|(c, i)| c - i).collect();
            let obstruction = if n < 2 {
                vec![0.0; heights.len()]
            } else {
                let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
                let span = states[hi].time - states[lo].time;
                let a_dot: Vec<f64> = states[hi]
                    .coeffs
                    .iter()
                    .zip(&states[lo].coeffs)
                    .map(|(b, a)| (b - a) / span)
                    .collect();
                heights.iter().map(|&z| model.obstruction(&a_dot, z)).collect()
            };
            SqgRecord {
                time: states[k].time,
                circulation,
                drift,
                obstruction,
            }
        })
        .collect()
}

/// Diagnostics text: time, drift per height, obstruction per height.
pub fn write_records<W: std::io::Write>(out: W, heights: &[f64], records: &[SqgRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend(heights.iter().map(|z| format!("drift_z{z}")));
    header.extend(heights.iter().map(|z| format!("obstruction_z{z}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.time.to_string()];
        row.extend(r.drift.iter().map(|v| v.to_string()));
        row.extend(r.obstruction.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_basis, DomainSpec, GridResolution};

    fn model() -> SqgModel {
        let disc = build_basis(&DomainSpec::rectangle(1.0, 1.0, 1.0), 40, 8, GridResolution::Auto).unwrap();
        SqgModel::new(&disc)
    }

    #[test]
    fn single_mode_is_steady() {
        let m = model();
        let mut a = vec![0.0; 40];
        a[0] = 1.3;
        let t = m.tendency(&a);
        assert!(t.iter().all(|v| v.abs() < 1e-12));
        let zero = SqgState { coeffs: vec![0.0; 40], time: 0.0 };
        assert_eq!(m.step(&zero, 0.1).unwrap().coeffs, zero.coeffs);
    }

    #[test]
    fn extension_circulation_matches_series() {
        let m = model();
        let mut a = vec![0.0; 40];
        a[0] = 1.0;
        a[3] = -0.4;
        let ext = m.extension(&a);
        let c = ext.circulation_of();
        for (l, &z) in m.disc().levels().iter().enumerate() {
            assert!((c.values[l] - m.circulation(&a, z)).abs() < 1e-12);
        }
    }
}
