//! Built-in scenarios: closed-form initial data and forcing for the commands and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::StreamState;
use crate::geometry::{Discretization, DomainSpec, Shape};
use crate::solver::ProblemData;

/// A diagnostic a scenario promises, with its tolerance.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Expectation {
    pub diagnostic: &'static str,
    pub tolerance: f64,
    /// How the expected value is known.
    pub source: &'static str,
}

#[derive(Clone)]
pub struct ScenarioSpec {
    pub name: &'static str,
    pub description: &'static str,
    pub data: ProblemData,
    pub expected: Vec<Expectation>,
}

pub const NAMES: &[&str] = &[
    "zero", "generic", "steady-disk", "bump", "forced-bump", "plates", "random",
];

/// `exp(1 − 1/(1 − s²))` for `s < 1`, peak value 1.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Two smooth horizontal shapes vanishing on ∂Ω and one plate shape.
fn shapes(shape: Shape) -> [Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>; 3] {
    match shape {
        Shape::Rectangle { lx, ly } => [
            Arc::new(move |x, y| (PI * x / lx).sin() * (PI * y / ly).sin()),
            Arc::new(move |x, y| (2.0 * PI * x / lx).sin() * (PI * y / ly).sin()),
            Arc::new(move |x, y| (PI * x / lx).sin() * (2.0 * PI * y / ly).sin()),
        ],
        Shape::Disk { radius } => [
            Arc::new(move |x, y| 1.0 - (x * x + y * y) / (radius * radius)),
            Arc::new(move |x, y| x / radius * (1.0 - (x * x + y * y) / (radius * radius))),
            Arc::new(move |x, y| x * y / (radius * radius) * (1.0 - (x * x + y * y) / (radius * radius))),
        ],
    }
}

/// Horizontal centre and size used to place interior bumps.
fn frame(shape: Shape) -> ((f64, f64), f64) {
    match shape {
        Shape::Rectangle { lx, ly } => ((0.5 * lx, 0.5 * ly), lx.min(ly)),
        Shape::Disk { radius } => ((0.0, 0.0), 2.0 * radius),
    }
}

/// Look up a scenario by name for a domain, data amplitude and seed.
pub fn scenario(name: &str, domain: &DomainSpec, amplitude: f64, seed: u64) -> Result<ScenarioSpec> {
    let h = domain.height;
    let a = amplitude;
    let [s1, s2, s3] = shapes(domain.shape);
    let ((cx, cy), size) = frame(domain.shape);
    let mut data = ProblemData::zero();
    let (description, expected) = match name {
        "zero" => (
            "all data zero; every diagnostic stays zero",
            vec![Expectation {
                diagnostic: "h_norm",
                tolerance: 0.0,
                source: "trivial",
            }],
        ),
        "generic" => {
            data.f0 = Arc::new(move |x, y, z| a * (s1(x, y) + 0.7 * s2(x, y) * (1.0 + z / h)));
            data.g0 = [Arc::new(move |x, y| 0.3 * a * s3(x, y)), Arc::new(|_, _| 0.0)];
            data.j0 = Arc::new(move |z| 1.0 + z / h);
            data.balance_j0 = true;
            (
                "two smooth modes with a z-dependent mix and bottom plate data",
                vec![
                    Expectation {
                        diagnostic: "circulation_deviation",
                        tolerance: 1e-6,
                        source: "circulation is imposed data",
                    },
                    Expectation {
                        diagnostic: "f_l2 drift per unit time",
                        tolerance: 1e-3,
                        source: "transport preserves norms",
                    },
                ],
            )
        }
        "steady-disk" => {
            let Shape::Disk { radius } = domain.shape else {
                return Err(Error::Config {
                    key: "scenario.name".into(),
                    message: "steady-disk needs a disk domain".into(),
                });
            };
            let r2 = move |x: f64, y: f64| (x * x + y * y) / (radius * radius);
            data.f0 = Arc::new(move |x, y, z| a * (1.0 - r2(x, y)).powi(2) * (1.0 + 0.5 * z / h));
            data.g0 = [
                Arc::new(move |x, y| 0.2 * a * (1.0 - r2(x, y))),
                Arc::new(move |x, y| -0.1 * a * (1.0 - r2(x, y))),
            ];
            data.j0 = Arc::new(|_| 0.0);
            data.balance_j0 = true;
            (
                "radially symmetric data; the flow is tangent to the level sets",
                vec![Expectation {
                    diagnostic: "stream drift",
                    tolerance: 1e-6,
                    source: "rotational symmetry",
                }],
            )
        }
        "bump" | "forced-bump" => {
            let rad = 0.22 * size;
            let c1 = (cx - 0.12 * size, cy - 0.05 * size);
            let c2 = (cx + 0.12 * size, cy + 0.08 * size);
            let zb = move |z: f64| bump((z - 0.5 * h) / (0.35 * h));
            let b = move |x: f64, y: f64, c: (f64, f64)| bump((x - c.0).hypot(y - c.1) / rad);
            data.f0 = Arc::new(move |x, y, z| a * (b(x, y, c1) - 0.6 * b(x, y, c2)) * zb(z));
            data.g0 = [
                Arc::new(move |x, y| 0.5 * a * b(x, y, c2)),
                Arc::new(move |x, y| -0.3 * a * b(x, y, c1)),
            ];
            data.j0 = Arc::new(|_| 0.0);
            data.balance_j0 = true;
            if name == "forced-bump" {
                let s = |t: f64| 1.0 + 0.5 * (2.0 * PI * t).sin();
                data.a_l = Some(Arc::new(move |t, x, y, z| 0.5 * a * s(t) * b(x, y, c2) * zb(z)));
                data.a_nu = Some([Arc::new(move |t, x, y| s(t) * b(x, y, c1)), Arc::new(|_, _, _| 0.0)]);
                data.balance_forcing = true;
            }
            (
                "compactly supported interior bumps, optionally with compatible forcing",
                vec![Expectation {
                    diagnostic: "defect",
                    tolerance: 1e-6,
                    source: "compatibility is preserved",
                }],
            )
        }
        "plates" => {
            data.g0 = [Arc::new(move |x, y| a * s1(x, y)), Arc::new(move |x, y| 0.5 * a * s3(x, y))];
            data.j0 = Arc::new(|_| 0.0);
            data.balance_j0 = true;
            ("plate data only", Vec::new())
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let (p, q, r) = (s1.clone(), s2.clone(), s3.clone());
            data.f0 = Arc::new(move |x, y, z| {
                let zz = z / h;
                a * (p(x, y) * (c[0] + c[1] * zz) + q(x, y) * (c[2] + c[3] * zz * zz) + r(x, y) * c[4])
            });
            let (c5, c6, c7) = (c[5], c[6], c[7]);
            data.g0 = [
                Arc::new(move |x, y| a * c5 * s1(x, y)),
                Arc::new(move |x, y| a * c6 * s2(x, y)),
            ];
            data.j0 = Arc::new(move |z| c7 * (1.0 + z / h));
            data.balance_j0 = true;
            ("random smooth data drawn from the seed", Vec::new())
        }
        other => {
            return Err(Error::Config {
                key: "scenario.name".into(),
                message: format!("unknown scenario {other:?}; known: {}", NAMES.join(", ")),
            })
        }
    };
    let name = NAMES.iter().find(|n| **n == name).copied().unwrap_or("custom");
    Ok(ScenarioSpec {
        name,
        description,
        data,
        expected,
    })
}

/// A mean-zero stream in the Galerkin span with coefficients decaying in both indices,
/// with no pure-z part so that its plate traces are representable.
pub fn random_stream(disc: &Arc<Discretization>, seed: u64) -> StreamState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = StreamState::zeros(disc);
    for n in 0..disc.n_modes() {
        let decay = 1.0 / (1.0 + n as f64);
        for (m, c) in s.mode_mut(n).iter_mut().enumerate() {
            *c = decay * rng.gen_range(-1.0..1.0) / (1.0 + m as f64).powi(2);
        }
    }
    s.normalize_mean();
    s
}
