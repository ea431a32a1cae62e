//! Run configuration: flat TOML sections with documented defaults.
//!
//! Every key may be overridden from the environment as `QGCYL_<SECTION>__<KEY>`,
//! e.g. `QGCYL_TIME__DT=0.02`. Values are parsed as TOML, falling back to a string.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, GridResolution, LambdaProfile, Shape};
use crate::mollify::KernelKind;
use crate::solver::RunConfig;
use crate::transport::TransportOptions;

pub const ENV_PREFIX: &str = "QGCYL_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    /// `rectangle` or `disk`.
    pub shape: String,
    pub lx: f64,
    pub ly: f64,
    pub radius: f64,
    pub height: f64,
    /// `constant` or `sinusoid`.
    pub lambda: String,
    pub lambda_value: f64,
    pub lambda_mean: f64,
    pub lambda_amplitude: f64,
    pub lambda_wavenumber: f64,
    pub lambda_bound: f64,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            shape: "rectangle".into(),
            lx: 1.0,
            ly: 1.0,
            radius: 1.0,
            height: 1.0,
            lambda: "constant".into(),
            lambda_value: 1.0,
            lambda_mean: 1.0,
            lambda_amplitude: 0.0,
            lambda_wavenumber: 1.0,
            lambda_bound: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolutionSection {
    pub n_modes: usize,
    pub vertical_modes: usize,
    /// `auto`, `cartesian` or `polar`.
    pub grid: String,
    pub nx: usize,
    pub ny: usize,
    pub nr: usize,
    pub ntheta: usize,
}

impl Default for ResolutionSection {
    fn default() -> Self {
        Self {
            n_modes: 64,
            vertical_modes: 8,
            grid: "auto".into(),
            nx: 32,
            ny: 32,
            nr: 24,
            ntheta: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MollifierSection {
    /// Kernel scale; absent selects four grid spacings.
    pub epsilon: Option<f64>,
    pub kernel: KernelKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_final: f64,
    pub window_steps: usize,
    pub min_dt: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_final: 1.0,
            window_steps: 10,
            min_dt: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSection {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSection {
    pub substeps: usize,
    pub monotone: bool,
}

impl Default for TransportSection {
    fn default() -> Self {
        Self {
            substeps: 1,
            monotone: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub name: String,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            name: "generic".into(),
            amplitude: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqgSection {
    pub dt: f64,
    pub t_final: f64,
    /// Keep every k-th state for the circulation record.
    pub record_every: usize,
    /// Heights as fractions of `h`.
    pub heights: Vec<f64>,
    /// Amplitudes of the two lowest modes with nonzero mean.
    pub amplitudes: Vec<f64>,
}

impl Default for SqgSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 1.0,
            record_every: 1,
            heights: vec![0.0, 0.5, 1.0],
            amplitudes: vec![1.0, 0.8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    /// Grid intervals per side (rectangle) or rings (disk), coarse to fine.
    pub levels: Vec<usize>,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            levels: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Write a stream snapshot every k accepted steps; 0 writes only the last.
    pub snapshot_every: usize,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            snapshot_every: 0,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolerancesSection {
    pub elliptic_recovery: f64,
    pub circulation: f64,
    pub norm_drift_per_unit_time: f64,
    pub drift_order: f64,
    pub compatibility_defect: f64,
    pub energy_constant_spread: f64,
    pub steady_drift: f64,
    pub sqg_min_relative_drift: f64,
    pub sqg_norm_drift_per_unit_time: f64,
    pub departure_point: f64,
    pub lateral_trace: f64,
}

impl Default for TolerancesSection {
    fn default() -> Self {
        Self {
            elliptic_recovery: 1e-10,
            circulation: 1e-6,
            norm_drift_per_unit_time: 1e-3,
            drift_order: 2.0,
            compatibility_defect: 1e-6,
            energy_constant_spread: 0.1,
            steady_drift: 1e-6,
            sqg_min_relative_drift: 1e-3,
            sqg_norm_drift_per_unit_time: 1e-3,
            departure_point: 1e-8,
            lateral_trace: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub domain: DomainSection,
    pub resolution: ResolutionSection,
    pub mollifier: MollifierSection,
    pub time: TimeSection,
    pub picard: PicardSection,
    pub transport: TransportSection,
    pub physics: PhysicsSection,
    pub scenario: ScenarioSection,
    pub sqg: SqgSection,
    pub convergence: ConvergenceSection,
    pub output: OutputSection,
    pub tolerances: TolerancesSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(text: &str, e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    match e.span() {
        Some(span) => Error::ConfigParse(format!("line {}: {msg}", line_of(text, span.start))),
        None => Error::ConfigParse(msg),
    }
}

fn env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl Config {
    /// Parse TOML text, apply `QGCYL_*` overrides from `env`, and validate.
    pub fn from_str_with_env<I>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        // Typed pass first so unknown keys and bad values are reported with their line.
        toml::from_str::<Config>(text).map_err(|e| parse_error(text, e))?;
        let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, e))?;
        for (name, raw) in env {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let Some((section, key)) = rest.split_once("__") else {
                continue;
            };
            let (section, key) = (section.to_lowercase(), key.to_lowercase());
            let entry = table
                .entry(section.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(key, env_value(&raw));
                }
                _ => {
                    return Err(Error::Config {
                        key: section,
                        message: "is not a section".into(),
                    })
                }
            }
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        Self::from_str_with_env(text, std::iter::empty())
    }

    /// Read a config file, applying overrides from the process environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "--config".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_str_with_env(&text, std::env::vars())
    }

    /// The default configuration as TOML.
    pub fn defaults_toml() -> String {
        toml::to_string(&Config::default()).unwrap_or_default()
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        let d = &self.domain;
        let shape = match d.shape.as_str() {
            "rectangle" => Shape::Rectangle { lx: d.lx, ly: d.ly },
            "disk" => Shape::Disk { radius: d.radius },
            other => return Err(bad("domain.shape", format!("expected rectangle or disk, got {other:?}"))),
        };
        let lambda = match d.lambda.as_str() {
            "constant" => LambdaProfile::Constant { value: d.lambda_value },
            "sinusoid" => LambdaProfile::Sinusoid {
                mean: d.lambda_mean,
                amplitude: d.lambda_amplitude,
                wavenumber: d.lambda_wavenumber,
            },
            other => return Err(bad("domain.lambda", format!("expected constant or sinusoid, got {other:?}"))),
        };
        Ok(DomainSpec {
            shape,
            height: d.height,
            lambda,
            lambda_bound: d.lambda_bound,
        })
    }

    pub fn grid(&self) -> Result<GridResolution> {
        let r = &self.resolution;
        match r.grid.as_str() {
            "auto" => Ok(GridResolution::Auto),
            "cartesian" => Ok(GridResolution::Cartesian { nx: r.nx, ny: r.ny }),
            "polar" => Ok(GridResolution::Polar {
                nr: r.nr,
                ntheta: r.ntheta,
            }),
            other => Err(bad("resolution.grid", format!("expected auto, cartesian or polar, got {other:?}"))),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            domain: self.domain_spec()?,
            n_modes: self.resolution.n_modes,
            vertical_modes: self.resolution.vertical_modes,
            grid: self.grid()?,
            epsilon: self.mollifier.epsilon,
            kernel: self.mollifier.kernel,
            beta: self.physics.beta,
            dt: self.time.dt,
            t_final: self.time.t_final,
            window_steps: self.time.window_steps,
            picard_tol: self.picard.tolerance,
            picard_max_iter: self.picard.max_iterations,
            min_dt: self.time.min_dt,
            transport: TransportOptions {
                substeps: self.transport.substeps,
                monotone: self.transport.monotone,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        let mut positive = vec![("domain.height", d.height), ("domain.lambda_bound", d.lambda_bound)];
        match d.shape.as_str() {
            "disk" => positive.push(("domain.radius", d.radius)),
            _ => positive.extend([("domain.lx", d.lx), ("domain.ly", d.ly)]),
        }
        positive.extend([
            ("sqg.dt", self.sqg.dt),
            ("scenario.amplitude", self.scenario.amplitude.abs().max(f64::MIN_POSITIVE)),
        ]);
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(key, format!("must be positive, got {v}")));
            }
        }
        if !(self.sqg.t_final >= 0.0) {
            return Err(bad("sqg.t_final", format!("must be non-negative, got {}", self.sqg.t_final)));
        }
        if self.sqg.heights.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(bad("sqg.heights", "fractions of the height must lie in [0, 1]".into()));
        }
        if self.sqg.amplitudes.len() != 2 {
            return Err(bad("sqg.amplitudes", "expected two amplitudes".into()));
        }
        if self.convergence.levels.len() < 3 {
            return Err(bad("convergence.levels", "need at least three resolutions".into()));
        }
        let run = self.run_config()?;
        run.domain.validate().map_err(|e| match e {
            Error::InvalidDomain(msg) => bad(&format!("domain.{}", msg.split_whitespace().next().unwrap_or("shape")), msg),
            Error::Ellipticity { .. } => bad("domain.lambda", e.to_string()),
            other => other,
        })?;
        run.validate()
    }
}

fn bad(key: &str, message: String) -> Error {
    Error::Config {
        key: key.to_string(),
        message,
    }
}
