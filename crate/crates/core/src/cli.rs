//! Command-line front end: configuration, dispatch and the output layout.
//!
//! Every command writes into the output directory:
//! `summary.json` on success, `failure.json` on error, plus its own tables
//! (`elliptic.csv`, `diagnostics.csv`, `drift.csv`, `sqg.csv`, `qg_diagnostics.csv`,
//! `convergence.csv`) and snapshots under `snapshots/`.

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{Config, ENV_PREFIX};
use crate::elliptic::{compatibility_defect, stability_ratio, EllipticSolver};
use crate::error::{Error, Result};
use crate::fields::snapshot::Snapshot;
use crate::fields::StreamState;
use crate::geometry::{build_basis, GridResolution, Shape};
use crate::scenario::{random_stream, scenario};
use crate::solver::{trace_spread, DiagnosticsRecord, MarchSummary, RunConfig, Simulation};
use crate::sqg::{self, harmonic_extension_circulation, SqgModel, SqgState};

#[derive(Parser, Debug)]
#[command(name = "qgcyl", version, about = "Quasi-geostrophic flow on a bounded cylinder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads, 0 for all cores (overrides output.threads).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Scenario seed (overrides scenario.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Stream snapshot cadence in accepted steps (overrides output.snapshot_every).
    #[arg(long, global = true)]
    pub snapshot_every: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Solve the elliptic problem once; `manufactured` reports the recovery error.
    SolveElliptic,
    /// March the scenario to `time.t_final`.
    Evolve,
    /// Spectral SQG run against the matched QG run.
    SqgCompare,
    /// Norm drift of the scenario at each `convergence.levels` grid, with observed orders.
    ConvergenceStudy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveElliptic => "solve-elliptic",
            Command::Evolve => "evolve",
            Command::SqgCompare => "sqg-compare",
            Command::ConvergenceStudy => "convergence-study",
        }
    }
}

fn help_footer() -> String {
    format!(
        "Configuration keys and their defaults. Any key can be overridden with \
         {ENV_PREFIX}<SECTION>__<KEY>, e.g. {ENV_PREFIX}TIME__DT=0.02.\n\n{}",
        Config::defaults_toml()
    )
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().after_long_help(help_footer()).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let fallback = cli.out.clone().unwrap_or_else(|| PathBuf::from(Config::default().output.dir));
    let (out, result) = match resolve_config(&cli) {
        Ok(cfg) => {
            let out = PathBuf::from(&cfg.output.dir);
            let r = run_with_threads(cli.command, &cfg, &out);
            (out, r)
        }
        Err(e) => (fallback, Err(e)),
    };
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("qgcyl {}: {e}", cli.command.name());
            if let Err(w) = write_failure(&out, cli.command, &e) {
                eprintln!("could not write failure record: {w}");
            }
            1
        }
    }
}

/// Load the config file (or defaults) with environment overrides, then apply flags.
pub fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::from_str_with_env("", std::env::vars())?,
    };
    if let Some(o) = &cli.out {
        cfg.output.dir = o.display().to_string();
    }
    if let Some(t) = cli.threads {
        cfg.output.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.scenario.seed = s;
    }
    if let Some(k) = cli.snapshot_every {
        cfg.output.snapshot_every = k;
    }
    Ok(cfg)
}

fn run_with_threads(command: Command, cfg: &Config, out: &Path) -> Result<Value> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.threads)
        .build()
        .map_err(|e| Error::Config {
            key: "output.threads".into(),
            message: e.to_string(),
        })?;
    pool.install(|| run(command, cfg, out))
}

/// Run one command and write `summary.json`; the summary is also returned.
pub fn run(command: Command, cfg: &Config, out: &Path) -> Result<Value> {
    fs::create_dir_all(out)?;
    let results = match command {
        Command::SolveElliptic => solve_elliptic(cfg, out)?,
        Command::Evolve => evolve(cfg, out)?,
        Command::SqgCompare => sqg_compare(cfg, out)?,
        Command::ConvergenceStudy => convergence_study(cfg, out)?,
    };
    let summary = json!({
        "command": command.name(),
        "status": "ok",
        "config": cfg,
        "results": results,
    });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Snapshot(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidDomain(_) => "invalid_domain",
        Error::Ellipticity { .. } => "ellipticity",
        Error::UnderResolvedGrid { .. } => "under_resolved_grid",
        Error::QuadratureNonConvergence { .. } => "quadrature",
        Error::RootFinding(_) => "root_finding",
        Error::ShapeMismatch { .. } => "shape_mismatch",
        Error::NonFinite(_) => "non_finite",
        Error::SingularSystem(_) => "singular_system",
        Error::NonUnitLambda(_) => "non_unit_lambda",
        Error::UnderResolvedKernel { .. } => "under_resolved_kernel",
        Error::InsufficientPadding { .. } => "insufficient_padding",
        Error::OutsideBox { .. } => "outside_box",
        Error::NonFiniteVelocity { .. } => "non_finite_velocity",
        Error::WindowUnderflow { .. } => "window_underflow",
        Error::Instability { .. } => "instability",
        Error::Config { .. } => "config",
        Error::ConfigParse(_) => "config_parse",
        Error::Snapshot(_) => "snapshot",
        Error::CheckFailed(_) => "check_failed",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
    }
}

fn write_failure(out: &Path, command: Command, e: &Error) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut record = json!({
        "command": command.name(),
        "status": "failed",
        "kind": error_kind(e),
        "message": e.to_string(),
    });
    match e {
        Error::WindowUnderflow { t0, history, .. } => {
            record["t0"] = json!(t0);
            record["history"] = json!(history);
        }
        Error::Config { key, .. } => record["key"] = json!(key),
        _ => {}
    }
    write_json(&out.join("failure.json"), &record)
}

/// `quantity,value,tolerance,within` rows; tolerance and verdict are blank when not applicable.
fn write_table(path: &Path, rows: &[(&str, f64, Option<f64>)]) -> Result<Value> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["quantity", "value", "tolerance", "within"])?;
    let mut obj = serde_json::Map::new();
    for &(name, value, tol) in rows {
        let (t, ok) = match tol {
            Some(t) => (format!("{t:e}"), (value.abs() <= t).to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([name.to_string(), format!("{value:e}"), t, ok])?;
        obj.insert(name.to_string(), json!(value));
    }
    w.flush()?;
    Ok(Value::Object(obj))
}

fn write_stream(out: &Path, name: &str, psi: &StreamState, time: f64) -> Result<()> {
    let dir = out.join("snapshots");
    fs::create_dir_all(&dir)?;
    Snapshot::of_stream(psi, "stream", time).write(&dir.join(format!("{name}.snap")))
}

fn solve_elliptic(cfg: &Config, out: &Path) -> Result<Value> {
    let run = cfg.run_config()?;
    if cfg.scenario.name == "manufactured" {
        let disc = build_basis(&run.domain, run.n_modes, run.vertical_modes, run.grid)?;
        let solver = EllipticSolver::new(&disc)?;
        let exact = random_stream(&disc, cfg.scenario.seed);
        let data = solver.data_of(&exact);
        let psi = solver.solve(&data)?;
        let rel_h = psi.h_distance(&exact) / exact.h_norm();
        let tol = cfg.tolerances.elliptic_recovery;
        let table = write_table(
            &out.join("elliptic.csv"),
            &[
                ("relative_h_error", rel_h, Some(tol)),
                ("relative_l2_error", psi.l2_distance(&exact) / exact.l2_norm(), None),
                ("galerkin_residual", solver.galerkin_residual(&psi, &data), None),
                ("circulation_deviation", psi.circulation_of().max_deviation(&data.j), None),
                ("compatibility_defect", compatibility_defect(&data), None),
                ("trace_spread", trace_spread(&psi), Some(cfg.tolerances.lateral_trace)),
            ],
        )?;
        write_stream(out, "solution", &psi, 0.0)?;
        if !(rel_h <= tol) {
            return Err(Error::CheckFailed(format!("relative recovery error {rel_h:e} above {tol:e}")));
        }
        return Ok(table);
    }
    let spec = scenario(&cfg.scenario.name, &run.domain, cfg.scenario.amplitude, cfg.scenario.seed)?;
    let sim = Simulation::new(run, spec.data)?;
    let (f, g) = sim.initial_fields();
    let (psi, triple) = sim.solve_at(&f, &g)?;
    let table = write_table(
        &out.join("elliptic.csv"),
        &[
            ("h_norm", psi.h_norm(), None),
            ("galerkin_residual", sim.solver.galerkin_residual(&psi, &triple), None),
            ("circulation_deviation", psi.circulation_of().max_deviation(&triple.j), None),
            ("compatibility_defect", compatibility_defect(&triple), None),
            ("stability_ratio", stability_ratio(&psi, &triple), None),
            ("trace_spread", trace_spread(&psi), Some(cfg.tolerances.lateral_trace)),
        ],
    )?;
    write_stream(out, "solution", &psi, 0.0)?;
    Ok(table)
}

/// March a simulation, streaming diagnostics rows to `path` and stream snapshots every `every` steps.
fn march_to(sim: &Simulation, path: &Path, out: &Path, every: usize) -> Result<(MarchSummary, f64)> {
    let mut w = csv::Writer::from_path(path)?;
    let mut first: Option<StreamState> = None;
    let mut drift = 0.0f64;
    let mut k = 0usize;
    let summary = sim.march(&mut |rec: &DiagnosticsRecord, psi: &StreamState| {
        w.serialize(rec)?;
        w.flush()?;
        match &first {
            Some(p) => drift = drift.max(psi.h_distance(p)),
            None => first = Some(psi.clone()),
        }
        if every > 0 && k % every == 0 {
            write_stream(out, &format!("stream_{k:06}"), psi, rec.time)?;
        }
        k += 1;
        Ok(())
    })?;
    let t = summary.records.last().map(|r| r.time).unwrap_or(0.0);
    write_stream(out, "final", &summary.final_stream, t)?;
    Ok((summary, drift))
}

/// Largest relative deviation from the initial value, per unit time.
fn relative_drift(records: &[DiagnosticsRecord], pick: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    let Some(r0) = records.first() else { return 0.0 };
    let v0 = pick(r0);
    let t = records.last().map(|r| r.time).unwrap_or(0.0);
    if v0 == 0.0 || t == 0.0 {
        return 0.0;
    }
    records.iter().map(|r| (pick(r) - v0).abs() / v0).fold(0.0, f64::max) / t
}

fn evolve(cfg: &Config, out: &Path) -> Result<Value> {
    let run = cfg.run_config()?;
    let spec = scenario(&cfg.scenario.name, &run.domain, cfg.scenario.amplitude, cfg.scenario.seed)?;
    let sim = Simulation::new(run, spec.data.clone())?;
    let (s, stream_drift) = march_to(&sim, &out.join("diagnostics.csv"), out, cfg.output.snapshot_every)?;
    let tol = &cfg.tolerances;
    let r = &s.records;
    let max = |pick: fn(&DiagnosticsRecord) -> f64| r.iter().map(pick).fold(0.0, |a: f64, b| a.max(b.abs()));
    let j_norm = sim.j0.l2_norm(&sim.disc);
    // Defect and stream drift are only promised by scenarios that declare them.
    let expects = |d: &str| spec.expected.iter().any(|e| e.diagnostic == d);
    let mut table = write_table(
        &out.join("drift.csv"),
        &[
            ("circulation_deviation", max(|r| r.circulation_deviation), Some(tol.circulation * (1.0 + j_norm))),
            ("f_l2_drift_per_unit_time", relative_drift(r, |r| r.f_l2), Some(tol.norm_drift_per_unit_time)),
            ("g_l2_drift_per_unit_time", relative_drift(r, |r| r.g_l2), Some(tol.norm_drift_per_unit_time)),
            ("compatibility_defect", max(|r| r.defect), expects("defect").then_some(tol.compatibility_defect)),
            ("stream_drift", stream_drift, expects("stream drift").then_some(tol.steady_drift)),
            ("trace_spread", max(|r| r.trace_spread), Some(tol.lateral_trace)),
            ("energy_ratio", max(|r| r.energy_ratio), None),
        ],
    )?;
    table["scenario"] = json!(spec.name);
    table["epsilon"] = json!(sim.epsilon());
    table["windows"] = json!(s.windows);
    table["max_picard_iterations"] = json!(s.max_iterations);
    table["steps"] = json!(r.len().saturating_sub(1));
    Ok(table)
}

fn sqg_compare(cfg: &Config, out: &Path) -> Result<Value> {
    let run = cfg.run_config()?;
    if !run.domain.lambda.is_unit() {
        return Err(Error::NonUnitLambda(format!("{:?}", run.domain.lambda)));
    }
    let disc = build_basis(&run.domain, run.n_modes, run.vertical_modes, run.grid)?;
    let model = SqgModel::new(&disc);
    let amps = [cfg.sqg.amplitudes[0], cfg.sqg.amplitudes[1]];
    let a0 = sqg::two_mode_datum(&disc, amps)?;
    let initial = SqgState {
        coeffs: a0.clone(),
        time: 0.0,
    };
    let states = sqg::run(&model, &initial, cfg.sqg.dt, cfg.sqg.t_final, cfg.sqg.record_every)?;
    let heights: Vec<f64> = cfg.sqg.heights.iter().map(|f| f * disc.height()).collect();
    let records = harmonic_extension_circulation(&model, &states, &heights);
    sqg::write_records(fs::File::create(out.join("sqg.csv"))?, &heights, &records)?;

    let c0 = &records[0].circulation;
    let relative: Vec<f64> = (0..heights.len())
        .map(|i| records.iter().map(|r| r.drift[i].abs()).fold(0.0, f64::max) / c0[i].abs().max(f64::MIN_POSITIVE))
        .collect();
    let obstruction: Vec<f64> = (0..heights.len())
        .map(|i| records.iter().map(|r| r.obstruction[i].abs()).fold(0.0, f64::max))
        .collect();
    let last = states.last().expect("trajectory has the initial state");
    let l2_drift = if last.time > 0.0 {
        (last.l2_norm() - initial.l2_norm()).abs() / initial.l2_norm() / last.time
    } else {
        0.0
    };

    let qg_run = RunConfig {
        t_final: cfg.sqg.t_final,
        ..run
    };
    let sim = Simulation::new(qg_run, model.matched_problem(&a0))?;
    let (s, _) = march_to(&sim, &out.join("qg_diagnostics.csv"), out, cfg.output.snapshot_every)?;
    let qg_drift = s.records.iter().map(|r| r.circulation_deviation).fold(0.0, f64::max);
    Ok(json!({
        "heights": heights,
        "sqg_relative_circulation_drift": relative,
        "sqg_obstruction_max": obstruction,
        "sqg_l2_drift_per_unit_time": l2_drift,
        "qg_circulation_drift": qg_drift,
        "qg_tolerance": cfg.tolerances.circulation,
        "sqg_min_relative_drift": cfg.tolerances.sqg_min_relative_drift,
    }))
}

/// Observed order between successive rows: `log(e₁/e₂) / log(h₁/h₂)`.
pub fn observed_orders(spacing: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| {
            if i == 0 || errors[i] <= 0.0 || errors[i - 1] <= 0.0 {
                None
            } else {
                Some((errors[i - 1] / errors[i]).ln() / (spacing[i - 1] / spacing[i]).ln())
            }
        })
        .collect()
}

fn convergence_study(cfg: &Config, out: &Path) -> Result<Value> {
    let base = cfg.run_config()?;
    let mut spacing = Vec::new();
    let mut eps = Vec::new();
    let mut f_drift = Vec::new();
    let mut g_drift = Vec::new();
    for &level in &cfg.convergence.levels {
        let grid = match base.domain.shape {
            Shape::Rectangle { .. } => GridResolution::Cartesian { nx: level, ny: level },
            Shape::Disk { .. } => GridResolution::Polar {
                nr: level,
                ntheta: 2 * level,
            },
        };
        let run = RunConfig { grid, ..base.clone() };
        let spec = scenario(&cfg.scenario.name, &run.domain, cfg.scenario.amplitude, cfg.scenario.seed)?;
        let sim = Simulation::new(run, spec.data)?;
        let s = sim.march(&mut |_, _| Ok(()))?;
        spacing.push(sim.grid.spacing());
        eps.push(sim.epsilon());
        f_drift.push(relative_drift(&s.records, |r| r.f_l2));
        g_drift.push(relative_drift(&s.records, |r| r.g_l2));
        log::info!("level {level}: F drift {:e}, G drift {:e}", f_drift.last().unwrap(), g_drift.last().unwrap());
    }
    let f_order = observed_orders(&spacing, &f_drift);
    let g_order = observed_orders(&spacing, &g_drift);
    let mut w = csv::Writer::from_path(out.join("convergence.csv"))?;
    w.write_record(["level", "spacing", "epsilon", "f_drift", "g_drift", "f_order", "g_order"])?;
    let fmt = |o: Option<f64>| o.map(|v| v.to_string()).unwrap_or_default();
    for (i, level) in cfg.convergence.levels.iter().enumerate() {
        w.write_record([
            level.to_string(),
            spacing[i].to_string(),
            eps[i].to_string(),
            f_drift[i].to_string(),
            g_drift[i].to_string(),
            fmt(f_order[i]),
            fmt(g_order[i]),
        ])?;
    }
    w.flush()?;
    Ok(json!({
        "levels": cfg.convergence.levels,
        "spacing": spacing,
        "f_drift_per_unit_time": f_drift,
        "g_drift_per_unit_time": g_drift,
        "f_order": f_order,
        "g_order": g_order,
    }))
}
