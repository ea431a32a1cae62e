use std::fs;
use std::path::Path;

use qgcyl::cli::{main_with_args, observed_orders, run, Command};
use qgcyl::config::Config;
use qgcyl::Error;

const SMALL: &str = r#"
[resolution]
n_modes = 24
vertical_modes = 4

[time]
dt = 0.05
t_final = 0.1
window_steps = 2
"#;

fn cli(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("qgcyl").chain(args.iter().copied()))
}

fn table(path: &Path) -> Vec<(String, f64, String)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|row| {
            let row = row.unwrap();
            (row[0].to_string(), row[1].parse().unwrap(), row[3].to_string())
        })
        .collect()
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = Config::from_str("[domain]\nheight = 2.0\n").unwrap();
    assert_eq!(cfg.domain.height, 2.0);
    let d = Config::default();
    assert_eq!(cfg.resolution, d.resolution);
    assert_eq!(cfg.time, d.time);
    assert_eq!(cfg.tolerances, d.tolerances);
    assert_eq!(Config::from_str("").unwrap(), d);
}

#[test]
fn negative_height_is_named() {
    match Config::from_str("[domain]\nheight = -1.0\n") {
        Err(Error::Config { key, .. }) => assert_eq!(key, "domain.height"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_report_their_line() {
    let text = "[time]\ndt = 0.1\n\n[picard]\ntolerence = 1e-6\n";
    match Config::from_str(text) {
        Err(Error::ConfigParse(msg)) => {
            assert!(msg.contains("line 5"), "{msg}");
            assert!(msg.contains("tolerence"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn environment_overrides_are_typed() {
    let env = [
        ("QGCYL_TIME__DT".to_string(), "0.02".to_string()),
        ("QGCYL_SCENARIO__NAME".to_string(), "plates".to_string()),
        ("OTHER_TIME__DT".to_string(), "9".to_string()),
    ];
    let cfg = Config::from_str_with_env(SMALL, env).unwrap();
    assert_eq!(cfg.time.dt, 0.02);
    assert_eq!(cfg.scenario.name, "plates");
    assert_eq!(cfg.resolution.n_modes, 24);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cli(&["frobnicate"]), 2);
    assert_eq!(cli(&["evolve", "--threads", "many"]), 2);
    assert_eq!(cli(&[]), 2);
}

#[test]
fn failures_leave_a_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[domain]\nheight = -1.0\n").unwrap();
    let out = dir.path().join("out");
    let code = cli(&["evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("failure.json")).unwrap()).unwrap();
    assert_eq!(record["status"], "failed");
    assert_eq!(record["command"], "evolve");
    assert_eq!(record["kind"], "config");
    assert_eq!(record["key"], "domain.height");
}

#[test]
fn manufactured_solve_recovers_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Config::from_str(SMALL).unwrap();
    cfg.scenario.name = "manufactured".into();
    cfg.scenario.seed = 5;
    let summary = run(Command::SolveElliptic, &cfg, dir.path()).unwrap();
    assert_eq!(summary["status"], "ok");
    let rows = table(&dir.path().join("elliptic.csv"));
    let (_, err, within) = rows.iter().find(|r| r.0 == "relative_h_error").unwrap();
    assert!(*err <= 1e-10, "{err:e}");
    assert_eq!(within, "true");
    assert!(dir.path().join("snapshots/solution.snap").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn single_thread_runs_are_bit_reproducible() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let cfg_path = dirs[0].path().join("run.toml");
    fs::write(&cfg_path, format!("{SMALL}\n[scenario]\nname = \"random\"\n")).unwrap();
    for d in &dirs {
        let out = d.path().join("out");
        let code = cli(&[
            "evolve",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            "1",
            "--seed",
            "9",
        ]);
        assert_eq!(code, 0);
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("out/diagnostics.csv")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
}

#[test]
fn steady_disk_evolution_writes_its_drift_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SMALL}\n[domain]\nshape = \"disk\"\n\n[scenario]\nname = \"steady-disk\"\n\n[output]\nsnapshot_every = 1\n"
    );
    let cfg = Config::from_str(&text).unwrap();
    run(Command::Evolve, &cfg, dir.path()).unwrap();
    let rows = table(&dir.path().join("drift.csv"));
    let (_, drift, within) = rows.iter().find(|r| r.0 == "stream_drift").unwrap();
    assert!(*drift <= 1e-6, "{drift:e}");
    assert_eq!(within, "true");
    assert!(dir.path().join("snapshots/final.snap").exists());
    assert!(dir.path().join("snapshots/stream_000001.snap").exists());
}

#[test]
fn observed_orders_follow_the_error_ratios() {
    let h = [0.1, 0.05, 0.025];
    let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
    let orders = observed_orders(&h, &e);
    assert_eq!(orders[0], None);
    for o in &orders[1..] {
        assert!((o.unwrap() - 2.0).abs() < 1e-12);
    }
    assert_eq!(observed_orders(&[0.1, 0.05], &[0.0, 0.0])[1], None);
}
