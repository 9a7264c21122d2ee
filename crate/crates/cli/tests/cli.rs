use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn degenloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degenloop")).args(args).output().expect("spawn degenloop")
}

fn minimal_config() -> Value {
    json!({
        "schema_version": 1,
        "policy": { "tag": "random" },
        "m0": 10,
        "l": 2,
        "horizon": 100,
        "delta_range": [-0.01, 0.01],
        "mu0_range": [-1.0, 1.0],
        "report_interval": 10,
        "n_runs": 1
    })
}

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// CSV rows with the leading series column dropped.
fn numeric_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|line| line.split_once(',').unwrap().1.to_string()).collect()
}

#[test]
fn minimal_run_writes_three_files() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "c.json", &minimal_config());
    let out = tmp.path().join("out");
    let res = degenloop(&["run", "--config", s(&config), "--out", s(&out)]);
    assert!(res.status.success(), "{}", stderr(&res));
    let mut names: Vec<String> =
        fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["config.echo.json", "summary.json", "trajectory.csv"]);

    let trajectory = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = trajectory.lines();
    assert_eq!(lines.next().unwrap(), "series,run_id,t,pool_size,l2,sup,l2_speed,sup_speed");
    assert_eq!(lines.count(), 10);

    let echo: Value = serde_json::from_str(&fs::read_to_string(out.join("config.echo.json")).unwrap()).unwrap();
    assert_eq!(echo["schema_version"], 1);
    assert_eq!(echo["l"], 2);
    assert!(echo["master_seed"].is_u64());
}

#[test]
fn missing_field_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = minimal_config();
    config.as_object_mut().unwrap().remove("l");
    let path = write_config(tmp.path(), "c.json", &config);
    let res = degenloop(&["run", "--config", s(&path), "--out", s(&tmp.path().join("out"))]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("`l`"), "{}", stderr(&res));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn bad_configs_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let mut too_many = minimal_config();
    too_many["l"] = json!(11);
    let mut unversioned = minimal_config();
    unversioned.as_object_mut().unwrap().remove("schema_version");
    for (name, config) in [("l_gt_m0.json", too_many), ("unversioned.json", unversioned)] {
        let path = write_config(tmp.path(), name, &config);
        let res = degenloop(&["run", "--config", s(&path), "--out", s(&tmp.path().join(name))]);
        assert_eq!(res.status.code(), Some(1), "{name}: {}", stderr(&res));
    }
    let res = degenloop(&["run", "--config", s(&tmp.path().join("absent.json")), "--out", s(tmp.path())]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = minimal_config();
    config["policy"] = json!({ "tag": "ts" });
    config["n_runs"] = json!(4);
    let path = write_config(tmp.path(), "c.json", &config);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(degenloop(&["--jobs", "1", "run", "--config", s(&path), "--out", s(&a)]).status.success());
    assert!(degenloop(&["--jobs", "3", "run", "--config", s(&path), "--out", s(&b)]).status.success());
    for file in ["trajectory.csv", "summary.json", "config.echo.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }

    let c = tmp.path().join("c");
    assert!(degenloop(&["run", "--config", s(&path), "--out", s(&c), "--seed", "5"]).status.success());
    assert_ne!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(c.join("trajectory.csv")).unwrap());
}

#[test]
fn unknown_preset_and_check_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let res = degenloop(&["figure", "fig9", "--out", s(tmp.path())]);
    assert_eq!(res.status.code(), Some(1));
    let res = degenloop(&["verify", "theorem3", "--out", s(tmp.path())]);
    assert_eq!(res.status.code(), Some(1));
    let res = degenloop(&["--jobs", "0", "verify", "threshold", "--out", s(tmp.path())]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn noise_sweep_writes_subruns_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = minimal_config();
    config["policy"] = json!({ "tag": "oracle" });
    let path = write_config(tmp.path(), "c.json", &config);
    let out = tmp.path().join("sweep");
    let res = degenloop(&["sweep", "--param", "noise", "--values", "0,1", "--config", s(&path), "--out", s(&out)]);
    assert!(res.status.success(), "{}", stderr(&res));
    for sub in ["noise_0", "noise_1"] {
        assert!(out.join(sub).join("trajectory.csv").is_file(), "{sub}");
    }
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("param,value,series,t,n_runs,"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("noise,0,oracle_eps0,100,1,"));
    assert!(rows[1].starts_with("noise,1,oracle_eps1,100,1,"));
}

#[test]
fn pool_size_below_l_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "c.json", &minimal_config());
    let out = tmp.path().join("sweep");
    let res = degenloop(&["sweep", "--param", "pool_size", "--values", "10,1", "--config", s(&path), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("pool_size"), "{}", stderr(&res));
    assert!(!out.exists());
}

#[test]
fn growth_sweep_matches_individual_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = minimal_config();
    config["policy"] = json!({ "tag": "ucb" });
    config["n_runs"] = json!(2);
    let path = write_config(tmp.path(), "c.json", &config);
    let out = tmp.path().join("sweep");
    let res = degenloop(&["sweep", "--param", "growth", "--values", "0,0.5", "--config", s(&path), "--out", s(&out)]);
    assert!(res.status.success(), "{}", stderr(&res));

    config["eta"] = json!(0.5);
    let single = write_config(tmp.path(), "eta.json", &config);
    let run = tmp.path().join("run");
    assert!(degenloop(&["run", "--config", s(&single), "--out", s(&run)]).status.success());
    assert_eq!(numeric_rows(&out.join("growth_0.5").join("trajectory.csv")), numeric_rows(&run.join("trajectory.csv")));
}

#[test]
fn exact_verify_checks_pass_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    for check in ["threshold", "linear_regimes"] {
        let res = degenloop(&["verify", check, "--out", s(tmp.path())]);
        assert!(res.status.success(), "{check}: {}", stderr(&res));
        let stdout = String::from_utf8_lossy(&res.stdout);
        assert!(stdout.lines().any(|l| l.starts_with("PASS ")));
        assert!(!stdout.contains("FAIL"));
        let report: Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join(format!("verify_{check}.json"))).unwrap())
                .unwrap();
        assert_eq!(report["check"], check);
        assert_eq!(report["passed"], true);
        assert!(report["assertions"].as_array().unwrap().iter().all(|a| a["passed"] == true));
    }
}

#[test]
fn figure_preset_writes_aggregates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig5");
    let res = degenloop(&["figure", "fig5", "--out", s(&out), "--epsilon-grid", "0,2"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let aggregate = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let series: std::collections::BTreeSet<&str> =
        aggregate.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(series.into_iter().collect::<Vec<_>>(), ["oracle_eps0", "oracle_eps2"]);
    assert_eq!(aggregate.lines().count(), 1 + 2 * 40);
}
