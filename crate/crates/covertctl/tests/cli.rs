use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn covertctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covertctl"))
        .args(args)
        .env("COVERTCTL_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CHI_SQUARE: &str = r#"{
  "system": {"gain_a": 0.6, "noise": {"kind": "Gaussian", "sigma_z": 1.0}, "stationary_init": true},
  "controller": {"kind": "ResetOnce", "tau": 1},
  "detector": {"kind": "ResetChiSquare", "t": 2.0, "tau": 1},
  "trials": 2000,
  "horizon_n": 4,
  "master_seed": 3
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn simulate_then_detect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CHI_SQUARE);
    for name in ["traj.csv", "traj.json"] {
        let traj = dir.path().join(name);
        let o = covertctl(&[
            "simulate",
            "--config",
            &cfg,
            "--out",
            traj.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        if name.ends_with(".csv") {
            let text = fs::read_to_string(&traj).unwrap();
            assert_eq!(text.lines().next(), Some("n,x,u"));
            assert_eq!(text.lines().count(), 6);
        }
        let o = covertctl(&[
            "detect",
            "--config",
            &cfg,
            "--trajectory",
            traj.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let d: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(d["reject_null"].is_boolean());
        assert_eq!(d["threshold"], 4.0);
    }
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CHI_SQUARE);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(
        covertctl(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(
        covertctl(&["simulate", "--config", &cfg, "--out", b.to_str().unwrap()])
            .status
            .success()
    );
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn experiment_and_sweep_append_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CHI_SQUARE);
    let out = dir.path().join("results.csv");
    let out_s = out.to_str().unwrap();

    let o = covertctl(&["experiment", "--config", &cfg, "--out", out_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("alpha="));

    let o = covertctl(&[
        "sweep",
        "--config",
        &cfg,
        "--param",
        "detector.t",
        "--values",
        "1,2,3",
        "--out",
        out_s,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);

    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(
        lines[0],
        "param,value,alpha,beta,alpha_ci,beta_ci,trials,verdict"
    );
    assert!(lines[2].starts_with("detector.t,1,"));
    let mirror: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap())
            .unwrap();
    assert_eq!(mirror["records"].as_array().unwrap().len(), 4);
}

#[test]
fn sweep_with_unknown_parameter_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CHI_SQUARE);
    let out = dir.path().join("r.csv");
    let o = covertctl(&[
        "sweep",
        "--config",
        &cfg,
        "--param",
        "detector.zeta",
        "--values",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn too_few_trials_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", &CHI_SQUARE.replace("2000", "10"));
    let out = dir.path().join("r.csv");
    let o = covertctl(&[
        "experiment",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("trials"));
}

#[test]
fn io_errors_exit_two() {
    let o = covertctl(&[
        "simulate",
        "--config",
        "/nonexistent/cfg.json",
        "--out",
        "x.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CHI_SQUARE);
    let missing = dir.path().join("no/such/dir/out.csv");
    let o = covertctl(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unstable_stationary_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", &CHI_SQUARE.replace("0.6", "1.4"));
    let o = covertctl(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("t.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_default_grids_pass() {
    for oracle in ["trace", "inverse", "logdet"] {
        let o = covertctl(&["verify", "--oracle", oracle]);
        assert_eq!(o.status.code(), Some(0), "{oracle}: {}", stderr(&o));
        assert!(stdout(&o).contains("PASS"));
    }
}

#[test]
fn verify_accepts_a_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(
        dir.path(),
        "grid.json",
        r#"{"gains":[0.4,-1.2],"horizons":[3,10]}"#,
    );
    let o = covertctl(&["verify", "--oracle", "covariance", "--grid", &grid]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("covariance: 10 cases"));
}

#[test]
fn bounds_prints_table_and_json() {
    let o = covertctl(&["bounds", "--which", "reset_covert", "--epsilon", "0.5"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.795"));

    let o = covertctl(&[
        "bounds",
        "--which",
        "covert_gain",
        "--a",
        "0.5",
        "--epsilon",
        "0.1,0.2",
        "--json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(covertctl(&[]).status.code(), Some(1));
    assert_eq!(covertctl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(covertctl(&["--help"]).status.code(), Some(0));
}
