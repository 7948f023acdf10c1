use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use statrs::function::gamma::{gamma, gamma_lr};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kolcouple"));
    c.env_remove("KOLCOUPLE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn kolcouple")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn tv_config(check: &str) -> String {
    format!(
        r#"{{
  "schema": 1,
  "kind": "tv_table",
  "model": {{ "k": 1, "z": [0.0, 1.0] }},
  "numerics": {{ "times": [10, 100, 1000, 10000] }},
  "sampling": {{ "replicates": 1, "master_seed": 0 }}{check}
}}"#
    )
}

#[test]
fn kernel_dump_has_seventeen_digits() {
    let o = run(&["kernel-dump", "--k", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["k"], 2);
    let h = v["H"].as_array().unwrap();
    assert_eq!(h.len(), 3);
    assert_eq!(h[2][0].as_f64().unwrap(), 0.5);
    let third = v["V"][1][1].as_f64().unwrap();
    assert_eq!(third, 1.0 / 3.0);
    let l11 = v["L"][1][1].as_f64().unwrap();
    assert!((l11 - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-16);
    // every number printed as d.dddddddddddddddde+xx
    let num = text.split(|c: char| c == '[' || c == ']' || c == ',' || c.is_whitespace()).find(|s| s.contains('e')).unwrap();
    let mantissa = num.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17, "{num}");
}

#[test]
fn oracle_area_matches_closed_form() {
    let o = run(&["oracle-area", "--a", "0.75", "--t", "2"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let density: f64 = v["density"].as_str().unwrap().parse().unwrap();
    let tail: f64 = v["tail"].as_str().unwrap().parse().unwrap();
    let (a, u) = (0.75f64, 2.0f64);
    let expect_density = 2f64.cbrt() / (3f64.powf(2.0 / 3.0) * gamma(1.0 / 3.0)) * a / u.powf(4.0 / 3.0)
        * (-2.0 * a.powi(3) / (9.0 * u)).exp();
    let expect_tail = gamma_lr(1.0 / 3.0, 2.0 * a.powi(3) / (9.0 * u));
    assert!((density / expect_density - 1.0).abs() < 1e-12);
    assert!((tail / expect_tail - 1.0).abs() < 1e-12);
    let digits = v["tail"].as_str().unwrap().split('e').next().unwrap().replace('.', "");
    assert_eq!(digits.len(), 16);
}

#[test]
fn path_dump_columns() {
    let o = run(&["path-dump", "--k", "2", "--x", "1,0,-1", "--tmax", "1", "--dt", "0.25", "--seed", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,I0,I1,I2");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0], vec![0.0, 1.0, 0.0, -1.0]);
    assert_eq!(rows[4][0], 1.0);
    let again = stdout(&run(&["path-dump", "--k", "2", "--x", "1,0,-1", "--tmax", "1", "--dt", "0.25", "--seed", "5"]));
    assert_eq!(text, again);
}

#[test]
fn simulate_bck_writes_time_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = run(&[
        "simulate-bck", "--scale", "1", "--dt0", "0.01", "--tmax", "10", "--reps", "500", "--seed", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,survival,ci_lo,ci_hi,n_at_risk");
    for l in lines {
        let cells: Vec<&str> = l.split(',').collect();
        assert_eq!(cells.len(), 5);
        let n: usize = cells[4].parse().unwrap();
        assert!(n <= 500);
    }
}

#[test]
fn simulate_lookahead_writes_block_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("blocks.csv");
    let o = run(&[
        "simulate-lookahead", "--k", "1", "--z", "1,0", "--alpha", "2", "--nmax", "8", "--reps", "1000",
        "--seed", "4", "--mode", "scalar", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "block_n,S_n,survival,ci_lo,ci_hi");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].starts_with("1,2"));
}

#[test]
fn check_passes_and_fails_with_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.json", &tv_config(r#", "check": { "slope": -1.5, "tolerance": 1e-3 }"#));
    let o = run(&["run", "--config", &good, "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["kind"], "tv_table");
    assert!(report["build_id"].is_string());
    assert!((report["fit"]["slope"].as_f64().unwrap() + 1.5).abs() < 1e-3);

    let bad = write_config(dir.path(), "bad.json", &tv_config(r#", "check": { "slope": -0.5, "tolerance": 1e-3 }"#));
    let o = run(&["run", "--config", &bad, "--check"]);
    assert_eq!(o.status.code(), Some(3));
    // without --check the same run succeeds
    assert_eq!(run(&["run", "--config", &bad]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_two_and_list_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "broken.json",
        r#"{
  "schema": 1,
  "kind": "lookahead_scalar",
  "model": { "k": 1, "z": [1.0] },
  "sampling": { "replicates": 0, "master_seed": 0 },
  "schedule": { "alpha": 0.5 }
}"#,
    );
    let o = run(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for field in ["model.z", "sampling.replicates", "schedule.alpha"] {
        assert!(err.contains(field), "missing {field} in: {err}");
    }

    let unknown = write_config(dir.path(), "unknown.json", &tv_config(r#", "colour": "red""#));
    assert_eq!(run(&["run", "--config", &unknown]).status.code(), Some(2));

    // a config for one kind handed to another subcommand
    let tv = write_config(dir.path(), "tv.json", &tv_config(""));
    assert_eq!(run(&["simulate-bck", "--config", &tv]).status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let base = [
        "bounded-horizon", "--k", "1", "--z", "1,0", "--nmax", "50", "--reps", "2000", "--seed", "9", "--out",
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut curves = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("c{i}.csv"));
        let mut args: Vec<&str> = base.to_vec();
        let p = out.to_str().unwrap().to_owned();
        args.push(&p);
        let o = bin().args(&args).env("KOLCOUPLE_THREADS", threads).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        curves.push(std::fs::read_to_string(&out).unwrap());
    }
    assert_eq!(curves[0], curves[1]);

    let o = bin().args(["kernel-dump", "--k", "0"]).env("KOLCOUPLE_THREADS", "0").output().unwrap();
    // thread count is only consulted by simulations
    assert!(o.status.success());
    let mut args: Vec<&str> = base.to_vec();
    args.pop();
    let o = bin().args(&args).env("KOLCOUPLE_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reps_override_wins_over_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "hz.json",
        r#"{
  "schema": 1,
  "kind": "bounded_horizon",
  "model": { "k": 1, "z": [1.0, 0.0] },
  "numerics": { "n_max": 20 },
  "sampling": { "replicates": 100000, "master_seed": 2 }
}"#,
    );
    let o = run(&["run", "--config", &cfg, "--reps-override", "300"]);
    assert!(o.status.success());
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["curve"]["replicates"], 300);
    assert_eq!(report["config"]["sampling"]["replicates"], 300);
}
